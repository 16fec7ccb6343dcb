//! Plans and decodes a clip at several targets and reports how closely the
//! measured reduction follows the request. Pass a parameter file written by
//! `sgcc fit` as the first argument to use fitted coefficients.

use sgcc::codec::{decode_sequence, encode_sequence, generate_clip, ClipKind, CostProfile, EncoderConfig};
use sgcc::eval::control_error_report;
use sgcc::pipeline::{frame_qps, plan_sequence, simulate, SimulationInput};
use sgcc::solver::MixStrategy;
use sgcc::{FrameLayout, ModelParams};

fn main() -> sgcc::Result<()> {
    let params = match std::env::args().nth(1) {
        Some(path) => ModelParams::from_json(&std::fs::read_to_string(path)?)?,
        None => ModelParams::table3(),
    };
    let layout = FrameLayout::new(416, 240, 64)?;
    let clip = generate_clip(ClipKind::Texture, &layout, 17, 21)?;
    let seq = encode_sequence(&clip.frames, &EncoderConfig::default())?;
    let profile = CostProfile::default();
    let reference = decode_sequence(&seq, None)?;
    let input = SimulationInput {
        name: "texture",
        seq: &seq,
        source: &clip.frames,
        attention: &clip.saliency,
        profile: &profile,
    };

    let targets = [0.05, 0.10, 0.20, 0.30];
    let mut achieved = Vec::new();
    println!("target  achieved  dPSNR  dEW-PSNR");
    for &t in &targets {
        let planned = plan_sequence(&seq.gop, &frame_qps(&seq), &clip.saliency, t, &params, MixStrategy::Live)?;
        let plans: Vec<_> = planned.into_iter().map(|p| p.plan).collect();
        let sim = simulate(&input, &plans, Some(t), Some(&reference))?;
        let s = &sim.summary;
        println!(
            "{t:6.2}  {:8.4}  {:5.2}  {:8.2}",
            s.achieved,
            s.delta_psnr,
            s.delta_ew_psnr.unwrap_or(f64::NAN)
        );
        achieved.push(s.achieved);
    }
    let report = control_error_report(&targets, &achieved)?;
    println!("MAE {:.2} points, MRE {:.1}%", report.mae, report.mre);
    Ok(())
}
