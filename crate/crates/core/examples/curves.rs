//! Sweeps targets on two clips and prints a complexity-distortion table as CSV.

use sgcc::codec::{decode_sequence, encode_sequence, generate_clip, ClipKind, CostProfile, EncoderConfig};
use sgcc::eval::{emit_curves, CurvePoint};
use sgcc::pipeline::{frame_qps, plan_sequence, simulate, SimulationInput};
use sgcc::solver::MixStrategy;
use sgcc::{FrameLayout, ModelParams};

fn main() -> sgcc::Result<()> {
    let layout = FrameLayout::new(256, 128, 64)?;
    let params = ModelParams::table3();
    let profile = CostProfile::default();
    let mut points = Vec::new();
    for (kind, seed) in [(ClipKind::Gradient, 1), (ClipKind::Texture, 2)] {
        let clip = generate_clip(kind, &layout, 9, seed)?;
        for qp in [27, 32, 37] {
            let seq = encode_sequence(&clip.frames, &EncoderConfig::with_qp(qp))?;
            let reference = decode_sequence(&seq, None)?;
            let input = SimulationInput {
                name: kind.name(),
                seq: &seq,
                source: &clip.frames,
                attention: &clip.saliency,
                profile: &profile,
            };
            for t in [0.05, 0.10, 0.15, 0.20, 0.25] {
                let planned = plan_sequence(&seq.gop, &frame_qps(&seq), &clip.saliency, t, &params, MixStrategy::Live)?;
                let plans: Vec<_> = planned.into_iter().map(|p| p.plan).collect();
                let s = simulate(&input, &plans, Some(t), Some(&reference))?.summary;
                points.push(CurvePoint {
                    sequence: s.sequence,
                    qp,
                    target: t,
                    achieved: s.achieved,
                    delta_psnr: s.delta_psnr,
                    delta_ew_psnr: s.delta_ew_psnr.unwrap_or(f64::NAN),
                });
            }
        }
    }
    print!("{}", emit_curves(&points)?);
    Ok(())
}
