//! Per-frame drift caused by planning: how much worse each picture gets
//! because its references were themselves simplified.

use sgcc::codec::{encode_sequence, generate_clip, ClipKind, CostProfile, EncoderConfig};
use sgcc::pipeline::{frame_qps, plan_sequence, simulate, SimulationInput};
use sgcc::solver::MixStrategy;
use sgcc::{FrameLayout, ModelParams};

fn main() -> sgcc::Result<()> {
    let layout = FrameLayout::new(256, 128, 64)?;
    let clip = generate_clip(ClipKind::Gradient, &layout, 41, 4)?;
    let seq = encode_sequence(&clip.frames, &EncoderConfig::default())?;
    let params = ModelParams::table3();
    let planned = plan_sequence(&seq.gop, &frame_qps(&seq), &clip.saliency, 0.2, &params, MixStrategy::Live)?;
    let plans: Vec<_> = planned.into_iter().map(|p| p.plan).collect();
    let input = SimulationInput {
        name: "gradient",
        seq: &seq,
        source: &clip.frames,
        attention: &clip.saliency,
        profile: &CostProfile::default(),
    };
    let sim = simulate(&input, &plans, Some(0.2), None)?;
    for row in &sim.frames {
        let bar = "#".repeat((row.propagation_drop * 2.0).round().max(0.0) as usize);
        println!("{:3} {} {:6.2} dB {bar}", row.poc, row.frame_type, row.propagation_drop);
    }
    println!("mean B-frame drop {:.2} dB", sim.summary.mean_b_drop);
    Ok(())
}
