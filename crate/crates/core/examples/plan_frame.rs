//! Plans one frame for a few targets and prints the per-CTU decisions.

use sgcc::solver::{plan_frame_with, MixStrategy, PlanOptions};
use sgcc::{FrameLayout, ModelParams, QpBucket, SaliencyMap};

fn main() -> sgcc::Result<()> {
    let layout = FrameLayout::new(256, 64, 64)?;
    let saliency = SaliencyMap::new(layout, vec![0.1, 0.2, 0.3, 0.4])?;
    let params = ModelParams::table3();

    for target in [0.0, 0.10, 0.25, 0.30] {
        let opts = PlanOptions {
            strategy: MixStrategy::Live,
            intra: false,
        };
        let (plan, diag) = plan_frame_with(&saliency, target, QpBucket::Qp32, &params, &opts)?;
        println!(
            "target {target:.2}: branch {:?}, f = {:?}, g = {:?}, predicted {:.4}",
            plan.branch, plan.f, plan.g, plan.predicted_reduction
        );
        if let Some(mix) = diag.mix {
            println!("    mix (n1, n2, n3) = ({}, {}, {})", mix.n1, mix.n2, mix.n3);
        }
    }

    match plan_frame_with(&saliency, 0.6, QpBucket::Qp32, &params, &PlanOptions::default()) {
        Ok(_) => println!("0.60 was feasible"),
        Err(e) => println!("target 0.60: {e}"),
    }
    Ok(())
}
