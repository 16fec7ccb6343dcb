//! Fitting, planning and simulation on generated clips.

use std::sync::OnceLock;

use sgcc::codec::{encode_sequence, generate_clip, ClipKind, CostProfile, EncoderConfig, ProxySequence};
use sgcc::eval::{df_rank_fidelity, measure_mar};
use sgcc::pipeline::{fit_params, frame_qps, plan_sequence, simulate, FitReport, Simulation, SimulationInput, TrainingClip};
use sgcc::solver::MixStrategy;
use sgcc::{ControlPlan, FrameLayout, ModelParams, SaliencyMap};

const FRAMES: usize = 17;

fn layout() -> FrameLayout {
    FrameLayout::new(256, 128, 64).unwrap()
}

fn fitted() -> &'static (ModelParams, FitReport) {
    static FIT: OnceLock<(ModelParams, FitReport)> = OnceLock::new();
    FIT.get_or_init(|| {
        let clips: Vec<TrainingClip> = [(ClipKind::Gradient, 11), (ClipKind::Texture, 12)]
            .into_iter()
            .map(|(kind, seed)| {
                let c = generate_clip(kind, &layout(), FRAMES, seed).unwrap();
                TrainingClip {
                    name: kind.name().to_string(),
                    frames: c.frames,
                    saliency: c.saliency,
                }
            })
            .collect();
        fit_params(&clips, &EncoderConfig::default(), &CostProfile::default()).unwrap()
    })
}

struct TestClip {
    frames: Vec<sgcc::codec::Plane>,
    saliency: Vec<SaliencyMap>,
    seq: ProxySequence,
}

fn test_clip(kind: ClipKind, seed: u64) -> TestClip {
    let c = generate_clip(kind, &layout(), FRAMES, seed).unwrap();
    let seq = encode_sequence(&c.frames, &EncoderConfig::default()).unwrap();
    TestClip {
        frames: c.frames,
        saliency: c.saliency,
        seq,
    }
}

fn run(clip: &TestClip, plans: &[ControlPlan], target: Option<f64>) -> Simulation {
    let input = SimulationInput {
        name: "clip",
        seq: &clip.seq,
        source: &clip.frames,
        attention: &clip.saliency,
        profile: &CostProfile::default(),
    };
    simulate(&input, plans, target, None).unwrap()
}

fn planned(clip: &TestClip, target: f64) -> Vec<ControlPlan> {
    let (params, _) = fitted();
    plan_sequence(&clip.seq.gop, &frame_qps(&clip.seq), &clip.saliency, target, params, MixStrategy::Live)
        .unwrap()
        .into_iter()
        .map(|p| p.plan)
        .collect()
}

#[test]
fn deblocking_fit_at_qp32_rises_with_saliency() {
    let (_, report) = fitted();
    let b = report.buckets.iter().find(|b| b.qp == 32).unwrap();
    assert!(b.df.a > 0.0 && b.df.b > 0.0, "{:?}", b.df);
    assert!(b.df.r_square >= 0.5, "{:?}", b.df);
}

#[test]
fn mc_slope_at_qp32_near_reference_scale() {
    let (_, report) = fitted();
    let c = report.buckets.iter().find(|b| b.qp == 32).unwrap().mc.c;
    assert!((c - 0.0665).abs() <= 0.5 * 0.0665, "c = {c}");
}

#[test]
fn distortion_cubic_fits_proxy_ratios() {
    let (params, report) = fitted();
    assert!(report.cubic.r_square >= 0.95, "{:?}", report.cubic);
    assert_eq!(params.buckets.len(), 4);
}

#[test]
fn deblocking_distortion_ranks_with_saliency() {
    let clip = test_clip(ClipKind::Gradient, 21);
    let srcc = df_rank_fidelity(&clip.seq, &clip.saliency).unwrap();
    let mean = srcc.iter().sum::<f64>() / srcc.len() as f64;
    assert!(mean >= 0.6, "mean SRCC {mean} over {srcc:?}");
}

#[test]
fn twenty_percent_target_is_met_within_five_points() {
    let clip = test_clip(ClipKind::Texture, 22);
    let sim = run(&clip, &planned(&clip, 0.2), Some(0.2));
    assert_eq!(sim.frames.len(), FRAMES);
    let mar = measure_mar(&clip.seq, &CostProfile::default()).unwrap();
    let got = sim.summary.achieved;
    assert!((got - 0.2).abs() <= 0.05, "achieved {got}");
    assert!(got <= mar, "achieved {got} above MAR {mar}");
}

#[test]
fn weighted_quality_loss_not_above_plain_loss() {
    for (kind, seed) in [(ClipKind::Gradient, 23), (ClipKind::Texture, 24)] {
        let clip = test_clip(kind, seed);
        let s = run(&clip, &planned(&clip, 0.2), Some(0.2)).summary;
        let ew = s.delta_ew_psnr.unwrap();
        assert!(ew <= s.delta_psnr, "{kind:?}: dEW {ew} vs dPSNR {}", s.delta_psnr);
    }
}

#[test]
fn full_skip_reaches_measured_mar() {
    let clip = test_clip(ClipKind::Gradient, 25);
    let n = clip.seq.layout.num_ctus();
    let sim = run(&clip, &vec![ControlPlan::uniform(n, 1, 3); FRAMES], None);
    let mar = measure_mar(&clip.seq, &CostProfile::default()).unwrap();
    assert_eq!(sim.summary.achieved, mar);
    assert!(sim.frames.iter().any(|r| r.delta_psnr > 0.0));
}
