//! End-to-end runs: fitting model parameters on proxy clips, planning whole
//! sequences and measuring what the plans achieve.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::codec::{
    collect_training_samples, decode_sequence, encode_sequence, CostProfile, Decoded, EncoderConfig, FrameType,
    GopStructure, Plane, ProxySequence, QpSchedule, TrainingSamples,
};
use crate::error::{Error, Result};
use crate::eval::{
    achieved_reduction, ctu_weights, ew_psnr, frame_reductions, propagation_profile, psnr,
};
use crate::fitting::{fit_affine, fit_cubic_no_constant, fit_line_through_origin, AffineFit, CubicFit, OriginFit};
use crate::solver::{plan_frame_with, MixStrategy, PlanOptions, SolveDiagnostics};
use crate::types::{qp_bucket, BucketCoeffs, ControlPlan, ModelParams, QpBucket, SaliencyMap};

/// A training clip: source frames plus one saliency map per frame.
#[derive(Debug, Clone)]
pub struct TrainingClip {
    pub name: String,
    pub frames: Vec<Plane>,
    pub saliency: Vec<SaliencyMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketFit {
    pub qp: u8,
    pub df: AffineFit,
    pub mc: OriginFit,
    pub df_samples: usize,
    pub mc_samples: usize,
    /// Distortion cubic fitted on this bucket alone; `None` when its samples
    /// are missing or the fit is rejected.
    pub cubic: Option<CubicFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub buckets: Vec<BucketFit>,
    pub cubic: CubicFit,
    pub mse_samples: usize,
    /// (clip, QP) pairs whose distortion ratios were 0/0.
    pub mse_excluded: Vec<(String, u8)>,
}

/// Encodes every clip at the base QP of every bucket, gathers training
/// samples and fits all three regressions.
pub fn fit_params(
    clips: &[TrainingClip],
    encoder: &EncoderConfig,
    profile: &CostProfile,
) -> Result<(ModelParams, FitReport)> {
    if clips.is_empty() {
        return Err(Error::validation("fitting needs at least one training clip"));
    }
    let mut per_bucket: BTreeMap<QpBucket, Vec<TrainingSamples>> = BTreeMap::new();
    let mut excluded = Vec::new();
    for bucket in QpBucket::ALL {
        for clip in clips {
            let cfg = EncoderConfig {
                qp: QpSchedule::Base(bucket.value()),
                ..encoder.clone()
            };
            let seq = encode_sequence(&clip.frames, &cfg)?;
            let s = collect_training_samples(&seq, &clip.saliency, profile)?;
            if s.mse_excluded {
                excluded.push((clip.name.clone(), bucket.value()));
            }
            per_bucket.entry(bucket).or_default().push(s);
        }
    }

    let mse: Vec<_> = per_bucket.values().flatten().flat_map(|s| s.mse.iter().copied()).collect();
    if mse.is_empty() {
        return Err(Error::Degenerate(
            "McMseSample: full skipping left every decode unchanged (MSE ratio 0/0), \
             so the distortion cubic cannot be fitted; train on clips with motion"
                .into(),
        ));
    }
    let cubic = fit_cubic_no_constant(&mse)?;

    let mut buckets = BTreeMap::new();
    let mut fits = Vec::new();
    for (bucket, samples) in &per_bucket {
        let df: Vec<_> = samples.iter().flat_map(|s| s.df.iter().copied()).collect();
        let mc: Vec<_> = samples.iter().flat_map(|s| s.mc.iter().copied()).collect();
        let dfit = fit_affine(&df)?;
        let mfit = fit_line_through_origin(&mc)?;
        let own: Vec<_> = samples.iter().flat_map(|s| s.mse.iter().copied()).collect();
        buckets.insert(
            *bucket,
            BucketCoeffs {
                a: dfit.a,
                b: dfit.b,
                c: mfit.c,
            },
        );
        fits.push(BucketFit {
            qp: bucket.value(),
            df: dfit,
            mc: mfit,
            df_samples: df.len(),
            mc_samples: mc.len(),
            cubic: fit_cubic_no_constant(&own).ok(),
        });
    }
    let params = ModelParams { h: cubic.h, buckets };
    params.validate()?;
    let report = FitReport {
        buckets: fits,
        cubic,
        mse_samples: mse.len(),
        mse_excluded: excluded,
    };
    Ok((params, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedFrame {
    pub plan: ControlPlan,
    pub diagnostics: SolveDiagnostics,
    pub qp: u8,
    pub intra: bool,
    /// Wall-clock planning time in microseconds.
    pub elapsed_us: f64,
}

/// Plans every frame for one target. Intra frames stay in the deblocking
/// branch; frame QPs select the coefficient bucket.
pub fn plan_sequence(
    gop: &GopStructure,
    qps: &[u8],
    saliency: &[SaliencyMap],
    target: f64,
    params: &ModelParams,
    strategy: MixStrategy<'_>,
) -> Result<Vec<PlannedFrame>> {
    if qps.len() != gop.len() || saliency.len() != gop.len() {
        return Err(Error::validation(format!(
            "{} frames, {} QPs, {} saliency maps",
            gop.len(),
            qps.len(),
            saliency.len()
        )));
    }
    gop.frames()
        .iter()
        .map(|info| {
            let qp = qps[info.poc];
            let intra = info.frame_type == FrameType::I;
            let opts = PlanOptions { strategy, intra };
            let start = Instant::now();
            let res = plan_frame_with(&saliency[info.poc], target, qp_bucket(qp.into())?, params, &opts);
            let elapsed_us = start.elapsed().as_secs_f64() * 1e6;
            let (plan, diagnostics) = res.map_err(|e| match e {
                Error::Infeasible { target, achievable } => Error::InfeasibleFrame {
                    frame: info.poc,
                    target,
                    achievable,
                },
                e => e,
            })?;
            Ok(PlannedFrame {
                plan,
                diagnostics,
                qp,
                intra,
                elapsed_us,
            })
        })
        .collect()
}

pub fn frame_qps(seq: &ProxySequence) -> Vec<u8> {
    seq.frames.iter().map(|f| f.qp).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub poc: usize,
    pub frame_type: String,
    pub qp: u8,
    pub predicted: f64,
    pub achieved: f64,
    pub psnr_reference: f64,
    pub psnr_planned: f64,
    pub delta_psnr: f64,
    pub delta_ew_psnr: Option<f64>,
    pub propagation_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub sequence: String,
    pub qp: u8,
    pub target: Option<f64>,
    pub achieved: f64,
    pub psnr_reference: f64,
    pub psnr_planned: f64,
    pub delta_psnr: f64,
    pub delta_ew_psnr: Option<f64>,
    pub mean_b_drop: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub summary: SimulationSummary,
    pub frames: Vec<FrameRow>,
    pub reference: Decoded,
    pub planned: Decoded,
}

/// Inputs of one simulated run.
#[derive(Debug, Clone, Copy)]
pub struct SimulationInput<'a> {
    pub name: &'a str,
    pub seq: &'a ProxySequence,
    /// Source pictures the quality deltas are measured against.
    pub source: &'a [Plane],
    /// Attention maps for the weighted PSNR.
    pub attention: &'a [SaliencyMap],
    pub profile: &'a CostProfile,
}

/// Decodes with and without `plans` and measures reductions, quality deltas
/// and the propagation profile. `reference` may carry a cached plain decode.
pub fn simulate(
    input: &SimulationInput<'_>,
    plans: &[ControlPlan],
    target: Option<f64>,
    reference: Option<&Decoded>,
) -> Result<Simulation> {
    let seq = input.seq;
    if input.source.len() != seq.len() {
        return Err(Error::validation(format!(
            "{} source frames for {} coded frames",
            input.source.len(),
            seq.len()
        )));
    }
    if plans.len() != seq.len() {
        return Err(Error::validation(format!("{} plans for {} frames", plans.len(), seq.len())));
    }
    if let Some(s) = input.attention.iter().find(|s| s.len() != seq.layout.num_ctus()) {
        return Err(Error::validation(format!(
            "attention map with {} entries for {} CTUs",
            s.len(),
            seq.layout.num_ctus()
        )));
    }
    let reference = match reference {
        Some(r) => r.clone(),
        None => decode_sequence(seq, None)?,
    };
    let planned = decode_sequence(seq, Some(plans))?;

    let pr = psnr(input.source, &reference.frames)?;
    let pp = psnr(input.source, &planned.frames)?;
    let weights = ctu_weights(input.attention);
    let er = ew_psnr(input.source, &reference.frames, &weights)?;
    let ep = ew_psnr(input.source, &planned.frames, &weights)?;
    let drops = propagation_profile(seq, plans, &reference, &planned)?;
    let reductions = frame_reductions(&reference.ledgers, &planned.ledgers, input.profile);

    let frames: Vec<FrameRow> = (0..seq.len())
        .map(|poc| FrameRow {
            poc,
            frame_type: match seq.frames[poc].frame_type {
                FrameType::I => "I".into(),
                FrameType::B => "B".into(),
            },
            qp: seq.frames[poc].qp,
            predicted: plans[poc].predicted_reduction,
            achieved: reductions[poc],
            psnr_reference: pr.per_frame[poc],
            psnr_planned: pp.per_frame[poc],
            delta_psnr: pr.per_frame[poc] - pp.per_frame[poc],
            delta_ew_psnr: er.per_frame[poc].zip(ep.per_frame[poc]).map(|(a, b)| a - b),
            propagation_drop: drops[poc],
        })
        .collect();

    let b: Vec<f64> = (0..seq.len()).filter(|&p| !seq.is_intra(p)).map(|p| drops[p]).collect();
    let summary = SimulationSummary {
        sequence: input.name.to_string(),
        qp: seq.frames[0].qp,
        target,
        achieved: achieved_reduction(&reference.ledgers, &planned.ledgers, input.profile),
        psnr_reference: pr.mean,
        psnr_planned: pp.mean,
        delta_psnr: pr.mean - pp.mean,
        delta_ew_psnr: er.mean.zip(ep.mean).map(|(a, b)| a - b),
        mean_b_drop: if b.is_empty() { 0.0 } else { b.iter().sum::<f64>() / b.len() as f64 },
    };
    Ok(Simulation {
        summary,
        frames,
        reference,
        planned,
    })
}
