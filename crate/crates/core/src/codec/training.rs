//! Training data for the complexity and distortion regressions, measured on
//! the proxy codec.

use super::cost::CostProfile;
use super::decoder::{decode_sequence, Decoded};
use super::plane::mse;
use super::sequence::ProxySequence;
use crate::error::{Error, Result};
use crate::fitting::{DfComplexitySample, McComplexitySample, McMseSample};
use crate::types::{ControlPlan, SaliencyMap};

/// Samples gathered from one sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSamples {
    /// One sample per CTU of every inter frame.
    pub df: Vec<DfComplexitySample>,
    /// One sample per level g in 0..=3.
    pub mc: Vec<McComplexitySample>,
    /// One sample per level g in 1..=3; empty when full skipping causes no
    /// distortion, since the ratio is then 0/0.
    pub mse: Vec<McMseSample>,
    /// Set when the distortion ratios were excluded as 0/0.
    pub mse_excluded: bool,
}

fn uniform_decode(seq: &ProxySequence, f: u8, g: u8) -> Result<Decoded> {
    let plan = ControlPlan::uniform(seq.layout.num_ctus(), f, g);
    decode_sequence(seq, Some(&vec![plan; seq.len()]))
}

fn inter_pocs(seq: &ProxySequence) -> Vec<usize> {
    (0..seq.len()).filter(|&p| !seq.is_intra(p)).collect()
}

/// Decodes `seq` as reference, with DF disabled everywhere, and with each
/// uniform skip level. Complexity deltas are scaled by the CTU count N so
/// that resolutions pool into one regression. `saliency` holds one map per
/// frame.
pub fn collect_training_samples(
    seq: &ProxySequence,
    saliency: &[SaliencyMap],
    profile: &CostProfile,
) -> Result<TrainingSamples> {
    profile.validate()?;
    let n = seq.layout.num_ctus();
    if saliency.len() != seq.len() {
        return Err(Error::validation(format!(
            "{} saliency maps for {} frames",
            saliency.len(),
            seq.len()
        )));
    }
    if let Some(k) = saliency.iter().position(|s| s.len() != n) {
        return Err(Error::validation(format!(
            "saliency map {k} has {} entries, layout has {n} CTUs",
            saliency[k].len()
        )));
    }
    let inter = inter_pocs(seq);
    if inter.is_empty() {
        return Err(Error::validation("training needs at least one inter frame"));
    }
    let reference = decode_sequence(seq, None)?;
    let frame_cost: Vec<f64> = reference.ledgers.iter().map(|l| l.cost(profile)).collect();

    let df_off = uniform_decode(seq, 1, 0)?;
    let mut df = Vec::with_capacity(inter.len() * n);
    for &poc in &inter {
        let total = frame_cost[poc];
        for (k, (r, o)) in reference.ledgers[poc]
            .ctus
            .iter()
            .zip(&df_off.ledgers[poc].ctus)
            .enumerate()
        {
            let delta = r.weighted(profile) - o.weighted(profile);
            df.push(DfComplexitySample {
                w: saliency[poc].weights()[k],
                y: n as f64 * delta / total,
            });
        }
    }

    let mut mc = vec![McComplexitySample { g: 0, y: 0.0 }];
    let mut distortion = [0.0f64; 4];
    for g in 1..=3u8 {
        let dec = uniform_decode(seq, 0, g)?;
        let mut reduction = 0.0;
        let mut sq = 0.0;
        for &poc in &inter {
            let delta = frame_cost[poc] - dec.ledgers[poc].cost(profile);
            // N times the mean per-CTU delta is the whole-frame delta.
            reduction += delta / frame_cost[poc];
            sq += mse(&dec.frames[poc], &reference.frames[poc]);
        }
        mc.push(McComplexitySample {
            g,
            y: reduction / inter.len() as f64,
        });
        distortion[g as usize] = sq / inter.len() as f64;
    }

    let (mse, mse_excluded) = if distortion[3] > 0.0 {
        let s = (1..=3u8)
            .map(|g| McMseSample {
                g,
                y: distortion[g as usize] / distortion[3],
            })
            .collect();
        (s, false)
    } else {
        (Vec::new(), true)
    };
    Ok(TrainingSamples {
        df,
        mc,
        mse,
        mse_excluded,
    })
}
