//! Quality and control-accuracy metrics over decoded sequences.

use serde::{Deserialize, Serialize};

use crate::codec::{decode_frame, decode_sequence, CostProfile, Decoded, FrameLedger, Plane, ProxySequence};
use crate::codec::plane::sse_rect;
use crate::error::{Error, Result};
use crate::fitting::spearman_rcc;
use crate::types::{ControlPlan, SaliencyMap};

/// Reported in place of an infinite PSNR.
pub const PSNR_SENTINEL: f64 = 99.0;

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_SENTINEL;
    }
    (10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_SENTINEL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsnrSeries {
    pub per_frame: Vec<f64>,
    pub mean: f64,
}

fn check_pair(reference: &[Plane], test: &[Plane]) -> Result<()> {
    if reference.len() != test.len() {
        return Err(Error::validation(format!(
            "{} reference frames, {} test frames",
            reference.len(),
            test.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::validation("no frames to compare"));
    }
    if let Some(k) = reference.iter().zip(test).position(|(r, t)| !r.same_size(t)) {
        return Err(Error::validation(format!(
            "frame {k}: {}x{} vs {}x{}",
            reference[k].width(),
            reference[k].height(),
            test[k].width(),
            test[k].height()
        )));
    }
    Ok(())
}

pub fn psnr(reference: &[Plane], test: &[Plane]) -> Result<PsnrSeries> {
    check_pair(reference, test)?;
    let per_frame: Vec<f64> = reference
        .iter()
        .zip(test)
        .map(|(r, t)| psnr_from_mse(crate::codec::mse(r, t)))
        .collect();
    let mean = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    Ok(PsnrSeries { per_frame, mean })
}

/// Attention weights of one frame.
#[derive(Debug, Clone, Copy)]
pub enum Weights<'a> {
    /// One weight per luma sample, row-major.
    Pixel(&'a [f64]),
    /// One weight per CTU, broadcast to its samples.
    Ctu(&'a SaliencyMap),
}

/// `Σ w·se / Σ w`, or `None` when every weight is zero.
pub fn weighted_mse(reference: &Plane, test: &Plane, weights: Weights<'_>) -> Result<Option<f64>> {
    if !reference.same_size(test) {
        return Err(Error::validation("frames differ in size"));
    }
    let (w, h) = (reference.width(), reference.height());
    let weight_at: Box<dyn Fn(usize, usize) -> f64 + '_> = match weights {
        Weights::Pixel(p) => {
            if p.len() != w * h {
                return Err(Error::validation(format!("{} pixel weights for {}x{}", p.len(), w, h)));
            }
            Box::new(move |x, y| p[y * w + x])
        }
        Weights::Ctu(s) => {
            let l = s.layout();
            if l.width() != w || l.height() != h {
                return Err(Error::validation(format!(
                    "saliency layout {}x{} for {}x{} frames",
                    l.width(),
                    l.height(),
                    w,
                    h
                )));
            }
            Box::new(move |x, y| s.weights()[l.ctu_at(x, y)])
        }
    };
    let (mut num, mut den) = (0.0, 0.0);
    for y in 0..h {
        let (r, t) = (reference.row(y), test.row(y));
        for x in 0..w {
            let wt = weight_at(x, y);
            if !(wt >= 0.0) || !wt.is_finite() {
                return Err(Error::validation(format!("weight {wt} at ({x}, {y})")));
            }
            let d = f64::from(r[x]) - f64::from(t[x]);
            num += wt * d * d;
            den += wt;
        }
    }
    Ok((den > 0.0).then(|| num / den))
}

/// Per-frame weighted PSNR; frames whose weights are all zero are `None` and
/// left out of the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwPsnrSeries {
    pub per_frame: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

pub fn ew_psnr(reference: &[Plane], test: &[Plane], weights: &[Weights<'_>]) -> Result<EwPsnrSeries> {
    check_pair(reference, test)?;
    if weights.len() != reference.len() {
        return Err(Error::validation(format!(
            "{} weight maps for {} frames",
            weights.len(),
            reference.len()
        )));
    }
    let per_frame = reference
        .iter()
        .zip(test)
        .zip(weights)
        .map(|((r, t), w)| Ok(weighted_mse(r, t, *w)?.map(psnr_from_mse)))
        .collect::<Result<Vec<_>>>()?;
    let defined: Vec<f64> = per_frame.iter().flatten().copied().collect();
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(EwPsnrSeries { per_frame, mean })
}

pub fn ctu_weights(maps: &[SaliencyMap]) -> Vec<Weights<'_>> {
    maps.iter().map(Weights::Ctu).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlErrorReport {
    /// Achieved minus target, in percentage points, one per sequence.
    pub signed_errors: Vec<f64>,
    /// Mean absolute error in percentage points.
    pub mae: f64,
    /// Mean of `|error| / target`, in percent; equals `MAE / target` when all
    /// targets agree.
    pub mre: f64,
}

pub fn control_error_report(targets: &[f64], achieved: &[f64]) -> Result<ControlErrorReport> {
    if targets.len() != achieved.len() || targets.is_empty() {
        return Err(Error::validation(format!(
            "{} targets, {} achieved values",
            targets.len(),
            achieved.len()
        )));
    }
    if let Some(t) = targets.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::validation(format!("target {t} must be > 0")));
    }
    let signed_errors: Vec<f64> = targets.iter().zip(achieved).map(|(t, a)| 100.0 * (a - t)).collect();
    let k = targets.len() as f64;
    let mae = signed_errors.iter().map(|e| e.abs()).sum::<f64>() / k;
    let mre = signed_errors
        .iter()
        .zip(targets)
        .map(|(e, t)| e.abs() / t)
        .sum::<f64>()
        / k;
    Ok(ControlErrorReport {
        signed_errors,
        mae,
        mre,
    })
}

/// `1 - Σ planned / Σ reference` over the given ledgers.
pub fn achieved_reduction(reference: &[FrameLedger], planned: &[FrameLedger], profile: &CostProfile) -> f64 {
    let r: f64 = reference.iter().map(|l| l.cost(profile)).sum();
    let p: f64 = planned.iter().map(|l| l.cost(profile)).sum();
    if r == 0.0 {
        0.0
    } else {
        1.0 - p / r
    }
}

pub fn frame_reductions(reference: &[FrameLedger], planned: &[FrameLedger], profile: &CostProfile) -> Vec<f64> {
    reference
        .iter()
        .zip(planned)
        .map(|(r, p)| achieved_reduction(std::slice::from_ref(r), std::slice::from_ref(p), profile))
        .collect()
}

/// Measured reduction with deblocking off and full skipping on every CTU of
/// every frame, planning overhead included.
pub fn measure_mar(seq: &ProxySequence, profile: &CostProfile) -> Result<f64> {
    let reference = decode_sequence(seq, None)?;
    let plan = ControlPlan::uniform(seq.layout.num_ctus(), 1, 3);
    let mar = decode_sequence(seq, Some(&vec![plan; seq.len()]))?;
    Ok(achieved_reduction(&reference.ledgers, &mar.ledgers, profile))
}

/// Per-POC PSNR lost to drift: PSNR against `reference` when only frame `i`
/// is planned (its references decoded unmodified) minus PSNR when every
/// frame is planned. `reference` and `planned` are the decodes without and
/// with `plans`.
pub fn propagation_profile(
    seq: &ProxySequence,
    plans: &[ControlPlan],
    reference: &Decoded,
    planned: &Decoded,
) -> Result<Vec<f64>> {
    if plans.len() != seq.len() || reference.frames.len() != seq.len() || planned.frames.len() != seq.len() {
        return Err(Error::validation("plans and decodes must cover every frame"));
    }
    (0..seq.len())
        .map(|poc| {
            let refs: Vec<&Plane> = seq.frames[poc].refs.iter().map(|&r| &reference.frames[r]).collect();
            let (alone, _) = decode_frame(seq, poc, &refs, Some(&plans[poc]))?;
            let r = &reference.frames[poc];
            let only = psnr_from_mse(crate::codec::mse(r, &alone));
            let all = psnr_from_mse(crate::codec::mse(r, &planned.frames[poc]));
            Ok(only - all)
        })
        .collect()
}

/// Per inter frame, the rank correlation across CTUs between the measured
/// saliency-weighted MSE of disabling deblocking and the normalized
/// prediction `w * f`. Frames where either side is constant are skipped.
pub fn df_rank_fidelity(seq: &ProxySequence, saliency: &[SaliencyMap]) -> Result<Vec<f64>> {
    if saliency.len() != seq.len() {
        return Err(Error::validation(format!(
            "{} saliency maps for {} frames",
            saliency.len(),
            seq.len()
        )));
    }
    let reference = decode_sequence(seq, None)?;
    let plan = ControlPlan::uniform(seq.layout.num_ctus(), 1, 0);
    let df_off = decode_sequence(seq, Some(&vec![plan; seq.len()]))?;
    let mut out = Vec::new();
    for poc in (0..seq.len()).filter(|&p| !seq.is_intra(p)) {
        let w = saliency[poc].weights();
        let measured: Vec<f64> = (0..seq.layout.num_ctus())
            .map(|k| {
                let (x, y, cw, ch) = seq.layout.ctu_rect(k);
                let sse = sse_rect(&reference.frames[poc], &df_off.frames[poc], x, y, cw, ch);
                w[k] * sse as f64 / (cw * ch) as f64
            })
            .collect();
        if let Some(r) = spearman_rcc(&measured, w)? {
            out.push(r);
        }
    }
    Ok(out)
}

/// One point of a complexity-distortion curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sequence: String,
    pub qp: u8,
    pub target: f64,
    pub achieved: f64,
    pub delta_psnr: f64,
    pub delta_ew_psnr: f64,
}

/// CSV text with a header row, sorted by sequence, then target, then QP.
pub fn emit_curves(points: &[CurvePoint]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::validation("no curve points"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.sequence
            .cmp(&b.sequence)
            .then(a.target.total_cmp(&b.target))
            .then(a.qp.cmp(&b.qp))
            .then(a.achieved.total_cmp(&b.achieved))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &sorted {
        w.serialize(p)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Report file stem `<sequence>_<qp>_<target>`, with the target in percent.
pub fn report_stem(sequence: &str, qp: u8, target: f64) -> String {
    format!("{sequence}_{qp}_{}", (target * 100.0).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode_sequence, generate_clip, ClipKind, EncoderConfig};
    use crate::types::FrameLayout;
    use proptest::prelude::*;

    fn flat(w: usize, h: usize, v: u8) -> Plane {
        Plane::new(w, h, v)
    }

    #[test]
    fn psnr_examples() {
        let a = flat(16, 16, 100);
        assert_eq!(psnr(&[a.clone()], &[a.clone()]).unwrap().mean, PSNR_SENTINEL);
        let p = psnr(&[a.clone()], &[flat(16, 16, 116)]).unwrap().mean;
        assert!((p - 10.0 * (255.0f64 * 255.0 / 256.0).log10()).abs() < 1e-12);
        assert!((p - 24.05).abs() < 0.01);
        let mut b = flat(16, 16, 0);
        b.set(3, 3, 255);
        let p = psnr(&[flat(16, 16, 0)], &[b]).unwrap().mean;
        assert!((p - 24.08).abs() < 0.01);
        assert!(psnr(&[a.clone()], &[flat(8, 16, 100)]).is_err());
        assert!(psnr(&[a.clone()], &[]).is_err());
    }

    #[test]
    fn ew_psnr_examples() {
        let layout = FrameLayout::new(128, 64, 64).unwrap();
        let r = flat(128, 64, 50);
        let t = Plane::from_fn(128, 64, |x, y| if x >= 64 { 60 } else { 50 + (x + y) as u8 % 2 });
        let uniform = SaliencyMap::uniform(layout, 1.0).unwrap();
        let e = ew_psnr(&[r.clone()], &[t.clone()], &[Weights::Ctu(&uniform)]).unwrap();
        let p = psnr(&[r.clone()], &[t.clone()]).unwrap();
        assert!((e.mean.unwrap() - p.mean).abs() < 1e-9);

        let left = SaliencyMap::new(layout, vec![1.0, 0.0]).unwrap();
        let clean = Plane::from_fn(128, 64, |x, _| if x >= 64 { 60 } else { 50 });
        let e = ew_psnr(&[r.clone()], &[clean], &[Weights::Ctu(&left)]).unwrap();
        assert_eq!(e.mean, Some(PSNR_SENTINEL));

        let right = SaliencyMap::new(layout, vec![0.0, 1.0]).unwrap();
        let e = ew_psnr(&[r.clone()], &[t.clone()], &[Weights::Ctu(&right)]).unwrap();
        assert!(e.mean.unwrap() < p.mean);

        let zero = SaliencyMap::new(layout, vec![0.0, 0.0]).unwrap();
        let e = ew_psnr(&[r.clone()], &[t], &[Weights::Ctu(&zero)]).unwrap();
        assert_eq!(e.per_frame, vec![None]);
        assert_eq!(e.mean, None);
    }

    #[test]
    fn pixel_weights_match_broadcast_ctu_weights() {
        let layout = FrameLayout::new(96, 64, 64).unwrap();
        let r = Plane::from_fn(96, 64, |x, y| ((x * 5 + y * 3) % 200) as u8);
        let t = Plane::from_fn(96, 64, |x, y| ((x * 5 + y * 3 + x / 7) % 200) as u8);
        let s = SaliencyMap::new(layout, vec![0.3, 0.9]).unwrap();
        let px: Vec<f64> = (0..64)
            .flat_map(|y| (0..96).map(move |x| (x, y)))
            .map(|(x, y)| s.weights()[layout.ctu_at(x, y)])
            .collect();
        let a = weighted_mse(&r, &t, Weights::Ctu(&s)).unwrap().unwrap();
        let b = weighted_mse(&r, &t, Weights::Pixel(&px)).unwrap().unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(weighted_mse(&r, &t, Weights::Pixel(&px[1..])).is_err());
        let mut neg = px.clone();
        neg[0] = -1.0;
        assert!(weighted_mse(&r, &t, Weights::Pixel(&neg)).is_err());
    }

    #[test]
    fn control_error_examples() {
        let r = control_error_report(&[0.1, 0.2], &[0.1, 0.2]).unwrap();
        assert_eq!((r.mae, r.mre), (0.0, 0.0));
        let r = control_error_report(&[0.1, 0.1], &[0.11, 0.09]).unwrap();
        assert!((r.mae - 1.0).abs() < 1e-9);
        assert!((r.mre - 10.0).abs() < 1e-9);
        assert!((r.signed_errors[0] - 1.0).abs() < 1e-9);
        assert!((r.signed_errors[1] + 1.0).abs() < 1e-9);
        assert!(control_error_report(&[0.0], &[0.1]).is_err());
        assert!(control_error_report(&[0.1], &[0.1, 0.2]).is_err());
    }

    proptest! {
        #[test]
        fn control_error_is_permutation_invariant(
            pairs in prop::collection::vec((0.01f64..0.9, 0.0f64..0.9), 1..12),
            rot in 0usize..12,
        ) {
            let t: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let a: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let k = rot % pairs.len();
            let (mut t2, mut a2) = (t.clone(), a.clone());
            t2.rotate_left(k);
            a2.rotate_left(k);
            let x = control_error_report(&t, &a).unwrap();
            let y = control_error_report(&t2, &a2).unwrap();
            prop_assert!((x.mae - y.mae).abs() < 1e-9);
            prop_assert!((x.mre - y.mre).abs() < 1e-9);
            prop_assert!(x.mae >= 0.0 && x.mre >= 0.0);
        }

        #[test]
        fn uniform_weights_equal_psnr(seed in 0u64..500, w in 0.01f64..1.0) {
            let layout = FrameLayout::new(80, 48, 32).unwrap();
            let r = Plane::from_fn(80, 48, |x, y| ((x * 31 + y * 17 + seed as usize) % 251) as u8);
            let t = Plane::from_fn(80, 48, |x, y| ((x * 31 + y * 17 + seed as usize + (x * y) % 5) % 251) as u8);
            let s = SaliencyMap::uniform(layout, w).unwrap();
            let e = ew_psnr(&[r.clone()], &[t.clone()], &[Weights::Ctu(&s)]).unwrap();
            let p = psnr(&[r], &[t]).unwrap();
            prop_assert!((e.mean.unwrap() - p.mean).abs() < 1e-9);
        }
    }

    #[test]
    fn curves_csv_shape_and_order() {
        let pt = |s: &str, t: f64| CurvePoint {
            sequence: s.into(),
            qp: 32,
            target: t,
            achieved: t,
            delta_psnr: 0.5,
            delta_ew_psnr: 0.25,
        };
        let one = emit_curves(&[pt("a", 0.1)]).unwrap();
        assert_eq!(one.lines().count(), 2);
        assert_eq!(
            one.lines().next().unwrap(),
            "sequence,qp,target,achieved,delta_psnr,delta_ew_psnr"
        );
        let pts = [pt("b", 0.2), pt("a", 0.3), pt("b", 0.1), pt("a", 0.1)];
        let csv = emit_curves(&pts).unwrap();
        let keys: Vec<&str> = csv.lines().skip(1).map(|l| &l[..5]).collect();
        assert_eq!(keys, ["a,32,", "a,32,", "b,32,", "b,32,"]);
        assert!(csv.lines().nth(1).unwrap().starts_with("a,32,0.1,"));
        let mut rev = pts.to_vec();
        rev.reverse();
        assert_eq!(emit_curves(&rev).unwrap(), csv);
        assert!(emit_curves(&[]).is_err());
        assert_eq!(report_stem("texture", 32, 0.2), "texture_32_20");
    }

    fn small_seq(frames: usize, kind: ClipKind) -> ProxySequence {
        let layout = FrameLayout::new(128, 64, 64).unwrap();
        let clip = generate_clip(kind, &layout, frames, 3).unwrap();
        encode_sequence(&clip.frames, &EncoderConfig::with_qp(32)).unwrap()
    }

    #[test]
    fn intra_mar_is_deblocking_share() {
        let seq = small_seq(1, ClipKind::Texture);
        let p = CostProfile::default();
        let reference = decode_sequence(&seq, None).unwrap();
        let l = &reference.ledgers[0];
        let df: f64 = l.ctus.iter().map(|c| p.df * c.df as f64).sum();
        let overhead = p.planning * crate::codec::planning_ops(seq.layout.num_ctus()) as f64;
        let expected = (df - overhead) / l.cost(&p);
        assert!((measure_mar(&seq, &p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn mar_bounds_random_plans() {
        let seq = small_seq(5, ClipKind::Texture);
        let p = CostProfile::default();
        let mar = measure_mar(&seq, &p).unwrap();
        let reference = decode_sequence(&seq, None).unwrap();
        let n = seq.layout.num_ctus();
        for k in 0..6u8 {
            let plans: Vec<ControlPlan> = (0..seq.len())
                .map(|i| {
                    let f = (0..n).map(|c| ((c + i + k as usize) % 2) as u8).collect();
                    let g = (0..n).map(|c| ((c * 3 + i + k as usize) % 4) as u8).collect();
                    ControlPlan {
                        f,
                        g,
                        predicted_reduction: 0.0,
                        branch: crate::types::Branch::DfPlusMc,
                    }
                })
                .collect();
            let d = decode_sequence(&seq, Some(&plans)).unwrap();
            assert!(achieved_reduction(&reference.ledgers, &d.ledgers, &p) <= mar + 1e-12);
        }
    }

    #[test]
    fn propagation_zero_for_identity_and_intra() {
        let seq = small_seq(9, ClipKind::Texture);
        let n = seq.layout.num_ctus();
        let reference = decode_sequence(&seq, None).unwrap();
        let ident = vec![ControlPlan::identity(n); seq.len()];
        let d = decode_sequence(&seq, Some(&ident)).unwrap();
        let drops = propagation_profile(&seq, &ident, &reference, &d).unwrap();
        assert!(drops.iter().all(|&x| x == 0.0));

        let full = vec![ControlPlan::uniform(n, 1, 3); seq.len()];
        let d = decode_sequence(&seq, Some(&full)).unwrap();
        let drops = propagation_profile(&seq, &full, &reference, &d).unwrap();
        assert_eq!(drops[0], 0.0);
        assert!(drops.iter().skip(1).any(|&x| x > 0.0));
    }
}
