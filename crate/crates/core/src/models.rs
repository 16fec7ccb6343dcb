//! Closed-form quality and complexity models.
//!
//! Complexity values are dimensionless fractions of one frame's decode cost.
//! Quality values are normalized so that a fully salient CTU with the most
//! aggressive setting contributes 1.

use crate::error::{Error, Result};
use crate::types::{BucketCoeffs, ModelParams, SaliencyMap};

/// Per-CTU MSE terms, in squared 8-bit levels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CtuDistortion {
    pub mse_df: f64,
    pub mse_mc: f64,
    pub mse_joint: f64,
}

/// Saliency-weighted MSE of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwMse {
    pub value: f64,
    /// Saliency summed to zero while distortion was nonzero; `value` is the
    /// unweighted mean in that case.
    pub degenerate: bool,
}

/// `sum_n (w_n / sum_m w_m) * mse_n`.
pub fn sw_mse_frame(per_ctu_mse: &[f64], saliency: &SaliencyMap) -> Result<SwMse> {
    if per_ctu_mse.len() != saliency.len() {
        return Err(Error::validation(format!(
            "{} MSE values for {} saliency weights",
            per_ctu_mse.len(),
            saliency.len()
        )));
    }
    if per_ctu_mse.iter().all(|&m| m == 0.0) {
        return Ok(SwMse {
            value: 0.0,
            degenerate: false,
        });
    }
    let total_w = saliency.sum();
    if total_w <= 0.0 {
        let mean = per_ctu_mse.iter().sum::<f64>() / per_ctu_mse.len() as f64;
        return Ok(SwMse {
            value: mean,
            degenerate: true,
        });
    }
    let value = per_ctu_mse
        .iter()
        .zip(saliency.weights())
        .map(|(m, w)| w / total_w * m)
        .sum();
    Ok(SwMse {
        value,
        degenerate: false,
    })
}

/// Normalized distortion of disabling deblocking: `w * f`.
#[inline]
pub fn norm_quality_df(f: u8, w: f64) -> f64 {
    w * f64::from(f)
}

/// `MSE_M(g) / MSE_M(3)` from the fitted cubic `h1 g^3 + h2 g^2 + h3 g`.
#[inline]
pub fn mc_mse_ratio(g: u8, params: &ModelParams) -> f64 {
    cubic_ratio(g, &params.h)
}

#[inline]
pub(crate) fn cubic_ratio(g: u8, h: &[f64; 3]) -> f64 {
    let g = f64::from(g);
    h[0] * g * g * g + h[1] * g * g + h[2] * g
}

/// Normalized distortion of MC simplification: `w * ratio(g)`.
#[inline]
pub fn norm_quality_mc(g: u8, w: f64, params: &ModelParams) -> f64 {
    w * mc_mse_ratio(g, params)
}

/// Frame-complexity fraction saved by disabling deblocking of one CTU.
#[inline]
pub fn dc_df(f: u8, w: f64, n: usize, coeffs: &BucketCoeffs) -> f64 {
    (coeffs.a * w + coeffs.b) * f64::from(f) / n as f64
}

/// Frame-complexity fraction saved by MC simplification level `g` on one CTU.
/// Independent of saliency.
#[inline]
pub fn dc_mc(g: u8, n: usize, coeffs: &BucketCoeffs) -> f64 {
    coeffs.c * f64::from(g) / n as f64
}

/// Largest reduction reachable by disabling deblocking alone.
pub fn df_capacity(saliency: &SaliencyMap, coeffs: &BucketCoeffs) -> f64 {
    let n = saliency.len() as f64;
    (coeffs.a * saliency.sum() + coeffs.b * n) / n
}

/// Largest reduction reachable with every CTU at `f = 1, g = 3`.
pub fn model_mar(saliency: &SaliencyMap, coeffs: &BucketCoeffs) -> f64 {
    df_capacity(saliency, coeffs) + 3.0 * coeffs.c
}

/// Predicted reduction of a plan under the fitted complexity model.
pub fn predicted_reduction(f: &[u8], g: &[u8], saliency: &SaliencyMap, coeffs: &BucketCoeffs) -> f64 {
    let n = saliency.len();
    let df: f64 = f
        .iter()
        .zip(saliency.weights())
        .map(|(&f, &w)| dc_df(f, w, n, coeffs))
        .sum();
    let mc: f64 = g.iter().map(|&g| dc_mc(g, n, coeffs)).sum();
    df + mc
}

/// Predicted normalized quality loss of a plan.
pub fn predicted_quality_loss(f: &[u8], g: &[u8], saliency: &SaliencyMap, params: &ModelParams) -> f64 {
    saliency
        .weights()
        .iter()
        .zip(f.iter().zip(g))
        .map(|(&w, (&f, &g))| norm_quality_df(f, w) + norm_quality_mc(g, w, params))
        .sum()
}

/// Measured totals of one quantity (complexity reduction and SW-MSE) for a
/// single decode configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasuredTotals {
    pub complexity: f64,
    pub sw_mse: f64,
}

/// Relative additivity errors; `None` when the joint total is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditivityReport {
    pub delta_c_e: Option<f64>,
    pub delta_s_e: Option<f64>,
}

fn relative_gap(joint: f64, df: f64, mc: f64) -> Option<f64> {
    (joint != 0.0).then(|| ((joint - (df + mc)) / joint).abs())
}

pub fn additivity_errors(
    joint: MeasuredTotals,
    df_only: MeasuredTotals,
    mc_only: MeasuredTotals,
) -> AdditivityReport {
    AdditivityReport {
        delta_c_e: relative_gap(joint.complexity, df_only.complexity, mc_only.complexity),
        delta_s_e: relative_gap(joint.sw_mse, df_only.sw_mse, mc_only.sw_mse),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{FrameLayout, QpBucket};
    use proptest::prelude::*;

    fn map(w: &[f64]) -> SaliencyMap {
        let layout = FrameLayout::new(64 * w.len(), 64, 64).unwrap();
        SaliencyMap::new(layout, w.to_vec()).unwrap()
    }

    fn coeffs(b: QpBucket) -> BucketCoeffs {
        *ModelParams::table3().coeffs(b).unwrap()
    }

    #[test]
    fn sw_mse_examples() {
        let v = sw_mse_frame(&[4.0, 4.0], &map(&[0.5, 0.5])).unwrap();
        assert_eq!(v.value, 4.0);
        let v = sw_mse_frame(&[10.0, 0.0], &map(&[0.2, 0.8])).unwrap();
        assert!((v.value - 2.0).abs() < 1e-12);
        let v = sw_mse_frame(&[0.0, 0.0, 0.0], &map(&[0.0, 0.3, 1.0])).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(sw_mse_frame(&[1.0], &map(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn sw_mse_degenerate_falls_back_to_mean() {
        let v = sw_mse_frame(&[2.0, 4.0], &map(&[0.0, 0.0])).unwrap();
        assert!(v.degenerate);
        assert_eq!(v.value, 3.0);
    }

    #[test]
    fn quality_examples() {
        assert_eq!(norm_quality_df(0, 0.7), 0.0);
        assert_eq!(norm_quality_df(1, 1.0), 1.0);
        assert_eq!(norm_quality_df(1, 0.35), 0.35);

        let p = ModelParams::table3();
        assert_eq!(mc_mse_ratio(0, &p), 0.0);
        assert!((mc_mse_ratio(3, &p) - 0.9999).abs() < 1e-9);
        assert!((mc_mse_ratio(3, &p) - 1.0).abs() < 1e-3);
        assert!((mc_mse_ratio(1, &p) - 0.0487).abs() < 1e-9);
        assert!((mc_mse_ratio(2, &p) - 0.1740).abs() < 1e-9);

        assert_eq!(norm_quality_mc(0, 0.9, &p), 0.0);
        assert!((norm_quality_mc(3, 1.0, &p) - 1.0).abs() < 1e-3);
        assert!((norm_quality_mc(2, 0.5, &p) - 0.0870).abs() < 1e-9);
    }

    #[test]
    fn complexity_examples() {
        let c32 = coeffs(QpBucket::Qp32);
        assert_eq!(dc_df(0, 0.8, 10, &c32), 0.0);
        assert!((dc_df(1, 1.0, 1, &c32) - 0.4560).abs() < 1e-12);
        assert!((dc_df(1, 0.5, 100, &c32) - 0.002510).abs() < 1e-6);

        assert_eq!(dc_mc(0, 10, &c32), 0.0);
        assert!((dc_mc(2, 100, &c32) - 0.00133).abs() < 1e-12);
        assert!((dc_mc(3, 1, &coeffs(QpBucket::Qp37)) - 0.2376).abs() < 1e-12);
    }

    #[test]
    fn capacity_examples() {
        let cap = df_capacity(&map(&[0.1, 0.2, 0.3, 0.4]), &coeffs(QpBucket::Qp32));
        assert!((cap - 0.148425).abs() < 1e-9);
        let cap = df_capacity(&map(&[0.0; 10]), &coeffs(QpBucket::Qp22));
        assert!((cap - 0.0255).abs() < 1e-12);
        let cap = df_capacity(&map(&[1.0]), &coeffs(QpBucket::Qp22));
        assert!((cap - 0.3296).abs() < 1e-12);
    }

    #[test]
    fn additivity_examples() {
        let t = |c| MeasuredTotals {
            complexity: c,
            sw_mse: c,
        };
        let r = additivity_errors(t(10.0), t(4.0), t(6.0));
        assert_eq!(r.delta_c_e, Some(0.0));
        let r = additivity_errors(t(10.0), t(4.0), t(6.3));
        assert!((r.delta_c_e.unwrap() - 0.03).abs() < 1e-12);
        let r = additivity_errors(t(0.0), t(4.0), t(6.3));
        assert_eq!(r.delta_c_e, None);
        assert_eq!(r.delta_s_e, None);
    }

    #[test]
    fn table3_ratio_is_monotone() {
        let p = ModelParams::table3();
        let r: Vec<f64> = (0..=3).map(|g| mc_mse_ratio(g, &p)).collect();
        assert!(r.windows(2).all(|w| w[0] <= w[1]), "{r:?}");
    }

    proptest! {
        #[test]
        fn quality_models_linear_in_w(w in 0.0f64..=1.0, f in 0u8..=1, g in 0u8..=3) {
            let p = ModelParams::table3();
            prop_assert!((norm_quality_df(f, w) - w * norm_quality_df(f, 1.0)).abs() < 1e-12);
            prop_assert!((norm_quality_mc(g, w, &p) - w * norm_quality_mc(g, 1.0, &p)).abs() < 1e-12);
            prop_assert_eq!(norm_quality_df(f, 0.0), 0.0);
            prop_assert_eq!(norm_quality_mc(g, 0.0, &p), 0.0);
        }

        #[test]
        fn complexity_scales_inverse_in_n(w in 0.0f64..=1.0, g in 0u8..=3, n in 1usize..600) {
            let c = coeffs(QpBucket::Qp27);
            prop_assert!((dc_df(1, w, n, &c) - 2.0 * dc_df(1, w, 2 * n, &c)).abs() < 1e-15);
            prop_assert!((dc_mc(g, n, &c) - 2.0 * dc_mc(g, 2 * n, &c)).abs() < 1e-15);
        }

        #[test]
        fn sw_mse_invariant_to_saliency_scale(
            data in proptest::collection::vec((0.0f64..100.0, 0.01f64..=1.0), 1..20),
            lambda in 0.05f64..=1.0,
        ) {
            let (mse, w): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
            let m = map(&w);
            let a = sw_mse_frame(&mse, &m).unwrap().value;
            let b = sw_mse_frame(&mse, &m.scaled(lambda).unwrap()).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
