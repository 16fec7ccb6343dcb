//! Least-squares estimation of the model coefficients from training samples,
//! and the Spearman rank correlation used to check normalized quality proxies.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::cubic_ratio;

/// Scaled deblocking saving of one training CTU: `y = N * dC_D(f = 1, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfComplexitySample {
    pub w: f64,
    pub y: f64,
}

/// Scaled mean MC saving at level `g`: `y = N * mean dC_M(g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McComplexitySample {
    pub g: u8,
    pub y: f64,
}

/// `MSE_M(g) / MSE_M(3)` over one training sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McMseSample {
    pub g: u8,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub a: f64,
    pub b: f64,
    pub r_square: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginFit {
    pub c: f64,
    pub r_square: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicFit {
    pub h: [f64; 3],
    pub r_square: f64,
}

/// `1 - SS_res / SS_tot`; a perfect fit of constant data counts as 1.
pub fn r_square(y: &[f64], yhat: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(yhat).map(|(v, p)| (v - p).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res <= 1e-24 { 1.0 } else { 0.0 }
    } else {
        1.0 - ss_res / ss_tot
    }
}

fn least_squares(x: DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    // Tolerance scaled to the data so a column of identical values registers
    // as rank deficient.
    let eps = 1e-10 * x.amax().max(1.0);
    x.svd(true, true).solve(y, eps).ok()
}

/// Ordinary least squares `y = a w + b`.
pub fn fit_affine(samples: &[DfComplexitySample]) -> Result<AffineFit> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(
            "deblocking regression needs at least two samples".into(),
        ));
    }
    let w0 = samples[0].w;
    if samples.iter().all(|s| s.w == w0) {
        return Err(Error::Degenerate(
            "deblocking regression: every sample has the same saliency".into(),
        ));
    }
    let n = samples.len();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { samples[i].w } else { 1.0 });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.y));
    let sol = least_squares(x, &y)
        .ok_or_else(|| Error::Degenerate("deblocking regression is rank deficient".into()))?;
    let (a, b) = (sol[0], sol[1]);
    let yhat: Vec<f64> = samples.iter().map(|s| a * s.w + b).collect();
    Ok(AffineFit {
        a,
        b,
        r_square: r_square(y.as_slice(), &yhat),
    })
}

/// Least squares `y = c g` without intercept.
pub fn fit_line_through_origin(samples: &[McComplexitySample]) -> Result<OriginFit> {
    let sgg: f64 = samples.iter().map(|s| f64::from(s.g).powi(2)).sum();
    if sgg == 0.0 {
        return Err(Error::Degenerate(
            "MC complexity regression: no sample with g > 0".into(),
        ));
    }
    let sgy: f64 = samples.iter().map(|s| f64::from(s.g) * s.y).sum();
    let c = sgy / sgg;
    let y: Vec<f64> = samples.iter().map(|s| s.y).collect();
    let yhat: Vec<f64> = samples.iter().map(|s| c * f64::from(s.g)).collect();
    Ok(OriginFit {
        c,
        r_square: r_square(&y, &yhat),
    })
}

/// Least squares on the basis `{g^3, g^2, g}`.
///
/// The result is rejected unless the fitted ratio is nondecreasing on
/// `0..=3` and within 0.01 of 1 at `g = 3`.
pub fn fit_cubic_no_constant(samples: &[McMseSample]) -> Result<CubicFit> {
    let mut seen = [false; 4];
    for s in samples {
        if s.g > 3 {
            return Err(Error::validation(format!("MC level {} outside 0..=3", s.g)));
        }
        seen[s.g as usize] = true;
    }
    if !(seen[1] && seen[2] && seen[3]) {
        return Err(Error::Degenerate(
            "MC distortion regression needs samples at g = 1, 2 and 3".into(),
        ));
    }
    let n = samples.len();
    let x = DMatrix::from_fn(n, 3, |i, j| f64::from(samples[i].g).powi(3 - j as i32));
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.y));
    let sol = least_squares(x, &y)
        .ok_or_else(|| Error::Degenerate("MC distortion regression is rank deficient".into()))?;
    let h = [sol[0], sol[1], sol[2]];
    let r: Vec<f64> = (0..=3).map(|g| cubic_ratio(g, &h)).collect();
    if r.windows(2).any(|w| w[1] < w[0] - 1e-9) {
        return Err(Error::Degenerate(format!(
            "MC distortion fit is not monotone: ratio(0..=3) = {r:?}"
        )));
    }
    if (r[3] - 1.0).abs() > 0.01 {
        return Err(Error::Degenerate(format!(
            "MC distortion fit gives ratio(3) = {}, expected 1 +/- 0.01",
            r[3]
        )));
    }
    let yhat: Vec<f64> = samples.iter().map(|s| cubic_ratio(s.g, &h)).collect();
    Ok(CubicFit {
        h,
        r_square: r_square(y.as_slice(), &yhat),
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `None` when either input is constant.
pub fn spearman_rcc(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::validation(format!(
            "Spearman correlation needs two equal sequences of length >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wtr.serialize(r)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    crate::io::write_atomic(path, &bytes)
}

/// Reads `w,y` rows.
pub fn read_df_samples(path: &Path) -> Result<Vec<DfComplexitySample>> {
    read_csv(path)
}

/// Reads `g,y` rows.
pub fn read_mc_samples(path: &Path) -> Result<Vec<McComplexitySample>> {
    read_csv(path)
}

/// Reads `g,y` rows of distortion ratios.
pub fn read_mse_samples(path: &Path) -> Result<Vec<McMseSample>> {
    read_csv(path)
}

pub fn write_df_samples(path: &Path, s: &[DfComplexitySample]) -> Result<()> {
    write_csv(path, s)
}

pub fn write_mc_samples(path: &Path, s: &[McComplexitySample]) -> Result<()> {
    write_csv(path, s)
}

pub fn write_mse_samples(path: &Path, s: &[McMseSample]) -> Result<()> {
    write_csv(path, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn df(points: &[(f64, f64)]) -> Vec<DfComplexitySample> {
        points.iter().map(|&(w, y)| DfComplexitySample { w, y }).collect()
    }

    #[test]
    fn affine_examples() {
        let f = fit_affine(&df(&[(0.0, 1.0), (0.5, 2.0), (1.0, 3.0)])).unwrap();
        assert!((f.a - 2.0).abs() < 1e-12 && (f.b - 1.0).abs() < 1e-12);
        assert!((f.r_square - 1.0).abs() < 1e-12);
        let f = fit_affine(&df(&[(0.1, 0.7), (0.4, 0.7), (0.9, 0.7)])).unwrap();
        assert!(f.a.abs() < 1e-12 && (f.b - 0.7).abs() < 1e-12);
        assert!(matches!(
            fit_affine(&df(&[(0.3, 1.0), (0.3, 2.0)])),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn origin_examples() {
        let s: Vec<_> = [(1, 0.1), (2, 0.2), (3, 0.3)]
            .iter()
            .map(|&(g, y)| McComplexitySample { g, y })
            .collect();
        let f = fit_line_through_origin(&s).unwrap();
        assert!((f.c - 0.1).abs() < 1e-12 && (f.r_square - 1.0).abs() < 1e-12);
        let f = fit_line_through_origin(&[McComplexitySample { g: 3, y: 0.24 }]).unwrap();
        assert!((f.c - 0.08).abs() < 1e-12);
        assert!(fit_line_through_origin(&[McComplexitySample { g: 0, y: 0.0 }]).is_err());
    }

    #[test]
    fn cubic_recovers_published_coefficients() {
        let h = [0.1040, -0.2737, 0.2184];
        let s: Vec<_> = (0..=3)
            .map(|g| McMseSample {
                g,
                y: cubic_ratio(g, &h),
            })
            .collect();
        let f = fit_cubic_no_constant(&s).unwrap();
        for k in 0..3 {
            assert!((f.h[k] - h[k]).abs() < 1e-6, "{:?}", f.h);
        }
    }

    #[test]
    fn cubic_rejections() {
        let s = |v: &[(u8, f64)]| v.iter().map(|&(g, y)| McMseSample { g, y }).collect::<Vec<_>>();
        // Three points: interpolated exactly, and monotone.
        let f = fit_cubic_no_constant(&s(&[(1, 0.0), (2, 0.0), (3, 1.0)]));
        let f = f.unwrap();
        assert!(cubic_ratio(0, &f.h) == 0.0);
        assert!((cubic_ratio(3, &f.h) - 1.0).abs() < 1e-9);
        // Missing g = 2.
        assert!(fit_cubic_no_constant(&s(&[(1, 0.1), (3, 1.0)])).is_err());
        // Non-monotone data.
        assert!(fit_cubic_no_constant(&s(&[(1, 0.6), (2, 0.2), (3, 1.0)])).is_err());
        // Does not pass near (3, 1).
        assert!(fit_cubic_no_constant(&s(&[(1, 0.1), (2, 0.3), (3, 0.5)])).is_err());
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman_rcc(&x, &x).unwrap(), Some(1.0));
        assert_eq!(spearman_rcc(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
        assert_eq!(spearman_rcc(&x, &[5.0; 4]).unwrap(), None);
        assert!(spearman_rcc(&x, &[1.0]).is_err());
        // Ties get average ranks: ranks of y are [1, 2.5, 2.5, 4].
        let r = spearman_rcc(&x, &[1.0, 2.0, 2.0, 3.0]).unwrap().unwrap();
        assert!((r - 4.5 / (5.0_f64 * 4.5).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sample_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("df.csv");
        let s = df(&[(0.25, 1.5), (1.0, 2.0)]);
        write_df_samples(&p, &s).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("w,y\n"));
        assert_eq!(read_df_samples(&p).unwrap(), s);
    }

    proptest! {
        #[test]
        fn affine_exact_on_own_family_and_order_free(
            a in -5.0f64..5.0, b in -5.0f64..5.0,
            ws in proptest::collection::vec(0.0f64..=1.0, 3..30),
            seed in any::<u64>(),
        ) {
            prop_assume!(ws.iter().any(|&w| (w - ws[0]).abs() > 1e-3));
            let mut s: Vec<_> = ws.iter().map(|&w| DfComplexitySample { w, y: a * w + b }).collect();
            let f = fit_affine(&s).unwrap();
            prop_assert!((f.a - a).abs() < 1e-7 && (f.b - b).abs() < 1e-7);
            let k = (seed as usize) % s.len();
            s.rotate_left(k);
            s.reverse();
            let g = fit_affine(&s).unwrap();
            prop_assert!((f.a - g.a).abs() < 1e-9 && (f.b - g.b).abs() < 1e-9);
        }

        #[test]
        fn cubic_exact_on_own_family_and_monotone(
            r1 in 0.0f64..0.5, dr in 0.0f64..0.5, reps in 1usize..4,
        ) {
            let r2 = (r1 + dr).min(1.0);
            let m = nalgebra::Matrix3::new(1.0, 1.0, 1.0, 8.0, 4.0, 2.0, 27.0, 9.0, 3.0);
            let h = m.lu().solve(&nalgebra::Vector3::new(r1, r2, 1.0)).unwrap();
            let h = [h[0], h[1], h[2]];
            let mut s = Vec::new();
            for _ in 0..reps {
                for g in 0..=3 {
                    s.push(McMseSample { g, y: cubic_ratio(g, &h) });
                }
            }
            let f = fit_cubic_no_constant(&s).unwrap();
            for g in 0..=3u8 {
                prop_assert!((cubic_ratio(g, &f.h) - cubic_ratio(g, &h)).abs() < 1e-9);
            }
            s.reverse();
            let f2 = fit_cubic_no_constant(&s).unwrap();
            for k in 0..3 {
                prop_assert!((f.h[k] - f2.h[k]).abs() < 1e-9);
            }
        }

        #[test]
        fn spearman_bounded_and_symmetric(
            data in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..40),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
            if let Some(r) = spearman_rcc(&x, &y).unwrap() {
                prop_assert!((-1.0..=1.0).contains(&r));
                prop_assert!((r - spearman_rcc(&y, &x).unwrap().unwrap()).abs() < 1e-12);
            }
        }
    }
}
