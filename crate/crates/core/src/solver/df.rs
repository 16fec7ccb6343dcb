use crate::error::{Error, Result};
use crate::models::df_capacity;
use crate::types::{BucketCoeffs, SaliencyMap};

/// Slack allowed when comparing accumulated floating-point reductions.
pub(crate) const FEAS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DfSolution {
    pub f: Vec<u8>,
    /// Number of least-salient CTUs with deblocking disabled.
    pub threshold_index: usize,
    pub reduction: f64,
}

/// Disables deblocking on the `I` least-salient CTUs, with `I` the smallest
/// count whose summed reduction reaches `target` (within [`FEAS_EPS`]).
pub fn solve_df_threshold(
    saliency: &SaliencyMap,
    target: f64,
    coeffs: &BucketCoeffs,
) -> Result<DfSolution> {
    if !(target >= 0.0) {
        return Err(Error::validation(format!("target {target} must be >= 0")));
    }
    let capacity = df_capacity(saliency, coeffs);
    if target > capacity + FEAS_EPS {
        return Err(Error::Infeasible {
            target,
            achievable: capacity,
        });
    }
    let n = saliency.len();
    let w = saliency.weights();
    let mut f = vec![0u8; n];
    if target <= 0.0 {
        return Ok(DfSolution {
            f,
            threshold_index: 0,
            reduction: 0.0,
        });
    }
    // Saving of the `count` CTUs whose weights sum to `sw`.
    let saving = |sw: f64, count: usize| (coeffs.a * sw + coeffs.b * count as f64) / n as f64;
    // Bit patterns of non-negative floats sort like their values.
    let bits = |x: f64| (x + 0.0).to_bits();
    let mut keys: Vec<u64> = w.iter().map(|&x| bits(x)).collect();
    // Invariant: keys[..lo] are the lo smallest weights, summing to `sw`,
    // whose saving falls short of the target; the answer lies in (lo, hi].
    let goal = target - FEAS_EPS;
    let (mut lo, mut hi, mut sw) = (0, n, 0.0);
    while hi - lo > 16 {
        let mid = lo + (hi - lo) / 2;
        keys[lo..hi].select_nth_unstable(mid - lo);
        let left: f64 = keys[lo..=mid].iter().map(|&k| f64::from_bits(k)).sum();
        if saving(sw + left, mid + 1) >= goal {
            hi = mid + 1;
        } else {
            sw += left;
            lo = mid + 1;
        }
    }
    keys[lo..hi].sort_unstable();
    let mut taken = lo;
    for &k in &keys[lo..hi] {
        sw += f64::from_bits(k);
        taken += 1;
        if saving(sw, taken) >= goal {
            break;
        }
    }
    // Weights equal to the last one taken go to the lowest indices first.
    let last = keys[taken - 1];
    if !keys[taken..].contains(&last) {
        for (fi, &x) in f.iter_mut().zip(w) {
            *fi = u8::from(bits(x) <= last);
        }
    } else {
        let mut ties = keys[..taken].iter().filter(|&&k| k == last).count();
        for (fi, &x) in f.iter_mut().zip(w) {
            let k = bits(x);
            if k < last || (k == last && ties > 0) {
                ties -= usize::from(k == last);
                *fi = 1;
            }
        }
    }
    Ok(DfSolution {
        f,
        threshold_index: taken,
        reduction: saving(sw, taken),
    })
}
