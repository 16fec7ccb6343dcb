use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::cubic_ratio;
use crate::types::ModelParams;

/// Largest frame size accepted by the exhaustive oracle.
pub const EXHAUSTIVE_MAX_N: usize = 64;

const PRUNE_RTOL: f64 = 1e-12;

/// Counts of CTUs assigned `g = 1, 2, 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct MixTriple {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl From<[usize; 3]> for MixTriple {
    fn from([n1, n2, n3]: [usize; 3]) -> Self {
        MixTriple { n1, n2, n3 }
    }
}

impl From<MixTriple> for [usize; 3] {
    fn from(t: MixTriple) -> Self {
        [t.n1, t.n2, t.n3]
    }
}

impl MixTriple {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Self {
        MixTriple { n1, n2, n3 }
    }

    pub fn total(&self) -> usize {
        self.n1 + self.n2 + self.n3
    }

    /// Skip levels delivered: `n1 + 2 n2 + 3 n3`.
    pub fn levels(&self) -> usize {
        self.n1 + 2 * self.n2 + 3 * self.n3
    }

    /// Tie-break key after the objective: smaller `n3`, then `n2`, then `n1`.
    fn key(&self) -> (usize, usize, usize) {
        (self.n3, self.n2, self.n1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixSolution {
    pub triple: MixTriple,
    pub objective: f64,
    /// Search nodes visited (zero for strategies that do not branch).
    pub nodes: u64,
}

/// `(alpha, beta)`: the fitted MC distortion ratio at `g = 2` and `g = 1`.
pub fn mix_coefficients(params: &ModelParams) -> (f64, f64) {
    (cubic_ratio(2, &params.h), cubic_ratio(1, &params.h))
}

/// `n3^2 + alpha((n2+n3)^2 - n3^2) + beta((n1+n2+n3)^2 - (n2+n3)^2)`.
#[inline]
pub fn mix_objective(t: MixTriple, alpha: f64, beta: f64) -> f64 {
    let n3 = t.n3 as f64;
    let t23 = (t.n2 + t.n3) as f64;
    let s = t.total() as f64;
    n3 * n3 + alpha * (t23 * t23 - n3 * n3) + beta * (s * s - t23 * t23)
}

fn check_budget(n: usize, budget: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::validation("frame must contain at least one CTU"));
    }
    if budget > 3 * n {
        return Err(Error::Infeasible {
            target: budget as f64,
            achievable: (3 * n) as f64,
        });
    }
    Ok(())
}

fn better(cand: (f64, MixTriple), best: &Option<(f64, MixTriple)>) -> bool {
    match best {
        None => true,
        Some((bj, bt)) => cand.0 < *bj || (cand.0 == *bj && cand.1.key() < bt.key()),
    }
}

/// Enumerates every triple with `n1 + n2 + n3 <= N` and `n1 + 2n2 + 3n3 >= B`.
pub fn solve_mix_exhaustive(n: usize, budget: usize, params: &ModelParams) -> Result<MixSolution> {
    check_budget(n, budget)?;
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::validation(format!(
            "exhaustive mix search is limited to N <= {EXHAUSTIVE_MAX_N}, got {n}"
        )));
    }
    let (alpha, beta) = mix_coefficients(params);
    let mut best: Option<(f64, MixTriple)> = None;
    let mut nodes = 0u64;
    for n3 in 0..=n {
        for n2 in 0..=n - n3 {
            for n1 in 0..=n - n3 - n2 {
                nodes += 1;
                let t = MixTriple::new(n1, n2, n3);
                if t.levels() < budget {
                    continue;
                }
                let cand = (mix_objective(t, alpha, beta), t);
                if better(cand, &best) {
                    best = Some(cand);
                }
            }
        }
    }
    let (objective, triple) = best.expect("B <= 3N always admits (0, 0, N)");
    Ok(MixSolution {
        triple,
        objective,
        nodes,
    })
}

/// Branch-and-bound over `n3` then `n2`.
///
/// With `t = n2 + n3` and `s = n1 + n2 + n3` the objective is
/// `(1 - alpha) n3^2 + (alpha - beta) t^2 + beta s^2` and the budget reads
/// `s + t + n3 >= B`. For a fixed `n3` the remaining part is bounded below
/// both by `(p + q) n3^2` (since `s >= t >= n3`) and by the continuous
/// minimum `R^2 pq / (p + q)` of `p t^2 + q s^2` over `s + t >= R`.
pub fn solve_mix_bnb(n: usize, budget: usize, params: &ModelParams) -> Result<MixSolution> {
    check_budget(n, budget)?;
    let (alpha, beta) = mix_coefficients(params);
    let p = alpha - beta;
    let q = beta;
    if p < 0.0 || q < 0.0 {
        return Ok(enumerate_all(n, budget, alpha, beta));
    }
    let mut best: Option<(f64, MixTriple)> = None;
    let mut nodes = 0u64;
    let bound_slack = |j: f64| j + PRUNE_RTOL * j.abs().max(1.0);

    let n3_min = budget.saturating_sub(2 * n);
    for n3 in n3_min..=n {
        nodes += 1;
        let fixed = (1.0 - alpha) * (n3 * n3) as f64;
        let r = budget.saturating_sub(n3) as f64;
        let relax = if p + q > 0.0 { r * r * p * q / (p + q) } else { 0.0 };
        let lb = fixed + ((p + q) * (n3 * n3) as f64).max(relax);
        if let Some((bj, _)) = best {
            if lb > bound_slack(bj) {
                continue;
            }
        }
        let rest = budget.saturating_sub(3 * n3);
        let n2_min = budget.saturating_sub(2 * n3 + n).min(n - n3);
        let n2_hi = rest.div_ceil(2).clamp(n2_min, n - n3);
        let mut prev: Option<f64> = None;
        for n2 in n2_min..=n2_hi {
            let t = (n2 + n3) as f64;
            if let Some((bj, _)) = best {
                if fixed + (p + q) * t * t > bound_slack(bj) {
                    break;
                }
            }
            let n1 = rest.saturating_sub(2 * n2);
            if n1 + n2 + n3 > n {
                continue;
            }
            nodes += 1;
            let triple = MixTriple::new(n1, n2, n3);
            let j = mix_objective(triple, alpha, beta);
            if better((j, triple), &best) {
                best = Some((j, triple));
            }
            // The leaf objective is convex in n2 along this line.
            if let Some(pj) = prev {
                if j > bound_slack(pj) {
                    break;
                }
            }
            prev = Some(j);
        }
    }
    let (objective, triple) = best.expect("B <= 3N always admits (0, 0, N)");
    Ok(MixSolution {
        triple,
        objective,
        nodes,
    })
}

/// Fallback when a coefficient is negative and the bounds no longer hold.
fn enumerate_all(n: usize, budget: usize, alpha: f64, beta: f64) -> MixSolution {
    let mut best: Option<(f64, MixTriple)> = None;
    let mut nodes = 0u64;
    for n3 in 0..=n {
        for n2 in 0..=n - n3 {
            for n1 in 0..=n - n3 - n2 {
                let t = MixTriple::new(n1, n2, n3);
                if t.levels() < budget {
                    continue;
                }
                nodes += 1;
                let cand = (mix_objective(t, alpha, beta), t);
                if better(cand, &best) {
                    best = Some(cand);
                }
            }
        }
    }
    let (objective, triple) = best.expect("B <= 3N always admits (0, 0, N)");
    MixSolution {
        triple,
        objective,
        nodes,
    }
}

/// Minimizes the saliency-weighted MC loss directly: the `n3` least salient
/// CTUs pay `ratio(3) w`, the next `n2` pay `ratio(2) w`, the next `n1` pay
/// `ratio(1) w`. `sorted_w` must be ascending.
pub fn solve_mix_exact_sorted(
    sorted_w: &[f64],
    budget: usize,
    params: &ModelParams,
) -> Result<MixSolution> {
    let n = sorted_w.len();
    check_budget(n, budget)?;
    let r = [
        cubic_ratio(1, &params.h),
        cubic_ratio(2, &params.h),
        cubic_ratio(3, &params.h),
    ];
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for w in sorted_w {
        prefix.push(prefix.last().unwrap() + w);
    }
    let range = |lo: usize, hi: usize| prefix[hi] - prefix[lo];
    let mut best: Option<(f64, MixTriple)> = None;
    let mut nodes = 0u64;
    for n3 in budget.saturating_sub(2 * n)..=n {
        let rest = budget.saturating_sub(3 * n3);
        let n2_hi = rest.div_ceil(2).min(n - n3);
        for n2 in 0..=n2_hi {
            let n1 = rest.saturating_sub(2 * n2);
            if n1 + n2 + n3 > n {
                continue;
            }
            nodes += 1;
            let triple = MixTriple::new(n1, n2, n3);
            let j = r[2] * range(0, n3)
                + r[1] * range(n3, n3 + n2)
                + r[0] * range(n3 + n2, n3 + n2 + n1);
            if better((j, triple), &best) {
                best = Some((j, triple));
            }
        }
    }
    let (objective, triple) = best.expect("B <= 3N always admits (0, 0, N)");
    Ok(MixSolution {
        triple,
        objective,
        nodes,
    })
}

/// Optimal mixes for every integer budget `0..=3N` of one frame size.
#[derive(Debug, Clone, PartialEq)]
pub struct MixTable {
    n: usize,
    alpha: f64,
    beta: f64,
    entries: Vec<MixTriple>,
    objectives: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MixTableRepr {
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    beta: f64,
    entries: Vec<MixTriple>,
}

impl MixTable {
    pub fn build(n: usize, params: &ModelParams) -> Result<Self> {
        check_budget(n, 0)?;
        let (alpha, beta) = mix_coefficients(params);
        let solved: Vec<MixSolution> = (0..=3 * n)
            .into_par_iter()
            .map(|b| solve_mix_bnb(n, b, params))
            .collect::<Result<_>>()?;
        Ok(MixTable {
            n,
            alpha,
            beta,
            entries: solved.iter().map(|s| s.triple).collect(),
            objectives: solved.iter().map(|s| s.objective).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn entries(&self) -> &[MixTriple] {
        &self.entries
    }

    pub fn objectives(&self) -> &[f64] {
        &self.objectives
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn lookup(&self, budget: usize) -> Option<(MixTriple, f64)> {
        Some((*self.entries.get(budget)?, self.objectives[budget]))
    }

    /// Whether the table was built from the same cubic as `params`.
    pub fn matches(&self, params: &ModelParams) -> bool {
        let (a, b) = mix_coefficients(params);
        (a - self.alpha).abs() <= 1e-12 && (b - self.beta).abs() <= 1e-12
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MixTableRepr {
            n: self.n,
            alpha: self.alpha,
            beta: self.beta,
            entries: self.entries.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: MixTableRepr = serde_json::from_str(s)?;
        if r.n == 0 || r.entries.len() != 3 * r.n + 1 {
            return Err(Error::format(
                "mix table",
                format!("{} entries for N = {}", r.entries.len(), r.n),
            ));
        }
        for (b, t) in r.entries.iter().enumerate() {
            if t.total() > r.n || t.levels() < b {
                return Err(Error::format(
                    "mix table",
                    format!("entry {b} = {t:?} violates its budget"),
                ));
            }
        }
        let objectives = r
            .entries
            .iter()
            .map(|&t| mix_objective(t, r.alpha, r.beta))
            .collect();
        Ok(MixTable {
            n: r.n,
            alpha: r.alpha,
            beta: r.beta,
            entries: r.entries,
            objectives,
        })
    }
}
