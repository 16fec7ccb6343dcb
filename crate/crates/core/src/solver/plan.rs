use std::path::Path;

use serde::{Deserialize, Serialize};

use super::df::{solve_df_threshold, FEAS_EPS};
use super::mix::{solve_mix_bnb, solve_mix_exact_sorted, MixTable, MixTriple};
use crate::error::{Error, Result};
use crate::models::df_capacity;
use crate::types::{Branch, BucketCoeffs, ControlPlan, ModelParams, QpBucket, SaliencyMap};

/// How the MC branch picks its `(n1, n2, n3)` mix.
#[derive(Debug, Clone, Copy, Default)]
pub enum MixStrategy<'a> {
    /// Precomputed table indexed by integer budget.
    Table(&'a MixTable),
    /// Branch-and-bound on every call.
    #[default]
    Live,
    /// Exact sorted-weight objective instead of the uniformity approximation.
    Exact,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlanOptions<'a> {
    pub strategy: MixStrategy<'a>,
    /// The frame has no motion compensation: cap the target at the
    /// deblocking capacity and stay in the DF branch.
    pub intra: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub branch: Branch,
    /// CTUs with deblocking disabled (DF branch).
    pub threshold_index: Option<usize>,
    /// Integer skip-level budget (MC branch).
    pub budget: Option<usize>,
    /// Target left for MC after disabling all deblocking.
    pub residual: Option<f64>,
    pub mix: Option<MixTriple>,
    pub nodes_explored: u64,
    pub predicted_reduction: f64,
    /// Target was lowered to the deblocking capacity of an intra frame.
    pub intra_capped: bool,
}

/// Plans one frame with the default strategy (table when given, else live).
pub fn plan_frame(
    saliency: &SaliencyMap,
    target: f64,
    bucket: QpBucket,
    params: &ModelParams,
    table: Option<&MixTable>,
) -> Result<ControlPlan> {
    let opts = PlanOptions {
        strategy: table.map_or(MixStrategy::Live, MixStrategy::Table),
        intra: false,
    };
    plan_frame_with(saliency, target, bucket, params, &opts).map(|(p, _)| p)
}

pub fn plan_frame_with(
    saliency: &SaliencyMap,
    target: f64,
    bucket: QpBucket,
    params: &ModelParams,
    opts: &PlanOptions<'_>,
) -> Result<(ControlPlan, SolveDiagnostics)> {
    if !(target >= 0.0) {
        return Err(Error::validation(format!("target {target} must be >= 0")));
    }
    let coeffs = params.coeffs(bucket)?;
    let capacity = df_capacity(saliency, coeffs);
    if opts.intra {
        let capped = target > capacity;
        return plan_df(saliency, target.min(capacity), coeffs, capped);
    }
    let mar = capacity + 3.0 * coeffs.c;
    if target > mar + FEAS_EPS {
        return Err(Error::Infeasible {
            target,
            achievable: mar,
        });
    }
    if target <= capacity {
        return plan_df(saliency, target, coeffs, false);
    }

    let n = saliency.len();
    let residual = target - capacity;
    let budget = ((n as f64 * residual / coeffs.c - FEAS_EPS).ceil().max(0.0) as usize).min(3 * n);
    let (mix, nodes) = match opts.strategy {
        MixStrategy::Table(t) => {
            if t.n() != n || !t.matches(params) {
                return Err(Error::validation(format!(
                    "mix table built for N = {} does not match this frame (N = {n}) or params",
                    t.n()
                )));
            }
            (t.lookup(budget).expect("budget <= 3N").0, 0)
        }
        MixStrategy::Live => {
            let s = solve_mix_bnb(n, budget, params)?;
            (s.triple, s.nodes)
        }
        MixStrategy::Exact => {
            let w = saliency.weights();
            let sorted: Vec<f64> = saliency.ascending_order().iter().map(|&i| w[i]).collect();
            let s = solve_mix_exact_sorted(&sorted, budget, params)?;
            (s.triple, s.nodes)
        }
    };

    let g = assign_levels(saliency, mix);
    let f = vec![1u8; n];
    let levels = mix.n1 + 2 * mix.n2 + 3 * mix.n3;
    let predicted = capacity + coeffs.c * levels as f64 / n as f64;
    let plan = ControlPlan {
        f,
        g,
        predicted_reduction: predicted,
        branch: Branch::DfPlusMc,
    };
    let diag = SolveDiagnostics {
        branch: Branch::DfPlusMc,
        threshold_index: None,
        budget: Some(budget),
        residual: Some(residual),
        mix: Some(mix),
        nodes_explored: nodes,
        predicted_reduction: predicted,
        intra_capped: false,
    };
    Ok((plan, diag))
}

/// Gives `g = 3` to the `n3` least salient CTUs, `g = 2` to the next `n2` and
/// `g = 1` to the next `n1`, using selection rather than a full sort.
fn assign_levels(saliency: &SaliencyMap, mix: MixTriple) -> Vec<u8> {
    // Bit patterns of non-negative floats sort like their values.
    let bits = |x: f64| (x + 0.0).to_bits();
    let w = saliency.weights();
    let mut keys: Vec<u64> = w.iter().map(|&x| bits(x)).collect();
    // ends[j]: CTUs at level 3 - j or above; cut[j]: one past the largest
    // key among them, 0 when there are none.
    let ends = [mix.n3, mix.n3 + mix.n2, mix.total()];
    let mut cut = [0u64; 3];
    let mut hi = keys.len();
    for j in (0..3).rev() {
        let e = ends[j];
        if e == 0 {
            break;
        }
        if j < 2 && e == ends[j + 1] {
            cut[j] = cut[j + 1];
            continue;
        }
        keys[..hi].select_nth_unstable(e - 1);
        cut[j] = keys[e - 1] + 1;
        hi = e - 1;
    }
    let mut g = vec![0u8; w.len()];
    let mut below = [0usize; 3];
    for (gi, &x) in g.iter_mut().zip(w) {
        let k = bits(x);
        let lt = cut.map(|c| usize::from(k < c));
        below = [below[0] + lt[0], below[1] + lt[1], below[2] + lt[2]];
        *gi = (lt[0] + lt[1] + lt[2]) as u8;
    }
    if below == ends {
        return g;
    }
    // Equal weights straddle a boundary: lower indices take the higher level.
    let mut keys = saliency.order_keys();
    keys.sort_unstable();
    g.fill(0);
    for (pos, k) in keys[..ends[2]].iter().enumerate() {
        g[k.1] = 1 + u8::from(pos < ends[1]) + u8::from(pos < ends[0]);
    }
    g
}

fn plan_df(
    saliency: &SaliencyMap,
    target: f64,
    coeffs: &BucketCoeffs,
    capped: bool,
) -> Result<(ControlPlan, SolveDiagnostics)> {
    let sol = solve_df_threshold(saliency, target, coeffs)?;
    let g = vec![0u8; saliency.len()];
    let predicted = sol.reduction;
    let diag = SolveDiagnostics {
        branch: Branch::DfOnly,
        threshold_index: Some(sol.threshold_index),
        budget: None,
        residual: None,
        mix: None,
        nodes_explored: 0,
        predicted_reduction: predicted,
        intra_capped: capped,
    };
    let plan = ControlPlan {
        f: sol.f,
        g,
        predicted_reduction: predicted,
        branch: Branch::DfOnly,
    };
    Ok((plan, diag))
}

/// On-disk form of one frame's plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlan {
    pub frame: usize,
    pub branch: Branch,
    pub f: Vec<u8>,
    pub g: Vec<u8>,
    pub predicted: f64,
}

impl FramePlan {
    pub fn new(frame: usize, plan: &ControlPlan) -> Self {
        FramePlan {
            frame,
            branch: plan.branch,
            f: plan.f.clone(),
            g: plan.g.clone(),
            predicted: plan.predicted_reduction,
        }
    }

    pub fn to_plan(&self) -> ControlPlan {
        ControlPlan {
            f: self.f.clone(),
            g: self.g.clone(),
            predicted_reduction: self.predicted,
            branch: self.branch,
        }
    }
}

pub fn write_plans(path: &Path, plans: &[FramePlan]) -> Result<()> {
    crate::io::write_atomic(path, serde_json::to_string(plans)?.as_bytes())
}

pub fn read_plans(path: &Path) -> Result<Vec<FramePlan>> {
    let text = std::fs::read_to_string(path)?;
    let plans: Vec<FramePlan> = serde_json::from_str(&text)?;
    for p in &plans {
        p.to_plan().validate_shape(p.f.len())?;
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{mc_mse_ratio, model_mar, norm_quality_df, norm_quality_mc};
    use crate::types::FrameLayout;
    use proptest::prelude::*;

    fn map(w: &[f64]) -> SaliencyMap {
        let layout = FrameLayout::new(64 * w.len(), 64, 64).unwrap();
        SaliencyMap::new(layout, w.to_vec()).unwrap()
    }

    fn toy() -> SaliencyMap {
        map(&[0.1, 0.2, 0.3, 0.4])
    }

    #[test]
    fn mc_branch_worked_example() {
        let p = ModelParams::table3();
        let (plan, d) = plan_frame_with(&toy(), 0.20, QpBucket::Qp32, &p, &PlanOptions::default()).unwrap();
        assert_eq!(plan.branch, Branch::DfPlusMc);
        assert_eq!(plan.f, vec![1, 1, 1, 1]);
        assert!((d.residual.unwrap() - 0.051575).abs() < 1e-9);
        assert_eq!(d.budget, Some(4));
        assert_eq!(d.mix, Some(MixTriple::new(2, 1, 0)));
        assert_eq!(plan.g, vec![2, 1, 1, 0]);
        assert!((plan.predicted_reduction - (0.148425 + 0.0665)).abs() < 1e-9);
        plan.validate(4).unwrap();
    }

    #[test]
    fn zero_target_and_df_branch() {
        let p = ModelParams::table3();
        let z = plan_frame(&toy(), 0.0, QpBucket::Qp32, &p, None).unwrap();
        assert!(z.is_identity());
        assert_eq!(z.predicted_reduction, 0.0);
        let d = plan_frame(&toy(), 0.05, QpBucket::Qp32, &p, None).unwrap();
        assert_eq!(d.branch, Branch::DfOnly);
        assert_eq!(d.f, vec![1, 1, 0, 0]);
        assert_eq!(d.g, vec![0; 4]);
    }

    #[test]
    fn rejects_out_of_range_targets() {
        let p = ModelParams::table3();
        assert!(plan_frame(&toy(), -0.01, QpBucket::Qp32, &p, None).is_err());
        match plan_frame(&toy(), 0.9, QpBucket::Qp32, &p, None) {
            Err(Error::Infeasible { achievable, .. }) => {
                assert!((achievable - (0.148425 + 3.0 * 0.0665)).abs() < 1e-9)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn intra_frames_stay_in_df_branch() {
        let p = ModelParams::table3();
        let opts = PlanOptions {
            intra: true,
            ..Default::default()
        };
        let (plan, d) = plan_frame_with(&toy(), 0.3, QpBucket::Qp32, &p, &opts).unwrap();
        assert_eq!(plan.branch, Branch::DfOnly);
        assert!(d.intra_capped);
        assert_eq!(plan.f, vec![1; 4]);
    }

    #[test]
    fn table_strategy_matches_live_and_checks_shape() {
        let p = ModelParams::table3();
        let table = MixTable::build(4, &p).unwrap();
        let a = plan_frame(&toy(), 0.25, QpBucket::Qp32, &p, Some(&table)).unwrap();
        let b = plan_frame(&toy(), 0.25, QpBucket::Qp32, &p, None).unwrap();
        assert_eq!(a, b);
        let wrong = MixTable::build(5, &p).unwrap();
        assert!(plan_frame(&toy(), 0.25, QpBucket::Qp32, &p, Some(&wrong)).is_err());
    }

    #[test]
    fn full_target_saturates() {
        let p = ModelParams::table3();
        let c = p.coeffs(QpBucket::Qp32).unwrap();
        let mar = model_mar(&toy(), c);
        let plan = plan_frame(&toy(), mar, QpBucket::Qp32, &p, None).unwrap();
        assert_eq!(plan.g, vec![3; 4]);
    }

    #[test]
    fn plan_json_shape() {
        let p = ModelParams::table3();
        let plan = plan_frame(&toy(), 0.2, QpBucket::Qp32, &p, None).unwrap();
        let s = serde_json::to_string(&FramePlan::new(3, &plan)).unwrap();
        assert!(s.starts_with(r#"{"frame":3,"branch":"df+mc","f":[1,1,1,1],"g":[2,1,1,0],"predicted":"#));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plans.json");
        write_plans(&path, &[FramePlan::new(3, &plan)]).unwrap();
        assert_eq!(read_plans(&path).unwrap()[0].to_plan(), plan);
    }

    fn loss(plan: &ControlPlan, s: &SaliencyMap, p: &ModelParams) -> f64 {
        s.weights()
            .iter()
            .zip(plan.f.iter().zip(&plan.g))
            .map(|(&w, (&f, &g))| norm_quality_df(f, w) + norm_quality_mc(g, w, p))
            .sum()
    }

    fn weights() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..=1.0, 1..60)
    }

    proptest! {
        #[test]
        fn level_assignment_matches_sorted_order(
            w in proptest::collection::vec(0.0f64..=1.0, 1..200),
            split in (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0),
        ) {
            let s = map(&w);
            let n = w.len();
            let n3 = (split.0 * n as f64) as usize;
            let n2 = (split.1 * (n - n3) as f64) as usize;
            let n1 = (split.2 * (n - n3 - n2) as f64) as usize;
            let g = assign_levels(&s, MixTriple::new(n1, n2, n3));
            let mut expect = vec![0u8; n];
            let levels = std::iter::repeat_n(3u8, n3)
                .chain(std::iter::repeat_n(2u8, n2))
                .chain(std::iter::repeat_n(1u8, n1));
            for (idx, level) in s.ascending_order().into_iter().zip(levels) {
                expect[idx] = level;
            }
            prop_assert_eq!(g, expect);
        }
    }

    proptest! {
        #[test]
        fn level_assignment_with_ties_matches_sorted_order(
            q in proptest::collection::vec(0u8..=3, 1..120),
            split in (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0),
        ) {
            let w: Vec<f64> = q.iter().map(|&v| f64::from(v) / 3.0).collect();
            let s = map(&w);
            let n = w.len();
            let n3 = (split.0 * n as f64) as usize;
            let n2 = (split.1 * (n - n3) as f64) as usize;
            let n1 = (split.2 * (n - n3 - n2) as f64) as usize;
            let g = assign_levels(&s, MixTriple::new(n1, n2, n3));
            let mut expect = vec![0u8; n];
            let levels = std::iter::repeat_n(3u8, n3)
                .chain(std::iter::repeat_n(2u8, n2))
                .chain(std::iter::repeat_n(1u8, n1));
            for (idx, level) in s.ascending_order().into_iter().zip(levels) {
                expect[idx] = level;
            }
            prop_assert_eq!(g, expect);
        }
    }

    proptest! {
        #[test]
        fn plans_are_feasible_valid_and_ordered(w in weights(), frac in 0.0f64..=1.0, qp in 22i32..=41) {
            let p = ModelParams::table3();
            let s = map(&w);
            let bucket = crate::types::qp_bucket(qp).unwrap();
            let mar = model_mar(&s, p.coeffs(bucket).unwrap());
            let target = frac * mar;
            for opts in [PlanOptions::default(), PlanOptions { strategy: MixStrategy::Exact, intra: false }] {
                let (plan, d) = plan_frame_with(&s, target, bucket, &p, &opts).unwrap();
                plan.validate(w.len()).unwrap();
                prop_assert!(plan.predicted_reduction >= target - 1e-12);
                prop_assert!(d.budget.unwrap_or(0) <= 3 * w.len());
                prop_assert!(d.threshold_index.unwrap_or(0) <= w.len());
                for i in 0..w.len() {
                    for j in 0..w.len() {
                        if w[i] < w[j] {
                            prop_assert!(plan.f[i] >= plan.f[j]);
                            prop_assert!(plan.g[i] >= plan.g[j]);
                        }
                    }
                }
            }
        }

        #[test]
        fn predicted_equals_model_sum(w in weights(), frac in 0.0f64..=1.0) {
            let p = ModelParams::table3();
            let s = map(&w);
            let c = p.coeffs(QpBucket::Qp27).unwrap();
            let plan = plan_frame(&s, frac * model_mar(&s, c), QpBucket::Qp27, &p, None).unwrap();
            let n = w.len();
            let direct: f64 = (0..n)
                .map(|i| crate::models::dc_df(plan.f[i], w[i], n, c) + crate::models::dc_mc(plan.g[i], n, c))
                .sum();
            prop_assert!((direct - plan.predicted_reduction).abs() < 1e-12);
        }

        #[test]
        fn mc_ordering_is_scale_invariant(w in weights(), frac in 0.5f64..=1.0, lambda in 0.05f64..=1.0) {
            let p = ModelParams::table3();
            let s = map(&w);
            let scaled = s.scaled(lambda).unwrap();
            let c = p.coeffs(QpBucket::Qp32).unwrap();
            // Pick a target inside the MC branch for both maps.
            let target = df_capacity(&s, c) + frac * 3.0 * c.c;
            let target_scaled = df_capacity(&scaled, c) + frac * 3.0 * c.c;
            let a = plan_frame(&s, target, QpBucket::Qp32, &p, None).unwrap();
            let b = plan_frame(&scaled, target_scaled, QpBucket::Qp32, &p, None).unwrap();
            prop_assert_eq!(a.g, b.g);
        }

        #[test]
        fn df_selection_set_is_scale_invariant(w in weights(), k in 0usize..60, lambda in 0.05f64..=1.0) {
            // Selection sets are nested prefixes of the same ascending order.
            let p = ModelParams::table3();
            let s = map(&w);
            let scaled = s.scaled(lambda).unwrap();
            let c = p.coeffs(QpBucket::Qp32).unwrap();
            let frac = (k.min(w.len()) as f64) / w.len() as f64;
            let a = plan_frame(&s, frac * df_capacity(&s, c), QpBucket::Qp32, &p, None).unwrap();
            let b = plan_frame(&scaled, frac * df_capacity(&scaled, c), QpBucket::Qp32, &p, None).unwrap();
            let order = s.ascending_order();
            prop_assert_eq!(order.clone(), scaled.ascending_order());
            let ka = a.f.iter().filter(|&&f| f == 1).count();
            let kb = b.f.iter().filter(|&&f| f == 1).count();
            prop_assert!(order[..ka].iter().all(|&i| a.f[i] == 1));
            prop_assert!(order[..kb].iter().all(|&i| b.f[i] == 1));
        }

        #[test]
        fn loss_nondecreasing_in_target(w in weights(), f1 in 0.0f64..=1.0, f2 in 0.0f64..=1.0) {
            let p = ModelParams::table3();
            let s = map(&w);
            let c = p.coeffs(QpBucket::Qp32).unwrap();
            let mar = model_mar(&s, c);
            let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            let a = plan_frame(&s, lo * mar, QpBucket::Qp32, &p, None).unwrap();
            let b = plan_frame(&s, hi * mar, QpBucket::Qp32, &p, None).unwrap();
            prop_assert!(loss(&a, &s, &p) <= loss(&b, &s, &p) + 1e-9,
                "{} > {}", loss(&a, &s, &p), loss(&b, &s, &p));
        }
    }

    #[test]
    fn ratio_helper_consistent() {
        let p = ModelParams::table3();
        assert_eq!(mc_mse_ratio(2, &p), super::super::mix_coefficients(&p).0);
    }
}
