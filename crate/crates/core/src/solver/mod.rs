//! Per-frame complexity control: the deblocking threshold solve, the
//! motion-compensation mix program and the two-branch planner.

mod df;
mod mix;
mod plan;

pub use df::{solve_df_threshold, DfSolution};
pub use mix::{
    mix_coefficients, mix_objective, solve_mix_bnb, solve_mix_exact_sorted, solve_mix_exhaustive,
    MixSolution, MixTable, MixTriple, EXHAUSTIVE_MAX_N,
};
pub use plan::{
    plan_frame, plan_frame_with, read_plans, write_plans, FramePlan, MixStrategy, PlanOptions,
    SolveDiagnostics,
};
