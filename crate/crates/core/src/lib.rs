//! Saliency-guided decoding complexity control.
//!
//! Given per-CTU saliency and a target fraction of decode work to remove, the
//! planner decides per CTU whether to skip deblocking (`f`) and how many
//! samples of each 2x2 group to copy instead of interpolate (`g`). A small
//! deterministic codec in [`codec`] supplies training data and measures what
//! a plan actually saves.

pub mod cli;
pub mod codec;
pub mod error;
pub mod eval;
pub mod fitting;
pub mod io;
pub mod models;
pub mod pipeline;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    normalize_saliency, qp_bucket, Branch, BucketCoeffs, ControlPlan, FrameLayout, ModelParams,
    QpBucket, SaliencyMap,
};
