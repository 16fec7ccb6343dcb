//! Deterministic block-based proxy codec with per-CTU decode-time control.
//!
//! Luma-only hierarchical-B coding with quarter-sample motion, uniform scalar
//! quantization of 8x8 transform coefficients and in-loop deblocking. Decode work is tallied as
//! operation counts per CTU in a [`FrameLedger`].

pub mod container;
pub mod cost;
pub mod deblock;
pub mod decoder;
pub mod encoder;
pub mod gop;
pub mod interp;
pub mod plane;
pub mod quant;
pub mod rawio;
mod recon;
pub mod sequence;
pub mod skip;
pub mod synth;
pub mod training;
pub mod transform;

pub use container::{read_sequence, write_sequence};
pub use cost::{planning_ops, CostProfile, CtuCost, FrameLedger};
pub use deblock::deblock_frame;
pub use decoder::{decode_frame, decode_sequence, decode_with, Decoded};
pub use encoder::{encode_sequence, EncoderConfig, QpSchedule};
pub use gop::{FrameInfo, FrameType, GopStructure};
pub use interp::Mv;
pub use plane::{mse, Plane};
pub use rawio::{read_raw_luma, write_raw_luma};
pub use sequence::{BlockMotion, EncodedFrame, PredMode, ProxySequence};
pub use skip::{skip_pattern, SkipPattern};
pub use synth::{generate_clip, ClipKind, SyntheticClip};
pub use training::{collect_training_samples, TrainingSamples};
