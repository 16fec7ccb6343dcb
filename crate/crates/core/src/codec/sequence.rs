use super::gop::{FrameType, GopStructure};
use super::interp::Mv;
use crate::types::FrameLayout;

pub const DEFAULT_BLOCK_SIZE: usize = 16;
pub const DEFAULT_SEARCH_RANGE: usize = 16;

/// Which references a block predicts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum PredMode {
    #[default]
    L0 = 0,
    L1 = 1,
    Bi = 2,
}

impl PredMode {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(PredMode::L0),
            1 => Some(PredMode::L1),
            2 => Some(PredMode::Bi),
            _ => None,
        }
    }
}

/// Motion of one prediction block. Unused vectors are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BlockMotion {
    pub mode: PredMode,
    pub mv: [Mv; 2],
}

/// One coded picture.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFrame {
    pub poc: usize,
    pub frame_type: FrameType,
    pub layer: u8,
    pub qp: u8,
    pub refs: Vec<usize>,
    /// Raster grid of prediction blocks; empty for intra pictures.
    pub motion: Vec<BlockMotion>,
    /// Quantized residual, one level per sample.
    pub levels: Vec<i16>,
}

/// A coded luma sequence, frames indexed by POC.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxySequence {
    pub layout: FrameLayout,
    pub gop: GopStructure,
    pub block_size: usize,
    pub search_range: usize,
    pub frames: Vec<EncodedFrame>,
}

impl ProxySequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn block_cols(&self) -> usize {
        self.layout.width().div_ceil(self.block_size)
    }

    pub fn block_rows(&self) -> usize {
        self.layout.height().div_ceil(self.block_size)
    }

    pub fn is_intra(&self, poc: usize) -> bool {
        self.frames[poc].frame_type == FrameType::I
    }
}
