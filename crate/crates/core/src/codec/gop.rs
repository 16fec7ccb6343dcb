use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameType {
    I,
    B,
}

/// Coding parameters of one picture, indexed by POC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInfo {
    pub poc: usize,
    pub frame_type: FrameType,
    /// 0 for intra pictures, 1..=4 for the hierarchical B layers of a GOP of 8.
    pub layer: u8,
    /// Reference POCs; one entry for uni-prediction, two for bi-prediction.
    pub refs: Vec<usize>,
}

/// Random-access style hierarchical GOP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GopStructure {
    pub gop_size: usize,
    pub intra_period: usize,
    frames: Vec<FrameInfo>,
    decode_order: Vec<usize>,
}

impl GopStructure {
    /// Layout for `num_frames` pictures.
    ///
    /// Each GOP `(lo, hi]` decodes its anchor `hi` first (intra on every
    /// intra period, otherwise predicted from `lo`), then bisects the interval
    /// with pictures predicted from both ends.
    pub fn new(num_frames: usize, gop_size: usize, intra_period: usize) -> Result<Self> {
        if num_frames == 0 {
            return Err(Error::validation("sequence must contain at least one frame"));
        }
        if gop_size == 0 || intra_period == 0 || intra_period % gop_size != 0 {
            return Err(Error::validation(format!(
                "intra period {intra_period} must be a positive multiple of GOP size {gop_size}"
            )));
        }
        let mut frames: Vec<Option<FrameInfo>> = vec![None; num_frames];
        let mut decode_order = vec![0];
        frames[0] = Some(FrameInfo {
            poc: 0,
            frame_type: FrameType::I,
            layer: 0,
            refs: vec![],
        });
        let mut lo = 0;
        while lo + 1 < num_frames {
            let hi = (lo + gop_size).min(num_frames - 1);
            let anchor = if hi % intra_period == 0 {
                FrameInfo {
                    poc: hi,
                    frame_type: FrameType::I,
                    layer: 0,
                    refs: vec![],
                }
            } else {
                FrameInfo {
                    poc: hi,
                    frame_type: FrameType::B,
                    layer: 1,
                    refs: vec![lo],
                }
            };
            frames[hi] = Some(anchor);
            decode_order.push(hi);
            bisect(lo, hi, 2, &mut frames, &mut decode_order);
            lo = hi;
        }
        Ok(GopStructure {
            gop_size,
            intra_period,
            frames: frames.into_iter().map(|f| f.expect("every POC assigned")).collect(),
            decode_order,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, poc: usize) -> &FrameInfo {
        &self.frames[poc]
    }

    pub fn frames(&self) -> &[FrameInfo] {
        &self.frames
    }

    pub fn decode_order(&self) -> &[usize] {
        &self.decode_order
    }
}

fn bisect(
    lo: usize,
    hi: usize,
    layer: u8,
    frames: &mut [Option<FrameInfo>],
    order: &mut Vec<usize>,
) {
    if hi - lo < 2 {
        return;
    }
    let mid = (lo + hi) / 2;
    frames[mid] = Some(FrameInfo {
        poc: mid,
        frame_type: FrameType::B,
        layer,
        refs: vec![lo, hi],
    });
    order.push(mid);
    bisect(lo, mid, layer + 1, frames, order);
    bisect(mid, hi, layer + 1, frames, order);
}
