//! Nearest-neighbour replacement of motion-compensated samples.
//!
//! Positions inside an aligned 2x2 group are numbered TL = 0, TR = 1,
//! BL = 2, BR = 3.

pub const TL: usize = 0;
pub const TR: usize = 1;
pub const BL: usize = 2;
pub const BR: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SkipPattern {
    pub g: u8,
    /// `source[p] = Some(s)`: position `p` is copied from computed position `s`.
    pub source: [Option<usize>; 4],
}

/// Copy layout for level `g`.
pub fn skip_pattern(g: u8) -> SkipPattern {
    let source = match g {
        0 => [None, None, None, None],
        1 => [None, None, None, Some(TL)],
        2 => [None, Some(TL), None, Some(BL)],
        _ => [None, Some(TL), Some(TL), Some(TL)],
    };
    SkipPattern { g: g.min(3), source }
}

impl SkipPattern {
    #[inline]
    pub fn is_computed(&self, pos: usize) -> bool {
        self.source[pos].is_none()
    }

    pub fn copies(&self) -> usize {
        self.source.iter().filter(|s| s.is_some()).count()
    }

    /// Applies the pattern to a `w x h` block whose top-left sample sits at
    /// frame coordinates `(x0, y0)`. Groups are aligned to even frame
    /// coordinates; copies whose source lies outside the block are skipped.
    /// Returns the number of samples copied.
    pub fn apply(&self, block: &mut [u8], x0: usize, y0: usize, w: usize, h: usize) -> u64 {
        if self.g == 0 {
            return 0;
        }
        let mut copied = 0;
        for y in 0..h {
            for x in 0..w {
                let pos = ((y0 + y) & 1) * 2 + ((x0 + x) & 1);
                if let Some(src) = self.source[pos] {
                    let sx = x as isize - ((pos & 1) as isize - (src & 1) as isize);
                    let sy = y as isize - ((pos >> 1) as isize - (src >> 1) as isize);
                    if sx >= 0 && sy >= 0 {
                        block[y * w + x] = block[sy as usize * w + sx as usize];
                        copied += 1;
                    }
                }
            }
        }
        copied
    }

    /// Samples of a `w x h` block at `(x0, y0)` that still need MC.
    pub fn computed_samples(&self, x0: usize, y0: usize, w: usize, h: usize) -> u64 {
        if self.g == 0 {
            return (w * h) as u64;
        }
        let mut n = 0;
        for y in 0..h {
            for x in 0..w {
                let pos = ((y0 + y) & 1) * 2 + ((x0 + x) & 1);
                let copied = match self.source[pos] {
                    Some(src) => {
                        x >= (pos & 1) - (src & 1) && y >= (pos >> 1) - (src >> 1)
                    }
                    None => false,
                };
                n += u64::from(!copied);
            }
        }
        n
    }
}
