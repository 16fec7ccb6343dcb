//! Quarter-sample luma interpolation with the HEVC 8-tap filters.

use serde::{Deserialize, Serialize};

use super::plane::Plane;

/// Motion vector in quarter samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Mv {
    pub x: i16,
    pub y: i16,
}

impl Mv {
    pub const ZERO: Mv = Mv { x: 0, y: 0 };

    pub fn new(x: i16, y: i16) -> Self {
        Mv { x, y }
    }

    pub fn from_integer(x: isize, y: isize) -> Self {
        Mv {
            x: (x * 4) as i16,
            y: (y * 4) as i16,
        }
    }

    /// Number of fractional components (0, 1 or 2).
    #[inline]
    pub fn fractional_dims(self) -> u32 {
        u32::from(self.x & 3 != 0) + u32::from(self.y & 3 != 0)
    }
}

const TAPS: [[i32; 8]; 4] = [
    [0, 0, 0, 64, 0, 0, 0, 0],
    [-1, 4, -10, 58, 17, -5, 1, 0],
    [-1, 4, -11, 40, 40, -11, 4, -1],
    [0, 1, -5, 17, 58, -10, 4, -1],
];

/// Multiply-accumulates charged per predicted sample for one reference.
#[inline]
pub fn ops_per_sample(mv: Mv) -> u64 {
    match mv.fractional_dims() {
        0 => 1,
        1 => 8,
        _ => 16,
    }
}

#[inline]
fn clip8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

/// Predicts the `w x h` block at `(x0, y0)` displaced by `mv` from `reference`.
/// Samples outside the reference are edge-extended.
pub fn predict_block(
    reference: &Plane,
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
    mv: Mv,
    out: &mut [u8],
) {
    debug_assert!(out.len() >= w * h);
    let ix = x0 as isize + (isize::from(mv.x) >> 2);
    let iy = y0 as isize + (isize::from(mv.y) >> 2);
    let fx = (mv.x & 3) as usize;
    let fy = (mv.y & 3) as usize;
    let inside = ix >= 3
        && iy >= 3
        && ix + w as isize + 4 <= reference.width() as isize
        && iy + h as isize + 4 <= reference.height() as isize;
    if inside {
        predict_inner(reference, ix as usize, iy as usize, w, h, fx, fy, out);
    } else {
        predict_clamped(reference, ix, iy, w, h, fx, fy, out);
    }
}

#[allow(clippy::too_many_arguments)]
fn predict_inner(
    r: &Plane,
    ix: usize,
    iy: usize,
    w: usize,
    h: usize,
    fx: usize,
    fy: usize,
    out: &mut [u8],
) {
    let stride = r.width();
    let d = r.data();
    match (fx, fy) {
        (0, 0) => {
            for y in 0..h {
                let s = (iy + y) * stride + ix;
                out[y * w..y * w + w].copy_from_slice(&d[s..s + w]);
            }
        }
        (_, 0) => {
            let t = &TAPS[fx];
            for y in 0..h {
                let s = (iy + y) * stride + ix - 3;
                for x in 0..w {
                    let row = &d[s + x..s + x + 8];
                    let acc: i32 = (0..8).map(|k| t[k] * i32::from(row[k])).sum();
                    out[y * w + x] = clip8((acc + 32) >> 6);
                }
            }
        }
        (0, _) => {
            let t = &TAPS[fy];
            for y in 0..h {
                for x in 0..w {
                    let base = (iy + y - 3) * stride + ix + x;
                    let acc: i32 = (0..8).map(|k| t[k] * i32::from(d[base + k * stride])).sum();
                    out[y * w + x] = clip8((acc + 32) >> 6);
                }
            }
        }
        _ => {
            let th = &TAPS[fx];
            let tv = &TAPS[fy];
            let rows = h + 7;
            let mut tmp = vec![0i32; rows * w];
            for y in 0..rows {
                let s = (iy + y - 3) * stride + ix - 3;
                for x in 0..w {
                    let row = &d[s + x..s + x + 8];
                    tmp[y * w + x] = (0..8).map(|k| th[k] * i32::from(row[k])).sum();
                }
            }
            for y in 0..h {
                for x in 0..w {
                    let acc: i32 = (0..8).map(|k| tv[k] * tmp[(y + k) * w + x]).sum();
                    out[y * w + x] = clip8((acc + 2048) >> 12);
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn predict_clamped(
    r: &Plane,
    ix: isize,
    iy: isize,
    w: usize,
    h: usize,
    fx: usize,
    fy: usize,
    out: &mut [u8],
) {
    let th = &TAPS[fx];
    let tv = &TAPS[fy];
    let px = |x: isize, y: isize| i32::from(r.get_clamped(x, y));
    for y in 0..h {
        for x in 0..w {
            let cx = ix + x as isize;
            let cy = iy + y as isize;
            out[y * w + x] = match (fx, fy) {
                (0, 0) => r.get_clamped(cx, cy),
                (_, 0) => {
                    let acc: i32 = (0..8).map(|k| th[k] * px(cx + k as isize - 3, cy)).sum();
                    clip8((acc + 32) >> 6)
                }
                (0, _) => {
                    let acc: i32 = (0..8).map(|k| tv[k] * px(cx, cy + k as isize - 3)).sum();
                    clip8((acc + 32) >> 6)
                }
                _ => {
                    let acc: i32 = (0..8)
                        .map(|j| {
                            let hsum: i32 = (0..8)
                                .map(|k| th[k] * px(cx + k as isize - 3, cy + j as isize - 3))
                                .sum();
                            tv[j] * hsum
                        })
                        .sum();
                    clip8((acc + 2048) >> 12)
                }
            };
        }
    }
}

/// Rounded average of two predictions, written into `a`.
pub fn average_into(a: &mut [u8], b: &[u8]) {
    for (p, &q) in a.iter_mut().zip(b) {
        *p = ((u16::from(*p) + u16::from(q) + 1) >> 1) as u8;
    }
}
