//! In-loop deblocking on the 8x8 grid, with per-CTU disabling.
//!
//! A segment is eight samples of one block edge and belongs to the CTU that
//! contains its `q0` side. Vertical edges of the whole frame are processed
//! before horizontal ones.

use super::interp::Mv;
use super::plane::Plane;
use crate::types::FrameLayout;

pub const DEFAULT_DEBLOCK_QP: u8 = 32;

/// Boundary-strength check, charged for every segment of an enabled CTU.
pub const OPS_BS: u64 = 10;
/// On/off decision from second differences on two lines.
pub const OPS_DECISION: u64 = 12;
/// Per line: offset computation and threshold test.
pub const OPS_LINE: u64 = 4;
/// Per line where the offset is applied.
pub const OPS_APPLY: u64 = 2;

const BETA: [u8; 52] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17,
    18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40, 42, 44, 46, 48, 50, 52, 54, 56, 58, 60, 62,
    64,
];

const TC: [u8; 54] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2,
    3, 3, 3, 3, 4, 4, 4, 5, 5, 6, 6, 7, 8, 9, 10, 11, 13, 14, 16, 18, 20, 22, 24,
];

/// Prediction state of one 8x8 block, used to decide whether an edge between
/// two blocks needs filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MotionKey {
    pub mode: u8,
    pub mv: [Mv; 2],
}

impl MotionKey {
    fn differs(&self, o: &MotionKey) -> bool {
        self.mode != o.mode
            || self
                .mv
                .iter()
                .zip(&o.mv)
                .any(|(a, b)| (a.x - b.x).abs() >= 4 || (a.y - b.y).abs() >= 4)
    }
}

/// Per-8x8-block side information of one picture.
#[derive(Debug, Clone)]
pub struct EdgeInfo {
    pub qp: u8,
    pub intra: bool,
    /// Grid of `ceil(w/8) x ceil(h/8)` flags: block has a nonzero level.
    pub nonzero: Vec<bool>,
    /// Same grid; ignored for intra pictures.
    pub motion: Vec<MotionKey>,
    /// Treat every edge as eligible regardless of the side information.
    pub all_edges: bool,
}

impl EdgeInfo {
    pub fn all_edges(qp: u8) -> Self {
        EdgeInfo {
            qp,
            intra: false,
            nonzero: Vec::new(),
            motion: Vec::new(),
            all_edges: true,
        }
    }

    /// 0 (skip), 1 (inter edge) or 2 (intra edge).
    fn strength(&self, cols: usize, p: (usize, usize), q: (usize, usize)) -> u8 {
        if self.intra {
            return 2;
        }
        if self.all_edges {
            return 1;
        }
        let pi = p.1 * cols + p.0;
        let qi = q.1 * cols + q.0;
        if self.nonzero[pi] || self.nonzero[qi] || self.motion[pi].differs(&self.motion[qi]) {
            1
        } else {
            0
        }
    }
}

/// Filters every segment of `frame` owned by a CTU with `disabled[n] == 0`,
/// treating all edges as inter edges at the default QP.
pub fn deblock_frame(frame: &Plane, disabled: &[u8], layout: &FrameLayout) -> Plane {
    let mut out = frame.clone();
    deblock_in_place(&mut out, disabled, layout, &EdgeInfo::all_edges(DEFAULT_DEBLOCK_QP));
    out
}

/// In-place deblocking; returns filter operations charged per CTU.
pub fn deblock_in_place(
    frame: &mut Plane,
    disabled: &[u8],
    layout: &FrameLayout,
    info: &EdgeInfo,
) -> Vec<u64> {
    let mut ops = vec![0u64; layout.num_ctus()];
    let (w, h) = (frame.width(), frame.height());
    let cols = w.div_ceil(8);
    let beta = i32::from(BETA[usize::from(info.qp.min(51))]);
    let tc_for = |bs: u8| i32::from(TC[(usize::from(info.qp) + 2 * usize::from(bs - 1)).min(53)]);

    for vertical in [true, false] {
        let (edge_len, across_len) = if vertical { (w, h) } else { (h, w) };
        let mut e = 8;
        while e + 2 < edge_len {
            let mut s0 = 0;
            while s0 < across_len {
                let seg = 8.min(across_len - s0);
                let (qx, qy) = if vertical { (e, s0) } else { (s0, e) };
                let ctu = layout.ctu_at(qx, qy);
                if disabled[ctu] == 0 {
                    ops[ctu] += OPS_BS;
                    let qb = (qx / 8, qy / 8);
                    let pb = if vertical { (qb.0 - 1, qb.1) } else { (qb.0, qb.1 - 1) };
                    let bs = info.strength(cols, pb, qb);
                    if bs > 0 {
                        ops[ctu] += filter_segment(frame, vertical, e, s0, seg, beta, tc_for(bs));
                    }
                }
                s0 += 8;
            }
            e += 8;
        }
    }
    ops
}

/// Samples `p2..q2` across the edge at line `i` of the segment.
fn fetch(frame: &Plane, vertical: bool, e: usize, line: usize) -> [i32; 6] {
    let mut v = [0; 6];
    for (k, slot) in v.iter_mut().enumerate() {
        let off = e + k - 3;
        *slot = i32::from(if vertical { frame.get(off, line) } else { frame.get(line, off) });
    }
    v
}

fn filter_segment(
    frame: &mut Plane,
    vertical: bool,
    e: usize,
    s0: usize,
    len: usize,
    beta: i32,
    tc: i32,
) -> u64 {
    let mut ops = OPS_DECISION;
    let second_diff = |v: &[i32; 6]| (v[0] - 2 * v[1] + v[2]).abs() + (v[5] - 2 * v[4] + v[3]).abs();
    let first = fetch(frame, vertical, e, s0);
    let last = fetch(frame, vertical, e, s0 + len - 1);
    if second_diff(&first) + second_diff(&last) >= beta {
        return ops;
    }
    for line in s0..s0 + len {
        ops += OPS_LINE;
        let v = fetch(frame, vertical, e, line);
        let (p1, p0, q0, q1) = (v[1], v[2], v[3], v[4]);
        let delta = (9 * (q0 - p0) - 3 * (q1 - p1) + 8) >> 4;
        if delta.abs() >= 10 * tc {
            continue;
        }
        ops += OPS_APPLY;
        let delta = delta.clamp(-tc, tc);
        let np0 = (p0 + delta).clamp(0, 255) as u8;
        let nq0 = (q0 - delta).clamp(0, 255) as u8;
        if vertical {
            frame.set(e - 1, line, np0);
            frame.set(e, line, nq0);
        } else {
            frame.set(line, e - 1, np0);
            frame.set(line, e, nq0);
        }
    }
    ops
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> FrameLayout {
        FrameLayout::new(128, 64, 64).unwrap()
    }

    fn step(at: usize, lo: u8, hi: u8) -> Plane {
        Plane::from_fn(128, 64, |x, _| if x < at { lo } else { hi })
    }

    #[test]
    fn all_disabled_is_identity() {
        let f = Plane::from_fn(128, 64, |x, y| ((x * 7 + y * 13) % 256) as u8);
        assert_eq!(deblock_frame(&f, &[1, 1], &layout()), f);
    }

    #[test]
    fn constant_frame_is_identity() {
        let f = Plane::new(128, 64, 91);
        for flags in [[0, 0], [0, 1], [1, 0]] {
            assert_eq!(deblock_frame(&f, &flags, &layout()), f);
        }
    }

    #[test]
    fn step_at_ctu_boundary_is_smoothed() {
        let f = step(64, 100, 120);
        let out = deblock_frame(&f, &[1, 0], &layout());
        // Offset (9 * 20 + 8) >> 4 = 11, clipped to tc(32) = 3.
        assert_eq!(out.get(63, 10), 103);
        assert_eq!(out.get(64, 10), 117);
        assert_eq!(out.get(62, 10), 100);
        // The segment belongs to the right CTU: disabling it leaves the edge.
        assert_eq!(deblock_frame(&f, &[0, 1], &layout()), f);
    }

    #[test]
    fn strong_edges_are_preserved() {
        let f = step(64, 0, 200);
        assert_eq!(deblock_frame(&f, &[0, 0], &layout()), f);
    }

    #[test]
    fn ops_follow_eligibility() {
        let l = layout();
        let mut f = step(64, 100, 120);
        let mut info = EdgeInfo {
            qp: 32,
            intra: false,
            nonzero: vec![false; 16 * 8],
            motion: vec![MotionKey::default(); 16 * 8],
            all_edges: false,
        };
        let ops = deblock_in_place(&mut f.clone(), &[0, 0], &l, &info);
        // 15 vertical edge columns x 8 segments + 7 horizontal rows x 16 segments.
        let segments = 15 * 8 + 7 * 16;
        assert_eq!(ops.iter().sum::<u64>(), segments * OPS_BS);
        info.nonzero[8] = true;
        let ops2 = deblock_in_place(&mut f, &[0, 0], &l, &info);
        assert!(ops2[1] > ops[1]);
        assert_eq!(ops2[0], ops[0]);
    }
}
