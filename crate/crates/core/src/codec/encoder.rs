use super::gop::{FrameType, GopStructure};
use super::interp::{average_into, predict_block, Mv};
use super::plane::Plane;
use super::recon::{add_residual, code_residual, edge_info, finish_deblock, inter_predict, intra_encode};
use super::sequence::{
    BlockMotion, EncodedFrame, PredMode, ProxySequence, DEFAULT_BLOCK_SIZE, DEFAULT_SEARCH_RANGE,
};
use crate::error::{Error, Result};
use crate::types::FrameLayout;

/// Frame QPs: a base QP with the hierarchical layer added, or explicit values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QpSchedule {
    Base(u8),
    PerFrame(Vec<u8>),
}

impl QpSchedule {
    /// QP of frame `poc` at hierarchy `layer`.
    pub fn frame_qp(&self, poc: usize, layer: u8) -> u8 {
        match self {
            QpSchedule::Base(b) => (b + layer).min(51),
            QpSchedule::PerFrame(v) => v[poc],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderConfig {
    pub ctu_size: usize,
    pub gop_size: usize,
    pub intra_period: usize,
    pub qp: QpSchedule,
    pub block_size: usize,
    pub search_range: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            ctu_size: crate::types::DEFAULT_CTU_SIZE,
            gop_size: 8,
            intra_period: 32,
            qp: QpSchedule::Base(32),
            block_size: DEFAULT_BLOCK_SIZE,
            search_range: DEFAULT_SEARCH_RANGE,
        }
    }
}

impl EncoderConfig {
    pub fn with_qp(qp: u8) -> Self {
        EncoderConfig {
            qp: QpSchedule::Base(qp),
            ..Default::default()
        }
    }
}

/// Encodes `frames` (display order) into a proxy bitstream.
pub fn encode_sequence(frames: &[Plane], cfg: &EncoderConfig) -> Result<ProxySequence> {
    let first = frames
        .first()
        .ok_or_else(|| Error::validation("cannot encode an empty sequence"))?;
    if let Some(k) = frames.iter().position(|f| !f.same_size(first)) {
        return Err(Error::validation(format!(
            "frame {k} is {}x{}, expected {}x{}",
            frames[k].width(),
            frames[k].height(),
            first.width(),
            first.height()
        )));
    }
    if cfg.block_size == 0 || cfg.block_size % 8 != 0 || cfg.ctu_size % cfg.block_size != 0 {
        return Err(Error::validation(format!(
            "block size {} must be a multiple of 8 dividing the CTU size {}",
            cfg.block_size, cfg.ctu_size
        )));
    }
    if let QpSchedule::PerFrame(v) = &cfg.qp {
        if v.len() != frames.len() || v.iter().any(|&q| q > 51) {
            return Err(Error::validation(format!(
                "per-frame QP list needs {} values in 0..=51",
                frames.len()
            )));
        }
    } else if let QpSchedule::Base(b) = cfg.qp {
        if b > 51 {
            return Err(Error::validation(format!("QP {b} outside 0..=51")));
        }
    }
    let layout = FrameLayout::new(first.width(), first.height(), cfg.ctu_size)?;
    let gop = GopStructure::new(frames.len(), cfg.gop_size, cfg.intra_period)?;
    let mut recon: Vec<Option<Plane>> = vec![None; frames.len()];
    let mut coded: Vec<Option<EncodedFrame>> = vec![None; frames.len()];

    for &poc in gop.decode_order() {
        let info = gop.frame(poc);
        let qp = cfg.qp.frame_qp(poc, info.layer);
        let src = &frames[poc];
        let (levels, motion, pic) = if info.frame_type == FrameType::I {
            let (levels, mut pic, mut costs) = intra_encode(&layout, src, qp);
            let ei = edge_info(&layout, cfg.block_size, qp, true, &levels, &[]);
            finish_deblock(&layout, &mut pic, &ei, None, &mut costs);
            (levels, Vec::new(), pic)
        } else {
            let refs: Vec<&Plane> = info
                .refs
                .iter()
                .map(|&r| recon[r].as_ref().expect("reference decoded first"))
                .collect();
            let motion = estimate_motion(src, &refs, cfg.block_size, cfg.search_range, qp);
            let (mut pic, mut costs) = inter_predict(&layout, cfg.block_size, &refs, &motion, None);
            let levels = code_residual(&layout, src, &pic, qp);
            add_residual(&layout, &mut pic, &levels, qp, &mut costs);
            let ei = edge_info(&layout, cfg.block_size, qp, false, &levels, &motion);
            finish_deblock(&layout, &mut pic, &ei, None, &mut costs);
            (levels, motion, pic)
        };
        recon[poc] = Some(pic);
        coded[poc] = Some(EncodedFrame {
            poc,
            frame_type: info.frame_type,
            layer: info.layer,
            qp,
            refs: info.refs.clone(),
            motion,
            levels,
        });
    }
    Ok(ProxySequence {
        layout,
        gop,
        block_size: cfg.block_size,
        search_range: cfg.search_range,
        frames: coded.into_iter().map(|f| f.expect("every POC coded")).collect(),
    })
}

fn sad_block(a: &[u8], b: &[u8]) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| u32::from(p.abs_diff(q)))
        .sum()
}

fn sse_block(a: &[u8], b: &[u8]) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = u32::from(p.abs_diff(q));
            d * d
        })
        .sum()
}

fn source_block(src: &Plane, bx: usize, by: usize, bw: usize, bh: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(bw * bh);
    for y in by..by + bh {
        out.extend_from_slice(&src.row(y)[bx..bx + bw]);
    }
    out
}

fn predict_motion(refs: &[&Plane], bx: usize, by: usize, bw: usize, bh: usize, m: &BlockMotion, out: &mut [u8]) {
    match m.mode {
        PredMode::L0 | PredMode::L1 => {
            let r = m.mode as usize;
            predict_block(refs[r], bx, by, bw, bh, m.mv[r], out);
        }
        PredMode::Bi => {
            let mut other = vec![0u8; bw * bh];
            predict_block(refs[0], bx, by, bw, bh, m.mv[0], out);
            predict_block(refs[1], bx, by, bw, bh, m.mv[1], &mut other);
            average_into(out, &other);
        }
    }
}

/// Lagrange multiplier for SAD-based decisions at `qp`.
fn lambda(qp: u8) -> f64 {
    (0.57 * 2f64.powf((f64::from(qp) - 12.0) / 3.0)).sqrt()
}

/// Exp-Golomb length of a signed value.
fn se_bits(v: i32) -> u32 {
    let code = if v > 0 { 2 * v as u32 - 1 } else { 2 * v.unsigned_abs() };
    2 * (32 - (code + 1).leading_zeros()) - 1
}

fn mv_bits(mv: Mv, pred: Mv) -> u32 {
    se_bits(i32::from(mv.x) - i32::from(pred.x)) + se_bits(i32::from(mv.y) - i32::from(pred.y))
}

fn median3(a: i16, b: i16, c: i16) -> i16 {
    a.max(b).min(a.min(b).max(c))
}

/// Component-wise median of the left, above and above-right vectors.
fn mv_predictor(field: &[Mv], cols: usize, i: usize) -> Mv {
    let (c, r) = (i % cols, i / cols);
    let left = (c > 0).then(|| field[i - 1]);
    let above = (r > 0).then(|| field[i - cols]);
    let above_right = (r > 0 && c + 1 < cols).then(|| field[i - cols + 1]);
    match (left, above, above_right) {
        (Some(a), Some(b), Some(d)) => Mv::new(median3(a.x, b.x, d.x), median3(a.y, b.y, d.y)),
        (Some(a), _, _) => a,
        (None, Some(b), _) => b,
        _ => Mv::ZERO,
    }
}

/// Rate-constrained integer search over the window that keeps the block
/// inside the reference, then half- and quarter-sample refinement. Returns
/// the vector, its prediction, SAD and rate-weighted cost.
#[allow(clippy::too_many_arguments)]
fn search(
    cur: &[u8],
    reference: &Plane,
    bx: usize,
    by: usize,
    bw: usize,
    bh: usize,
    range: usize,
    pred_mv: Mv,
    lambda: f64,
) -> (Mv, Vec<u8>, u32, f64) {
    let (w, h) = (reference.width() as isize, reference.height() as isize);
    let r = range as isize;
    let (x0, y0) = (bx as isize, by as isize);
    let dx_lo = (-r).max(-x0);
    let dx_hi = r.min(w - bw as isize - x0);
    let dy_lo = (-r).max(-y0);
    let dy_hi = r.min(h - bh as isize - y0);

    let sad_at = |dx: isize, dy: isize, limit: f64| -> u32 {
        let mut acc = 0u32;
        for y in 0..bh {
            let row = &reference.row((y0 + dy) as usize + y)[(x0 + dx) as usize..][..bw];
            acc += sad_block(&cur[y * bw..y * bw + bw], row);
            if f64::from(acc) >= limit {
                return acc;
            }
        }
        acc
    };
    let rate = |mv: Mv| lambda * f64::from(mv_bits(mv, pred_mv));
    let mut best = Mv::ZERO;
    let mut best_sad = sad_at(0, 0, f64::INFINITY);
    let mut best_cost = f64::from(best_sad) + rate(best);
    for dy in dy_lo..=dy_hi {
        for dx in dx_lo..=dx_hi {
            let mv = Mv::from_integer(dx, dy);
            let rc = rate(mv);
            if rc >= best_cost {
                continue;
            }
            let s = sad_at(dx, dy, best_cost - rc);
            let c = f64::from(s) + rc;
            if c < best_cost {
                best_cost = c;
                best_sad = s;
                best = mv;
            }
        }
    }

    let mut mv = best;
    let mut pred = vec![0u8; bw * bh];
    predict_block(reference, bx, by, bw, bh, mv, &mut pred);
    let mut cand = vec![0u8; bw * bh];
    for step in [2i16, 1] {
        let center = mv;
        for (ddx, ddy) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            let m = Mv::new(center.x + ddx * step, center.y + ddy * step);
            predict_block(reference, bx, by, bw, bh, m, &mut cand);
            let s = sad_block(cur, &cand);
            let c = f64::from(s) + rate(m);
            if c < best_cost {
                best_cost = c;
                best_sad = s;
                mv = m;
                std::mem::swap(&mut pred, &mut cand);
            }
        }
    }
    (mv, pred, best_sad, best_cost)
}

/// Block motion for one picture in raster order, each vector coded against
/// the median of its causal neighbours. Bi-prediction is tried when two
/// references are available.
pub(crate) fn estimate_motion(
    src: &Plane,
    refs: &[&Plane],
    block_size: usize,
    range: usize,
    qp: u8,
) -> Vec<BlockMotion> {
    let (w, h) = (src.width(), src.height());
    let cols = w.div_ceil(block_size);
    let rows = h.div_ceil(block_size);
    let lam = lambda(qp);
    let mut fields = [vec![Mv::ZERO; cols * rows], vec![Mv::ZERO; cols * rows]];
    let mut out = Vec::with_capacity(cols * rows);
    for i in 0..cols * rows {
        let bx = (i % cols) * block_size;
        let by = (i / cols) * block_size;
        let bw = block_size.min(w - bx);
        let bh = block_size.min(h - by);
        let cur = source_block(src, bx, by, bw, bh);
        let p0 = mv_predictor(&fields[0], cols, i);
        let (mv0, mut pred0, _, c0) = search(&cur, refs[0], bx, by, bw, bh, range, p0, lam);
        let (mut m, bits) = if refs.len() == 1 {
            (
                BlockMotion {
                    mode: PredMode::L0,
                    mv: [mv0, Mv::ZERO],
                },
                mv_bits(mv0, p0) + 1,
            )
        } else {
            let p1 = mv_predictor(&fields[1], cols, i);
            let (mv1, pred1, _, c1) = search(&cur, refs[1], bx, by, bw, bh, range, p1, lam);
            let mut bi = pred0.clone();
            average_into(&mut bi, &pred1);
            let b0 = mv_bits(mv0, p0) + 1;
            let b1 = mv_bits(mv1, p1) + 1;
            let bb = mv_bits(mv0, p0) + mv_bits(mv1, p1) + 4;
            let cb = f64::from(sad_block(&cur, &bi)) + lam * f64::from(bb);
            let (c0, c1) = (c0 + lam, c1 + lam);
            if c0 <= c1 && c0 <= cb {
                (
                    BlockMotion {
                        mode: PredMode::L0,
                        mv: [mv0, Mv::ZERO],
                    },
                    b0,
                )
            } else if c1 <= cb {
                pred0 = pred1;
                (
                    BlockMotion {
                        mode: PredMode::L1,
                        mv: [Mv::ZERO, mv1],
                    },
                    b1,
                )
            } else {
                pred0 = bi;
                (
                    BlockMotion {
                        mode: PredMode::Bi,
                        mv: [mv0, mv1],
                    },
                    bb,
                )
            }
        };
        // Merge against explicit motion on squared error plus rate: merge
        // costs a flag and an index, explicit motion adds the merge flag,
        // reference index and predictor index to its vector bits.
        let lam_mode = lam * lam;
        let mut best = f64::from(sse_block(&cur, &pred0)) + lam_mode * f64::from(bits + 3);
        let mut merged = vec![0u8; bw * bh];
        let (c, r) = (i % cols, i / cols);
        let neighbours = [
            (c > 0).then(|| i - 1),
            (r > 0).then(|| i - cols),
            (r > 0 && c + 1 < cols).then(|| i - cols + 1),
            (r > 0 && c > 0).then(|| i - cols - 1),
        ];
        for &k in neighbours.iter().flatten() {
            let cand: BlockMotion = out[k];
            predict_motion(refs, bx, by, bw, bh, &cand, &mut merged);
            let cost = f64::from(sse_block(&cur, &merged)) + 2.0 * lam_mode;
            if cost < best {
                best = cost;
                m = cand;
            }
        }
        // Predictors follow the chosen vectors; unused lists inherit.
        fields[0][i] = if m.mode == PredMode::L1 { p0 } else { m.mv[0] };
        fields[1][i] = if m.mode == PredMode::L0 { mv_predictor(&fields[1], cols, i) } else { m.mv[1] };
        out.push(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_integer_translation() {
        let r = Plane::from_fn(64, 64, |x, y| ((x * 13 + y * 29 + x * y) % 251) as u8);
        let cur = Plane::from_fn(64, 64, |x, y| r.get_clamped(x as isize + 3, y as isize - 2));
        let m = estimate_motion(&cur, &[&r], 16, 8, 32);
        assert_eq!(m[5].mv[0], Mv::from_integer(3, -2));
        assert_eq!(m[5].mode, PredMode::L0);
    }

    #[test]
    fn rejects_mismatched_frames() {
        let a = Plane::new(64, 64, 0);
        let b = Plane::new(32, 64, 0);
        assert!(encode_sequence(&[a.clone(), b], &EncoderConfig::default()).is_err());
        assert!(encode_sequence(&[], &EncoderConfig::default()).is_err());
        let cfg = EncoderConfig {
            qp: QpSchedule::PerFrame(vec![30]),
            ..Default::default()
        };
        assert!(encode_sequence(&[a.clone(), a], &cfg).is_err());
    }
}
