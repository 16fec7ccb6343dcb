//! Picture reconstruction shared by the encoder loop and the decoder.

use super::cost::CtuCost;
use super::deblock::{deblock_in_place, EdgeInfo, MotionKey};
use super::interp::{average_into, ops_per_sample, predict_block};
use super::plane::Plane;
use super::quant::{dequantize, quantize, step_q8};
use super::sequence::{BlockMotion, PredMode};
use super::skip::skip_pattern;
use super::transform::{forward, inverse, OPS_INVERSE, SIZE};
use crate::types::FrameLayout;

/// Reference sample gathering and substitution of one planar prediction.
const OPS_PLANAR_SETUP: u64 = 20;
/// Weighted sum of four references per predicted sample.
const OPS_PLANAR_SAMPLE: u64 = 4;
/// Motion syntax of one prediction block.
const OPS_BLOCK_HEADER: u64 = 4;

/// Planar prediction of the block at `(bx, by)` from the reconstructed row
/// above and column to the left. Missing neighbours are substituted from the
/// nearest available side, or mid-gray when neither side exists.
fn planar(recon: &Plane, bx: usize, by: usize, bw: usize, bh: usize, out: &mut [i32]) {
    let w = recon.width();
    let (has_top, has_left) = (by > 0, bx > 0);
    let top: Vec<i32> = (0..=bw)
        .map(|i| match (has_top, has_left) {
            (true, _) => i32::from(recon.get((bx + i).min(w - 1), by - 1)),
            (false, true) => i32::from(recon.get(bx - 1, by)),
            (false, false) => 128,
        })
        .collect();
    let left: Vec<i32> = (0..=bh)
        .map(|j| match (has_left, has_top) {
            (true, _) => i32::from(recon.get(bx - 1, by + j.min(bh - 1))),
            (false, true) => top[0],
            (false, false) => 128,
        })
        .collect();
    let (tr, bl) = (top[bw], left[bh]);
    let (bw_i, bh_i) = (bw as i32, bh as i32);
    for y in 0..bh {
        for x in 0..bw {
            let (xi, yi) = (x as i32, y as i32);
            let horiz = ((bw_i - 1 - xi) * left[y] + (xi + 1) * tr) * bh_i;
            let vert = ((bh_i - 1 - yi) * top[x] + (yi + 1) * bl) * bw_i;
            out[y * bw + x] = (horiz + vert + bw_i * bh_i) / (2 * bw_i * bh_i);
        }
    }
}

/// Levels of one residual block. Full 8x8 blocks are transformed; narrower
/// blocks at the picture edge are quantized sample by sample.
fn code_block(resid: &[i32], bw: usize, bh: usize, step: i32) -> Vec<i16> {
    if bw == SIZE && bh == SIZE {
        let mut x = [0i32; SIZE * SIZE];
        x.copy_from_slice(resid);
        forward(&x).iter().map(|&c| quantize(c, step)).collect()
    } else {
        resid.iter().map(|&r| quantize(r, step)).collect()
    }
}

/// Reconstructed residual of one block and whether an inverse transform ran.
fn decode_block(levels: &[i16], bw: usize, bh: usize, step: i32, out: &mut [i32]) -> bool {
    if levels.iter().all(|&l| l == 0) {
        out.fill(0);
        return false;
    }
    if bw == SIZE && bh == SIZE {
        let mut c = [0i32; SIZE * SIZE];
        for (c, &l) in c.iter_mut().zip(levels) {
            *c = dequantize(l, step);
        }
        out.copy_from_slice(&inverse(&c));
        true
    } else {
        for (o, &l) in out.iter_mut().zip(levels) {
            *o = dequantize(l, step);
        }
        false
    }
}

fn read_block(levels: &[i16], w: usize, bx: usize, by: usize, bw: usize, bh: usize) -> Vec<i16> {
    (0..bh)
        .flat_map(|y| levels[(by + y) * w + bx..][..bw].iter().copied())
        .collect()
}

fn write_block(levels: &mut [i16], w: usize, bx: usize, by: usize, bw: usize, block: &[i16]) {
    for (y, row) in block.chunks(bw).enumerate() {
        levels[(by + y) * w + bx..][..bw].copy_from_slice(row);
    }
}

/// Charges parsing and reconstruction of one residual block.
fn charge_residual(c: &mut CtuCost, n: u64, transformed: bool) {
    c.recon += n;
    c.parse += n;
    if transformed {
        c.recon += OPS_INVERSE;
    }
}

/// Intra reconstruction with planar prediction per 8x8 block. With a
/// `source` the residual levels are computed and written into `levels`;
/// without one they are read from it.
fn intra_reconstruct(
    layout: &FrameLayout,
    qp: u8,
    source: Option<&Plane>,
    levels: &mut [i16],
) -> (Plane, Vec<CtuCost>) {
    let (w, h) = (layout.width(), layout.height());
    let step = step_q8(qp);
    let mut recon = Plane::new(w, h, 0);
    let mut costs = vec![CtuCost::default(); layout.num_ctus()];
    let mut pred = [0i32; SIZE * SIZE];
    let mut resid = [0i32; SIZE * SIZE];
    for by in (0..h).step_by(SIZE) {
        for bx in (0..w).step_by(SIZE) {
            let bw = SIZE.min(w - bx);
            let bh = SIZE.min(h - by);
            let n = bw * bh;
            planar(&recon, bx, by, bw, bh, &mut pred[..n]);
            if let Some(src) = source {
                let r: Vec<i32> = (0..n)
                    .map(|i| i32::from(src.get(bx + i % bw, by + i / bw)) - pred[i].clamp(0, 255))
                    .collect();
                write_block(levels, w, bx, by, bw, &code_block(&r, bw, bh, step));
            }
            let block = read_block(levels, w, bx, by, bw, bh);
            let transformed = decode_block(&block, bw, bh, step, &mut resid[..n]);
            for i in 0..n {
                let v = pred[i].clamp(0, 255) + resid[i];
                recon.set(bx + i % bw, by + i / bw, v.clamp(0, 255) as u8);
            }
            let c = &mut costs[layout.ctu_at(bx, by)];
            c.recon += OPS_PLANAR_SETUP + OPS_PLANAR_SAMPLE * n as u64;
            charge_residual(c, n as u64, transformed);
        }
    }
    (recon, costs)
}

/// Encoder side of intra coding: quantizes `source` against the running
/// reconstruction.
pub(crate) fn intra_encode(
    layout: &FrameLayout,
    source: &Plane,
    qp: u8,
) -> (Vec<i16>, Plane, Vec<CtuCost>) {
    let mut levels = vec![0i16; layout.width() * layout.height()];
    let (recon, costs) = intra_reconstruct(layout, qp, Some(source), &mut levels);
    (levels, recon, costs)
}

pub(crate) fn intra_decode(layout: &FrameLayout, levels: &[i16], qp: u8) -> (Plane, Vec<CtuCost>) {
    let mut levels = levels.to_vec();
    intra_reconstruct(layout, qp, None, &mut levels)
}

/// Residual levels of `source - pred` for an inter picture.
pub(crate) fn code_residual(layout: &FrameLayout, source: &Plane, pred: &Plane, qp: u8) -> Vec<i16> {
    let (w, h) = (layout.width(), layout.height());
    let step = step_q8(qp);
    let mut levels = vec![0i16; w * h];
    for by in (0..h).step_by(SIZE) {
        for bx in (0..w).step_by(SIZE) {
            let bw = SIZE.min(w - bx);
            let bh = SIZE.min(h - by);
            let r: Vec<i32> = (0..bw * bh)
                .map(|i| {
                    let (x, y) = (bx + i % bw, by + i / bw);
                    i32::from(source.get(x, y)) - i32::from(pred.get(x, y))
                })
                .collect();
            write_block(&mut levels, w, bx, by, bw, &code_block(&r, bw, bh, step));
        }
    }
    levels
}

/// Motion-compensated prediction of a whole picture. `g` gives the skip level
/// per CTU; `None` computes every sample.
pub(crate) fn inter_predict(
    layout: &FrameLayout,
    block_size: usize,
    refs: &[&Plane],
    motion: &[BlockMotion],
    g: Option<&[u8]>,
) -> (Plane, Vec<CtuCost>) {
    let (w, h) = (layout.width(), layout.height());
    let cols = w.div_ceil(block_size);
    let mut pred = Plane::new(w, h, 0);
    let mut costs = vec![CtuCost::default(); layout.num_ctus()];
    let mut buf = vec![0u8; block_size * block_size];
    let mut buf2 = vec![0u8; block_size * block_size];
    for (i, m) in motion.iter().enumerate() {
        let bx = (i % cols) * block_size;
        let by = (i / cols) * block_size;
        let bw = block_size.min(w - bx);
        let bh = block_size.min(h - by);
        let ctu = layout.ctu_at(bx, by);
        let pattern = skip_pattern(g.map_or(0, |g| g[ctu]));
        let computed = pattern.computed_samples(bx, by, bw, bh);
        let out = &mut buf[..bw * bh];
        let c = &mut costs[ctu];
        match m.mode {
            PredMode::L0 | PredMode::L1 => {
                let r = m.mode as usize;
                predict_block(refs[r], bx, by, bw, bh, m.mv[r], out);
                c.mc += computed * ops_per_sample(m.mv[r]);
            }
            PredMode::Bi => {
                let out2 = &mut buf2[..bw * bh];
                predict_block(refs[0], bx, by, bw, bh, m.mv[0], out);
                predict_block(refs[1], bx, by, bw, bh, m.mv[1], out2);
                average_into(out, out2);
                c.mc += computed * (ops_per_sample(m.mv[0]) + ops_per_sample(m.mv[1]) + 1);
            }
        }
        c.copy += pattern.apply(out, bx, by, bw, bh);
        c.parse += OPS_BLOCK_HEADER;
        for y in 0..bh {
            let row = (by + y) * w + bx;
            pred.data_mut()[row..row + bw].copy_from_slice(&out[y * bw..y * bw + bw]);
        }
    }
    (pred, costs)
}

/// `pred + reconstructed residual`, charging parsing and reconstruction per
/// sample and an inverse transform per coded 8x8 block.
pub(crate) fn add_residual(
    layout: &FrameLayout,
    pred: &mut Plane,
    levels: &[i16],
    qp: u8,
    costs: &mut [CtuCost],
) {
    let (w, h) = (layout.width(), layout.height());
    let step = step_q8(qp);
    let mut resid = [0i32; SIZE * SIZE];
    for by in (0..h).step_by(SIZE) {
        for bx in (0..w).step_by(SIZE) {
            let bw = SIZE.min(w - bx);
            let bh = SIZE.min(h - by);
            let n = bw * bh;
            let block = read_block(levels, w, bx, by, bw, bh);
            let transformed = decode_block(&block, bw, bh, step, &mut resid[..n]);
            if block.iter().any(|&l| l != 0) {
                for i in 0..n {
                    let (x, y) = (bx + i % bw, by + i / bw);
                    let v = i32::from(pred.get(x, y)) + resid[i];
                    pred.set(x, y, v.clamp(0, 255) as u8);
                }
            }
            charge_residual(&mut costs[layout.ctu_at(bx, by)], n as u64, transformed);
        }
    }
}

/// Deblocking side information derived from the coded data.
pub(crate) fn edge_info(
    layout: &FrameLayout,
    block_size: usize,
    qp: u8,
    intra: bool,
    levels: &[i16],
    motion: &[BlockMotion],
) -> EdgeInfo {
    let (w, h) = (layout.width(), layout.height());
    let cols = w.div_ceil(8);
    let rows = h.div_ceil(8);
    let mut nonzero = vec![false; cols * rows];
    for (i, &l) in levels.iter().enumerate() {
        if l != 0 {
            nonzero[(i / w / 8) * cols + (i % w) / 8] = true;
        }
    }
    let mut keys = vec![MotionKey::default(); if intra { 0 } else { cols * rows }];
    if !intra {
        let bcols = w.div_ceil(block_size);
        for (k, key) in keys.iter_mut().enumerate() {
            let (x, y) = ((k % cols) * 8, (k / cols) * 8);
            let m = motion[(y / block_size) * bcols + x / block_size];
            *key = MotionKey {
                mode: m.mode as u8,
                mv: m.mv,
            };
        }
    }
    EdgeInfo {
        qp,
        intra,
        nonzero,
        motion: keys,
        all_edges: false,
    }
}

/// Full reconstruction of one inter picture including in-loop deblocking.
#[allow(clippy::too_many_arguments)]
pub(crate) fn inter_reconstruct(
    layout: &FrameLayout,
    block_size: usize,
    refs: &[&Plane],
    motion: &[BlockMotion],
    levels: &[i16],
    qp: u8,
    f: Option<&[u8]>,
    g: Option<&[u8]>,
) -> (Plane, Vec<CtuCost>) {
    let (mut pic, mut costs) = inter_predict(layout, block_size, refs, motion, g);
    add_residual(layout, &mut pic, levels, qp, &mut costs);
    let info = edge_info(layout, block_size, qp, false, levels, motion);
    finish_deblock(layout, &mut pic, &info, f, &mut costs);
    (pic, costs)
}

pub(crate) fn finish_deblock(
    layout: &FrameLayout,
    pic: &mut Plane,
    info: &EdgeInfo,
    f: Option<&[u8]>,
    costs: &mut [CtuCost],
) {
    let zeros;
    let flags = match f {
        Some(f) => f,
        None => {
            zeros = vec![0u8; layout.num_ctus()];
            &zeros
        }
    };
    let df = deblock_in_place(pic, flags, layout, info);
    for (c, d) in costs.iter_mut().zip(df) {
        c.df += d;
    }
}
