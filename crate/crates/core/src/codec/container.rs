//! Versioned binary container for [`ProxySequence`].
//!
//! ```text
//! magic "SGCCPSEQ" | version u16 | section count u16
//! section table: (tag [u8; 4], offset u64, length u64) per section
//! HEAD: width, height, ctu size, block size, search range, frames (u32 each)
//! GOPS: gop size, intra period (u32 each)
//! FRMS: per frame poc u32, type u8, layer u8, qp u8, ref count u8, refs u32..,
//!       block count u32, (mode u8, mv0.x, mv0.y, mv1.x, mv1.y i16)..,
//!       level count u32, levels i16..
//! ```
//! All integers are little-endian.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::gop::{FrameType, GopStructure};
use super::interp::Mv;
use super::sequence::{BlockMotion, EncodedFrame, PredMode, ProxySequence};
use crate::error::{Error, Result};
use crate::types::FrameLayout;

pub const MAGIC: &[u8; 8] = b"SGCCPSEQ";
pub const VERSION: u16 = 1;

const TAGS: [&[u8; 4]; 3] = [b"HEAD", b"GOPS", b"FRMS"];

fn bad(detail: impl Into<String>) -> Error {
    Error::format("proxy sequence container", detail)
}

fn head(seq: &ProxySequence) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [
        seq.layout.width(),
        seq.layout.height(),
        seq.layout.ctu_size(),
        seq.block_size,
        seq.search_range,
        seq.len(),
    ] {
        b.write_u32::<LE>(v as u32).unwrap();
    }
    b
}

fn frames(seq: &ProxySequence) -> Vec<u8> {
    let mut b = Vec::new();
    for f in &seq.frames {
        b.write_u32::<LE>(f.poc as u32).unwrap();
        b.write_u8(match f.frame_type {
            FrameType::I => 0,
            FrameType::B => 1,
        })
        .unwrap();
        b.write_u8(f.layer).unwrap();
        b.write_u8(f.qp).unwrap();
        b.write_u8(f.refs.len() as u8).unwrap();
        for &r in &f.refs {
            b.write_u32::<LE>(r as u32).unwrap();
        }
        b.write_u32::<LE>(f.motion.len() as u32).unwrap();
        for m in &f.motion {
            b.write_u8(m.mode as u8).unwrap();
            for mv in m.mv {
                b.write_i16::<LE>(mv.x).unwrap();
                b.write_i16::<LE>(mv.y).unwrap();
            }
        }
        b.write_u32::<LE>(f.levels.len() as u32).unwrap();
        for &l in &f.levels {
            b.write_i16::<LE>(l).unwrap();
        }
    }
    b
}

pub fn to_bytes(seq: &ProxySequence) -> Vec<u8> {
    let mut gops = Vec::new();
    gops.write_u32::<LE>(seq.gop.gop_size as u32).unwrap();
    gops.write_u32::<LE>(seq.gop.intra_period as u32).unwrap();
    let sections = [head(seq), gops, frames(seq)];

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u16::<LE>(VERSION).unwrap();
    out.write_u16::<LE>(sections.len() as u16).unwrap();
    let mut offset = (out.len() + sections.len() * 20) as u64;
    for (tag, s) in TAGS.iter().zip(&sections) {
        out.extend_from_slice(*tag);
        out.write_u64::<LE>(offset).unwrap();
        out.write_u64::<LE>(s.len() as u64).unwrap();
        offset += s.len() as u64;
    }
    for s in &sections {
        out.extend_from_slice(s);
    }
    out
}

fn section<'a>(bytes: &'a [u8], table: &[([u8; 4], u64, u64)], tag: &[u8; 4]) -> Result<&'a [u8]> {
    let &(_, off, len) = table
        .iter()
        .find(|(t, _, _)| t == tag)
        .ok_or_else(|| bad(format!("missing section {}", String::from_utf8_lossy(tag))))?;
    let end = off.checked_add(len).filter(|&e| e <= bytes.len() as u64);
    match end {
        Some(end) => Ok(&bytes[off as usize..end as usize]),
        None => Err(bad(format!(
            "section {} runs past the end of the file",
            String::from_utf8_lossy(tag)
        ))),
    }
}

fn read_u32s<const K: usize>(c: &mut Cursor<&[u8]>) -> std::io::Result<[usize; K]> {
    let mut out = [0; K];
    for v in &mut out {
        *v = c.read_u32::<LE>()? as usize;
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ProxySequence> {
    let trunc = |e: std::io::Error| bad(format!("truncated data: {e}"));
    let mut c = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    c.read_exact(&mut magic).map_err(trunc)?;
    if &magic != MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let version = c.read_u16::<LE>().map_err(trunc)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = c.read_u16::<LE>().map_err(trunc)?;
    let mut table = Vec::new();
    for _ in 0..count {
        let mut tag = [0u8; 4];
        c.read_exact(&mut tag).map_err(trunc)?;
        let off = c.read_u64::<LE>().map_err(trunc)?;
        let len = c.read_u64::<LE>().map_err(trunc)?;
        table.push((tag, off, len));
    }

    let mut h = Cursor::new(section(bytes, &table, b"HEAD")?);
    let [width, height, ctu, block_size, search_range, nframes] = read_u32s::<6>(&mut h).map_err(trunc)?;
    let mut g = Cursor::new(section(bytes, &table, b"GOPS")?);
    let [gop_size, intra_period] = read_u32s::<2>(&mut g).map_err(trunc)?;
    let layout = FrameLayout::new(width, height, ctu)?;
    let gop = GopStructure::new(nframes, gop_size, intra_period)?;
    if block_size == 0 || block_size % 8 != 0 {
        return Err(bad(format!("block size {block_size}")));
    }
    let nblocks = width.div_ceil(block_size) * height.div_ceil(block_size);

    let mut f = Cursor::new(section(bytes, &table, b"FRMS")?);
    let mut out = Vec::with_capacity(nframes);
    for expect_poc in 0..nframes {
        let poc = f.read_u32::<LE>().map_err(trunc)? as usize;
        let frame_type = match f.read_u8().map_err(trunc)? {
            0 => FrameType::I,
            1 => FrameType::B,
            t => return Err(bad(format!("frame {poc}: unknown type {t}"))),
        };
        let layer = f.read_u8().map_err(trunc)?;
        let qp = f.read_u8().map_err(trunc)?;
        let nrefs = f.read_u8().map_err(trunc)?;
        let refs = (0..nrefs)
            .map(|_| f.read_u32::<LE>().map(|r| r as usize))
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(trunc)?;
        let info = gop.frame(expect_poc);
        if poc != expect_poc || frame_type != info.frame_type || layer != info.layer || refs != info.refs {
            return Err(bad(format!("frame {expect_poc} disagrees with the GOP structure")));
        }
        if qp > 51 {
            return Err(bad(format!("frame {poc}: QP {qp}")));
        }
        let nm = f.read_u32::<LE>().map_err(trunc)? as usize;
        let expected_blocks = if frame_type == FrameType::I { 0 } else { nblocks };
        if nm != expected_blocks {
            return Err(bad(format!("frame {poc}: {nm} motion blocks, expected {expected_blocks}")));
        }
        let mut motion = Vec::with_capacity(nm);
        for _ in 0..nm {
            let mode = PredMode::from_u8(f.read_u8().map_err(trunc)?)
                .ok_or_else(|| bad(format!("frame {poc}: bad prediction mode")))?;
            if refs.len() < 2 && mode != PredMode::L0 {
                return Err(bad(format!("frame {poc}: mode {mode:?} needs two references")));
            }
            let mut mv = [Mv::ZERO; 2];
            for m in &mut mv {
                m.x = f.read_i16::<LE>().map_err(trunc)?;
                m.y = f.read_i16::<LE>().map_err(trunc)?;
            }
            motion.push(BlockMotion { mode, mv });
        }
        let nl = f.read_u32::<LE>().map_err(trunc)? as usize;
        if nl != width * height {
            return Err(bad(format!("frame {poc}: {nl} residual levels")));
        }
        let mut levels = vec![0i16; nl];
        f.read_i16_into::<LE>(&mut levels).map_err(trunc)?;
        out.push(EncodedFrame {
            poc,
            frame_type,
            layer,
            qp,
            refs,
            motion,
            levels,
        });
    }
    Ok(ProxySequence {
        layout,
        gop,
        block_size,
        search_range,
        frames: out,
    })
}

pub fn write_sequence(path: &Path, seq: &ProxySequence) -> Result<()> {
    crate::io::write_atomic(path, &to_bytes(seq))
}

pub fn read_sequence(path: &Path) -> Result<ProxySequence> {
    from_bytes(&std::fs::read(path)?)
}
