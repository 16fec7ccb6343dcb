//! Raw 8-bit luma files: frames stored back to back, row-major.

use std::fs;
use std::path::Path;

use super::plane::Plane;
use crate::error::{Error, Result};

/// Reads `frames` planes of `width x height`. With `frames == None` the count
/// is taken from the file size, which must be a whole number of frames.
pub fn read_raw_luma(path: &Path, width: usize, height: usize, frames: Option<usize>) -> Result<Vec<Plane>> {
    let bytes = fs::read(path)?;
    let size = width * height;
    if size == 0 {
        return Err(Error::validation("frame dimensions must be positive"));
    }
    let count = match frames {
        Some(n) => n,
        None if bytes.len() % size == 0 => bytes.len() / size,
        None => {
            return Err(Error::format(
                "raw luma file",
                format!("{} bytes is not a multiple of the {size}-byte frame", bytes.len()),
            ))
        }
    };
    if bytes.len() < count * size {
        return Err(Error::format(
            "raw luma file",
            format!("{} bytes, {count} frames need {}", bytes.len(), count * size),
        ));
    }
    Ok(bytes
        .chunks_exact(size)
        .take(count)
        .map(|c| Plane::from_vec(width, height, c.to_vec()).expect("chunk has frame size"))
        .collect())
}

pub fn write_raw_luma(path: &Path, frames: &[Plane]) -> Result<()> {
    let mut bytes = Vec::with_capacity(frames.iter().map(|f| f.data().len()).sum());
    for f in frames {
        bytes.extend_from_slice(f.data());
    }
    crate::io::write_atomic(path, &bytes)
}
