//! File plumbing shared by the command-line front end and the examples.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{normalize_saliency, FrameLayout, SaliencyMap};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Parses `frame_index,w_0,...,w_{N-1}` lines. Raw values are normalized by
/// their per-frame maximum. Blank lines and `#` comments are skipped.
pub fn parse_saliency(text: &str, layout: FrameLayout) -> Result<Vec<(usize, SaliencyMap)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let bad = |d: String| Error::format("saliency file", format!("line {}: {d}", lineno + 1));
        let frame = fields
            .next()
            .unwrap_or_default()
            .parse::<usize>()
            .map_err(|e| bad(format!("frame index: {e}")))?;
        let raw = fields
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("weight {f:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if raw.len() != layout.num_ctus() {
            return Err(bad(format!(
                "{} weights, layout has {} CTUs",
                raw.len(),
                layout.num_ctus()
            )));
        }
        out.push((frame, normalize_saliency(layout, &raw)?));
    }
    Ok(out)
}

pub fn format_saliency(maps: &[(usize, SaliencyMap)]) -> String {
    let mut s = String::new();
    for (k, m) in maps {
        s.push_str(&k.to_string());
        for w in m.weights() {
            s.push(',');
            s.push_str(&w.to_string());
        }
        s.push('\n');
    }
    s
}

pub fn read_saliency(path: &Path, layout: FrameLayout) -> Result<Vec<(usize, SaliencyMap)>> {
    parse_saliency(&fs::read_to_string(path)?, layout)
}

/// Orders maps by frame index and requires exactly one map for each of
/// `0..frames`. `frames = None` takes the count from the maps.
pub fn saliency_sequence(maps: Vec<(usize, SaliencyMap)>, frames: Option<usize>) -> Result<Vec<SaliencyMap>> {
    let count = frames.unwrap_or(maps.len());
    let mut slots: Vec<Option<SaliencyMap>> = vec![None; count];
    for (k, m) in maps {
        match slots.get_mut(k) {
            Some(slot @ None) => *slot = Some(m),
            Some(Some(_)) => return Err(Error::validation(format!("saliency given twice for frame {k}"))),
            None => return Err(Error::validation(format!("saliency for frame {k}, sequence has {count} frames"))),
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(k, m)| m.ok_or_else(|| Error::validation(format!("no saliency for frame {k}"))))
        .collect()
}
