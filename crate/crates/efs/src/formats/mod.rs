//! On-disk formats: BSQ rasters, sample CSVs, label maps, rankings,
//! SVM models and scene specs.

pub mod image;
pub mod map;
pub mod model;
pub mod ranking;
pub mod samples;
pub mod scene;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `key = value` lines; `#` starts a comment.
pub(crate) fn key_values(text: &str) -> impl Iterator<Item = (usize, std::result::Result<(&str, &str), &str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        Some((
            i + 1,
            line.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or(line),
        ))
    })
}

/// Replaces a file name's extension-like suffix: `scene` + `.hdr`.
pub(crate) fn with_suffix(base: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}
