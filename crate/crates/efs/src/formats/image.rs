//! `<name>.hdr` text header plus `<name>.bin` float32 little-endian BSQ payload.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use efs_core::dataset::MultibandImage;

use super::{key_values, read_text, with_suffix, write_bytes};
use crate::error::{Error, Result};

/// Payload path for a header path: `scene.hdr` -> `scene.bin`.
pub fn payload_path(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

pub fn load_image(header_path: &Path) -> Result<MultibandImage> {
    let text = read_text(header_path)?;
    let mut keys = BTreeMap::new();
    for (line, kv) in key_values(&text) {
        let (k, v) = kv.map_err(|l| Error::format(header_path, format!("line {line}: expected key=value, got {l:?}")))?;
        keys.insert(k.to_ascii_lowercase(), v.to_string());
    }
    let get = |key: &str| {
        keys.get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::format(header_path, format!("missing key {key:?}")))
    };
    let dim = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::format(header_path, format!("{key} is not a non-negative integer")))
    };
    let (width, height, bands) = (dim("width")?, dim("height")?, dim("bands")?);
    for (key, want) in [("dtype", "float32"), ("interleave", "bsq"), ("byteorder", "little")] {
        let got = get(key)?;
        if !got.eq_ignore_ascii_case(want) {
            return Err(Error::format(header_path, format!("unsupported {key} {got:?} (only {want})")));
        }
    }

    let bin = payload_path(header_path);
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bands))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(header_path, "image dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            &bin,
            format!(
                "size mismatch: header needs {expected} bytes ({width}x{height}x{bands} float32), file has {}",
                bytes.len()
            ),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    MultibandImage::new(width, height, bands, data).map_err(|e| Error::format(&bin, e.to_string()))
}

/// Writes `<base>.hdr` and `<base>.bin`; returns the header path.
pub fn save_image(image: &MultibandImage, base: &Path) -> Result<PathBuf> {
    let header = with_suffix(base, ".hdr");
    let text = format!(
        "width={}\nheight={}\nbands={}\ndtype=float32\ninterleave=bsq\nbyteorder=little\n",
        image.width(),
        image.height(),
        image.bands()
    );
    let mut bytes = Vec::with_capacity(image.data().len() * 4);
    for v in image.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_bytes(&header, text.as_bytes())?;
    write_bytes(&payload_path(&header), &bytes)?;
    Ok(header)
}
