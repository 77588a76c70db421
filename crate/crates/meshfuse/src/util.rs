//! Small shared helpers: fixed-precision quantization, atomic file writes,
//! and a stable content digest for provenance records.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Rounds to 6 decimal places, the precision of every fractional field in
/// the CSV interfaces. Values that will be written out are quantized at the
/// source so in-memory state and reloaded files stay bit-identical.
pub fn q6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Writes `contents` to `path` atomically (write to a sibling temp file,
/// then rename into place).
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// FNV-1a 64-bit digest, rendered as 16 hex digits. Used to fingerprint the
/// training logs inside a bundle manifest; not a cryptographic hash.
pub fn fnv1a64(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    format!("{h:016x}")
}
