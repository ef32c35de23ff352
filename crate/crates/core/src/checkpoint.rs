//! Binary checkpoints of a pair.
//!
//! Layout, all little-endian: magic `YMHF`, `u32` format version, `u32` grid
//! side `N`, `u32` rank `n`, `u32` group tag, then `α` followed by `φ` as
//! `(re, im)` `f64` pairs (site-major, row-major entries), then the CRC32 of
//! every preceding byte.

use std::fs;
use std::path::Path;

use crate::error::{io_at, Error, Result};
use crate::field::{FieldKind, MatrixField};
use crate::grid::{make_grid, Grid};
use crate::group::{descriptor, GroupName};
use crate::higgs::HiggsPair;
use crate::matrix::C64;

pub const MAGIC: &[u8; 4] = b"YMHF";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

/// Serializes a pair into the checkpoint layout.
pub fn encode(pair: &HiggsPair) -> Vec<u8> {
    let values = pair.alpha().data().len() + pair.phi().data().len();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * values + 4);
    out.extend_from_slice(MAGIC);
    for word in [
        FORMAT_VERSION,
        pair.grid().side() as u32,
        pair.rank() as u32,
        pair.group().name().tag(),
    ] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    for c in pair.alpha().data().iter().chain(pair.phi().data()) {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses a checkpoint; `origin` names the source in errors.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<HiggsPair> {
    let bad = |detail: String| Error::Checkpoint {
        path: origin.to_path_buf(),
        detail,
    };
    if bytes.len() < HEADER_LEN + 4 {
        return Err(bad(format!("truncated: {} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(bad("CRC mismatch (truncated or corrupted)".into()));
    }
    let word = |i: usize| u32::from_le_bytes(body[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    let version = word(0);
    if version != FORMAT_VERSION {
        return Err(bad(format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    let (side, n, tag) = (word(1) as usize, word(2) as usize, word(3));
    let group = GroupName::from_tag(tag).ok_or_else(|| bad(format!("unknown group tag {tag}")))?;
    let grid: Grid = make_grid(side).map_err(|e| bad(e.to_string()))?;
    let per_field = grid.sites() * n * n;
    let payload = &body[HEADER_LEN..];
    if payload.len() != 2 * 16 * per_field {
        return Err(bad(format!(
            "payload has {} bytes, expected {} for N = {side}, n = {n}",
            payload.len(),
            32 * per_field
        )));
    }
    let mut values = payload.chunks_exact(16).map(|c| {
        let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
        C64::new(re, im)
    });
    let alpha: Vec<C64> = values.by_ref().take(per_field).collect();
    let phi: Vec<C64> = values.collect();
    let desc = descriptor(group, n).map_err(|e| bad(e.to_string()))?;
    let alpha = MatrixField::from_data(&grid, n, FieldKind::Form01, alpha)?;
    let phi = MatrixField::from_data(&grid, n, FieldKind::Form10, phi)?;
    HiggsPair::new(alpha, phi, desc).map_err(|e| bad(e.to_string()))
}

pub fn save(path: &Path, pair: &HiggsPair) -> Result<()> {
    fs::write(path, encode(pair)).map_err(io_at(path))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<HiggsPair> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    decode(&bytes, path)
}
