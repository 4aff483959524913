//! Binary and CSV export of simulated factor paths.
//!
//! Binary layout, all little-endian: the 8-byte magic `CKPATHS\0`, `u32`
//! version, `u64` path, date and factor counts, `u64` seed, the grid dates as
//! `f64`, then factor values as `f64` in `[path][date][factor]` order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CurveError, Result};
use crate::simulation::{PathSet, SimGrid};

const MAGIC: &[u8; 8] = b"CKPATHS\0";
pub const PATH_FILE_VERSION: u32 = 1;

pub fn encode_paths(p: &PathSet) -> Vec<u8> {
    let nd = p.grid.len();
    let mut out = Vec::with_capacity(44 + 8 * (nd + p.raw().len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&PATH_FILE_VERSION.to_le_bytes());
    for n in [p.n_paths as u64, nd as u64, p.n_factors as u64, p.seed] {
        out.extend_from_slice(&n.to_le_bytes());
    }
    for x in p.grid.dates().iter().chain(p.raw()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

fn malformed(path: &Path, what: &str) -> CurveError {
    CurveError::Parse {
        file: path.to_path_buf(),
        line: 0,
        column: "header".into(),
        message: what.into(),
    }
}

pub fn decode_paths(path: &Path, bytes: &[u8]) -> Result<PathSet> {
    if bytes.len() < 44 || &bytes[..8] != MAGIC {
        return Err(malformed(path, "not a path file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != PATH_FILE_VERSION {
        return Err(CurveError::IncompatibleVersion {
            found: version,
            expected: PATH_FILE_VERSION,
        });
    }
    let word = |k: usize| u64::from_le_bytes(bytes[12 + 8 * k..20 + 8 * k].try_into().expect("8 bytes"));
    let (n_paths, nd, nf, seed) = (word(0) as usize, word(1) as usize, word(2) as usize, word(3));
    let count = nd
        .checked_add(n_paths.saturating_mul(nd).saturating_mul(nf))
        .ok_or_else(|| malformed(path, "sizes overflow"))?;
    let body = &bytes[44..];
    if body.len() != 8 * count {
        return Err(malformed(
            path,
            &format!("expected {} payload bytes, found {}", 8 * count, body.len()),
        ));
    }
    let floats: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let grid = SimGrid::new(floats[..nd].to_vec())?;
    PathSet::from_raw(n_paths, grid, nf, seed, floats[nd..].to_vec())
}

pub fn write_paths(p: &PathSet, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| CurveError::io(path, e))?;
    f.write_all(&encode_paths(p)).map_err(|e| CurveError::io(path, e))
}

pub fn read_paths(path: &Path) -> Result<PathSet> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CurveError::io(path, e))?;
    decode_paths(path, &bytes)
}

/// `path,date,t,y0,…` with one row per path and date.
pub fn write_paths_csv(p: &PathSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["path".to_string(), "date".into(), "t".into()];
    header.extend((0..p.n_factors).map(|i| format!("y{i}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for k in 0..p.n_paths {
        for (d, t) in p.grid.dates().iter().enumerate() {
            let mut row = vec![k.to_string(), d.to_string(), t.to_string()];
            row.extend(p.factors(k, d).iter().map(f64::to_string));
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| CurveError::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> CurveError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CurveError::io(path, io),
        other => CurveError::Parse {
            file: path.to_path_buf(),
            line: 0,
            column: "row".into(),
            message: format!("{other:?}"),
        },
    }
}
