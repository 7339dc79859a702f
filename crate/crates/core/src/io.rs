//! Plain-text complex matrix files and atomic output writes.
//!
//! Matrix format: a header line `n`, then lines `row col re im` with 1-based
//! indices. Lines starting with `#` or `%` are comments. Entries not listed
//! are zero; a writer emits all `n²` lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra_sparse::CooMatrix;

use crate::error::{Error, Result};
use crate::linalg::{to_dense, CsrMat, C64};

pub fn parse_matrix(text: &str) -> Result<CsrMat> {
    let mut n: Option<usize> = None;
    let mut coo: Option<CooMatrix<C64>> = None;
    let mut seen = std::collections::HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(dim) = n else {
            let d: usize = match fields.as_slice() {
                [d] => d.parse().map_err(|_| parse_err(format!("bad dimension `{d}`")))?,
                _ => return Err(parse_err("expected the dimension `n` on the first line".into())),
            };
            if d == 0 {
                return Err(parse_err("dimension must be at least 1".into()));
            }
            n = Some(d);
            coo = Some(CooMatrix::new(d, d));
            continue;
        };
        let [r, c, re, im] = fields.as_slice() else {
            return Err(parse_err(format!("expected `row col re im`, got `{line}`")));
        };
        let idx = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| parse_err(format!("bad index `{s}`")))?;
            if v == 0 || v > dim {
                return Err(parse_err(format!("index {v} outside 1..={dim}")));
            }
            Ok(v - 1)
        };
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| parse_err(format!("bad number `{s}`")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value `{s}`")));
            }
            Ok(v)
        };
        let (i, j) = (idx(r)?, idx(c)?);
        if !seen.insert((i, j)) {
            return Err(parse_err(format!("entry ({}, {}) listed twice", i + 1, j + 1)));
        }
        let v = C64::new(num(re)?, num(im)?);
        if v != C64::new(0.0, 0.0) {
            coo.as_mut().expect("set with n").push(i, j, v);
        }
    }
    let coo = coo.ok_or_else(|| Error::Parse {
        line: 0,
        message: "empty matrix file".into(),
    })?;
    Ok(CsrMat::from(&coo))
}

pub fn read_matrix_file(path: &Path) -> Result<CsrMat> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn format_matrix(a: &CsrMat) -> String {
    let d = to_dense(a);
    let n = d.nrows();
    let mut out = format!("{n}\n");
    for i in 0..n {
        for j in 0..n {
            let v = d[(i, j)];
            out.push_str(&format!("{} {} {:e} {:e}\n", i + 1, j + 1, v.re, v.im));
        }
    }
    out
}

pub fn write_matrix_file(path: &Path, a: &CsrMat) -> Result<()> {
    atomic_write(path, format_matrix(a).as_bytes())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
