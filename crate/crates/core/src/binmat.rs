//! Minimal binary matrix file format for embeddings and belief exports.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic  b"TAGM"
//! 4       4     format version (currently 1)
//! 8       4     rows   (u32)
//! 12      4     cols   (u32)
//! 16      ...   rows * cols * f32, row-major
//! ```
//!
//! Values are stored as `f32` for size and loaded into `f64` for compute.
//! Readers validate magic, version, exact payload length, and finiteness,
//! so a truncated or corrupt file fails loudly instead of producing NaNs
//! downstream.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"TAGM";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BinMatError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic (not a matrix file)")]
    BadMagic { path: String },
    #[error("{path}: unsupported format version {found} (expected {VERSION})")]
    BadVersion { path: String, found: u32 },
    #[error("{path}: payload holds {found} values, header promises {expected}")]
    PayloadSize {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: non-finite value at row {row}, col {col}")]
    NonFinite {
        path: String,
        row: usize,
        col: usize,
    },
    #[error("matrix dimensions {rows}x{cols} do not match {len} values")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix dimension exceeds u32 range: {0}")]
    TooLarge(usize),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BinMatError + '_ {
    move |source| BinMatError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes a row-major `rows x cols` matrix. Values are narrowed to `f32`.
pub fn write_matrix(
    path: &Path,
    rows: usize,
    cols: usize,
    values: &[f64],
) -> Result<(), BinMatError> {
    if values.len() != rows * cols {
        return Err(BinMatError::ShapeMismatch {
            rows,
            cols,
            len: values.len(),
        });
    }
    let rows32 = u32::try_from(rows).map_err(|_| BinMatError::TooLarge(rows))?;
    let cols32 = u32::try_from(cols).map_err(|_| BinMatError::TooLarge(cols))?;
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(&MAGIC).map_err(io_err(path))?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err(path))?;
    w.write_all(&rows32.to_le_bytes()).map_err(io_err(path))?;
    w.write_all(&cols32.to_le_bytes()).map_err(io_err(path))?;
    for &v in values {
        w.write_all(&(v as f32).to_le_bytes())
            .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a matrix written by [`write_matrix`]; returns `(rows, cols, values)`.
pub fn read_matrix(path: &Path) -> Result<(usize, usize, Vec<f64>), BinMatError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(io_err(path))?;
    if header[0..4] != MAGIC {
        return Err(BinMatError::BadMagic {
            path: path.display().to_string(),
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(BinMatError::BadVersion {
            path: path.display().to_string(),
            found: version,
        });
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let expected = rows * cols;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload).map_err(io_err(path))?;
    if payload.len() != expected * 4 {
        return Err(BinMatError::PayloadSize {
            path: path.display().to_string(),
            expected,
            found: payload.len() / 4,
        });
    }
    let mut values = Vec::with_capacity(expected);
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        if !v.is_finite() {
            return Err(BinMatError::NonFinite {
                path: path.display().to_string(),
                row: k / cols,
                col: k % cols,
            });
        }
        values.push(v);
    }
    Ok((rows, cols, values))
}
