//! `fvecs` / `ivecs` files: each record is a little-endian `i32` length
//! followed by that many little-endian `f32` (or `i32`) values.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;

fn format_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        msg: msg.into(),
    }
}

/// Splits a buffer into records, returning `(dim, payload offset)` per record.
///
/// With `uniform`, every record must have the same positive length; otherwise
/// lengths may vary and zero is allowed.
fn records(bytes: &[u8], uniform: bool) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut pos = 0;
    let mut first: Option<usize> = None;
    while pos < bytes.len() {
        if bytes.len() - pos < 4 {
            return Err(format_err(pos, "truncated record header"));
        }
        let d = i32::from_le_bytes([bytes[pos], bytes[pos + 1], bytes[pos + 2], bytes[pos + 3]]);
        if d < 0 || (uniform && d == 0) {
            return Err(format_err(pos, format!("invalid record length {d}")));
        }
        let d = d as usize;
        if uniform {
            match first {
                None => first = Some(d),
                Some(f) if f != d => {
                    return Err(format_err(pos, format!("record length {d} differs from {f}")));
                }
                _ => {}
            }
        }
        let payload = pos + 4;
        if (bytes.len() - payload) / 4 < d {
            return Err(format_err(pos, format!("truncated record of length {d}")));
        }
        out.push((d, payload));
        pos = payload + 4 * d;
    }
    Ok(out)
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    Ok(bytes)
}

/// Parses `fvecs` bytes into raw rows.
pub fn parse_fvecs(bytes: &[u8]) -> Result<Vec<Vec<f32>>> {
    Ok(records(bytes, true)?
        .into_iter()
        .map(|(d, at)| {
            bytes[at..at + 4 * d]
                .chunks_exact(4)
                .map(|w| f32::from_le_bytes([w[0], w[1], w[2], w[3]]))
                .collect()
        })
        .collect())
}

pub fn encode_fvecs<R: AsRef<[f32]>>(rows: &[R]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut dim = None;
    for r in rows {
        let r = r.as_ref();
        if r.is_empty() || *dim.get_or_insert(r.len()) != r.len() {
            return Err(Error::Dimension {
                expected: dim.unwrap_or(1),
                got: r.len(),
            });
        }
        let d = i32::try_from(r.len()).map_err(|_| Error::Domain("dimension exceeds i32".into()))?;
        out.extend_from_slice(&d.to_le_bytes());
        for v in r {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_fvecs_raw(path: &Path) -> Result<Vec<Vec<f32>>> {
    parse_fvecs(&read_all(path)?)
}

pub fn write_fvecs_raw<R: AsRef<[f32]>>(rows: &[R], path: &Path) -> Result<()> {
    write_bytes(&encode_fvecs(rows)?, path)
}

/// Reads an `fvecs` file and normalizes each row onto the unit sphere.
pub fn read_fvecs(path: &Path) -> Result<Dataset> {
    let rows = read_fvecs_raw(path)?;
    if rows.is_empty() {
        return Err(format_err(0, "no records"));
    }
    let wide: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    Dataset::from_rows(&wide)
}

/// Writes a dataset as `fvecs` (coefficients rounded to `f32`).
pub fn write_fvecs(dataset: &Dataset, path: &Path) -> Result<()> {
    let rows: Vec<Vec<f32>> = dataset
        .iter()
        .map(|r| r.iter().map(|&v| v as f32).collect())
        .collect();
    write_fvecs_raw(&rows, path)
}

/// Parses `ivecs` bytes. Record lengths may differ and may be zero, which
/// suits per-query ground-truth lists.
pub fn parse_ivecs(bytes: &[u8]) -> Result<Vec<Vec<i32>>> {
    Ok(records(bytes, false)?
        .into_iter()
        .map(|(d, at)| {
            bytes[at..at + 4 * d]
                .chunks_exact(4)
                .map(|w| i32::from_le_bytes([w[0], w[1], w[2], w[3]]))
                .collect()
        })
        .collect())
}

pub fn encode_ivecs<R: AsRef<[i32]>>(rows: &[R]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in rows {
        let r = r.as_ref();
        let d = i32::try_from(r.len()).map_err(|_| Error::Domain("record exceeds i32".into()))?;
        out.extend_from_slice(&d.to_le_bytes());
        for v in r {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_ivecs(path: &Path) -> Result<Vec<Vec<i32>>> {
    parse_ivecs(&read_all(path)?)
}

pub fn write_ivecs<R: AsRef<[i32]>>(rows: &[R], path: &Path) -> Result<()> {
    write_bytes(&encode_ivecs(rows)?, path)
}

/// Id lists as `ivecs`.
pub fn write_id_lists(lists: &[Vec<usize>], path: &Path) -> Result<()> {
    let rows = lists
        .iter()
        .map(|l| {
            l.iter()
                .map(|&v| i32::try_from(v).map_err(|_| Error::Domain(format!("id {v} exceeds i32"))))
                .collect::<Result<Vec<i32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    write_ivecs(&rows, path)
}

pub fn read_id_lists(path: &Path) -> Result<Vec<Vec<usize>>> {
    read_ivecs(path)?
        .into_iter()
        .map(|l| {
            l.into_iter()
                .map(|v| usize::try_from(v).map_err(|_| Error::Domain(format!("negative id {v}"))))
                .collect()
        })
        .collect()
}

fn write_bytes(bytes: &[u8], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}
