//! `MVIX` index container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MVIX"  version:u8 = 1
//! d:u32  N:u32  M:u32  construction:u32   (0 = sum, 1 = pinv)
//! M * d  f32 representatives
//! M * (count:u32, count * id:u32)
//! ```
//!
//! Representatives are stored as `f32`, so a freshly built index loses
//! precision on the first write; any index that was itself loaded from
//! `MVIX` round-trips bit-exactly.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{Construction, MemoryIndex, MemoryUnit};

pub const MAGIC: &[u8; 4] = b"MVIX";
pub const VERSION: u8 = 1;

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Domain(format!("{what} = {v} does not fit in u32")))
}

pub fn write_index<W: Write>(index: &MemoryIndex, mut w: W) -> Result<()> {
    let mut buf = Vec::with_capacity(21 + index.num_units() * index.dim * 4 + index.total * 4);
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    for v in [
        to_u32(index.dim, "d")?,
        to_u32(index.total, "N")?,
        to_u32(index.num_units(), "M")?,
        index.construction.tag(),
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for u in &index.units {
        for &x in &u.representative {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    for u in &index.units {
        buf.extend_from_slice(&to_u32(u.len(), "unit size")?.to_le_bytes());
        for &id in &u.member_ids {
            buf.extend_from_slice(&to_u32(id, "id")?.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            offset: self.pos as u64,
            msg: msg.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err(format!("truncated {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn read_index<R: Read>(mut r: R) -> Result<MemoryIndex> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: "bad magic".into(),
        });
    }
    let version = c.take(1, "version")?[0];
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            msg: format!("unsupported version {version}"),
        });
    }
    let d = c.u32("header")? as usize;
    let total = c.u32("header")? as usize;
    let m = c.u32("header")? as usize;
    let tag_at = c.pos;
    let tag = c.u32("header")?;
    let construction = Construction::from_tag(tag).ok_or(Error::Format {
        offset: tag_at as u64,
        msg: format!("unknown construction tag {tag}"),
    })?;
    if d == 0 {
        return Err(Error::Format {
            offset: 5,
            msg: "d must be positive".into(),
        });
    }
    let rep_bytes = m
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| c.err("representative block overflows"))?;
    if rep_bytes > c.remaining() {
        return Err(c.err("truncated representatives"));
    }
    let mut reps = Vec::with_capacity(m);
    for _ in 0..m {
        let b = c.take(4 * d, "representatives")?;
        reps.push(
            b.chunks_exact(4)
                .map(|w| f32::from_le_bytes([w[0], w[1], w[2], w[3]]) as f64)
                .collect::<Vec<f64>>(),
        );
    }
    let mut units = Vec::with_capacity(m);
    for rep in reps {
        let at = c.pos;
        let count = c.u32("unit size")? as usize;
        if count.saturating_mul(4) > c.remaining() {
            return Err(c.err("truncated membership list"));
        }
        let ids = (0..count)
            .map(|_| c.u32("id").map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let unit = MemoryUnit::new(ids, rep).map_err(|e| Error::Format {
            offset: at as u64,
            msg: e.to_string(),
        })?;
        units.push(unit);
    }
    if c.remaining() != 0 {
        return Err(c.err("trailing bytes"));
    }
    let end = c.pos as u64;
    MemoryIndex::new(units, construction, d, total).map_err(|e| Error::Format {
        offset: end,
        msg: e.to_string(),
    })
}
