//! Binary field dump.
//!
//! Little-endian layout: magic `CRNL`, version `u32`, dimension `u32`, points per axis `u32`,
//! box length `f64`, representation `u8` (0 physical, 1 frequency), extension count `u32`,
//! that many `f64` extension values (phase dumps store the direction there), then the
//! samples as interleaved `re, im` pairs of `f64` in row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Rep, ScalarField};
use crate::C64;

pub const MAGIC: &[u8; 4] = b"CRNL";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct DumpHeader {
    pub version: u32,
    pub grid: GridSpec,
    pub rep: Rep,
    pub extension: Vec<f64>,
}

pub fn encode(field: &ScalarField, extension: &[f64]) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(33 + 8 * extension.len() + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.size() as u32).to_le_bytes());
    out.extend_from_slice(&g.length().to_le_bytes());
    out.push(match field.rep() {
        Rep::Physical => 0,
        Rep::Frequency => 1,
    });
    out.extend_from_slice(&(extension.len() as u32).to_le_bytes());
    for e in extension {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(DumpHeader, ScalarField)> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = c.u32()? as usize;
    let size = c.u32()? as usize;
    let length = c.f64()?;
    let grid = GridSpec::new(n, size, length).map_err(|e| Error::Format(e.to_string()))?;
    let rep = match c.take(1)?[0] {
        0 => Rep::Physical,
        1 => Rep::Frequency,
        r => return Err(Error::Format(format!("unknown representation flag {r}"))),
    };
    let ext_len = c.u32()? as usize;
    let extension = (0..ext_len).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = c.f64()?;
        let im = c.f64()?;
        values.push(C64::new(re, im));
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    let field = ScalarField::new(grid, values, rep)?;
    Ok((DumpHeader { version, grid, rep, extension }, field))
}

/// Write atomically: the file appears complete or not at all.
pub fn save(path: &Path, field: &ScalarField, extension: &[f64]) -> Result<()> {
    write_atomic(path, &encode(field, extension))
}

pub fn load(path: &Path) -> Result<(DumpHeader, ScalarField)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_extension() {
        let g = GridSpec::new(2, 8, 1.25).unwrap();
        let f = ScalarField::plane_wave(g, &[1, 2]).in_frequency();
        let bytes = encode(&f, &[0.6, 0.8]);
        assert_eq!(&bytes[..4], b"CRNL");
        let (h, back) = decode(&bytes).unwrap();
        assert_eq!(h.extension, vec![0.6, 0.8]);
        assert_eq!(h.rep, Rep::Frequency);
        assert_eq!(back.values(), f.values());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
    }
}
