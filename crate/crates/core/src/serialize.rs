//! `HMW1` weight files.
//!
//! ```text
//! offset  size              field
//! 0       4                 magic, ASCII "HMW1" (format version 1)
//! 4       4                 n = L + 1, number of layers, u32 little-endian
//! 8       4 n               layer sizes s_0 .. s_L, u32 little-endian
//! ...     8 s_k (s_{k-1}+1) R_k for k = 1..L, row-major, f64 little-endian
//! ...     8 s_{k-1} (s_k+1) G_k for k = 1..L, row-major, f64 little-endian
//! ...     8 s_L             top bias, f64 little-endian
//! ```
//!
//! The bias is the last column of every `R_k` / `G_k` row. Freeze flags are
//! not stored; a loaded machine has none set. The file ends after the top
//! bias; trailing bytes are a format error.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::machine::{Architecture, HelmholtzMachine, Matrix};
use crate::numerics::Real;

pub const MAGIC: &[u8; 4] = b"HMW1";

pub fn to_bytes<T: Real>(machine: &HelmholtzMachine<T>) -> Vec<u8> {
    let sizes = machine.arch().sizes();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for &s in sizes {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    let blocks = machine.recognition().iter().chain(machine.generative());
    for w in blocks {
        for v in w.to_rows() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    for v in machine.top_bias() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::format("<HMW1>", format!("truncated at byte {}", self.at)));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s<T: Real>(&mut self, n: usize) -> Result<Vec<T>> {
        Ok(self
            .take(8 * n)?
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
            .collect())
    }
}

pub fn from_bytes<T: Real>(bytes: &[u8]) -> Result<HelmholtzMachine<T>> {
    let mut cur = Cursor { bytes, at: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::format("<HMW1>", "bad magic, expected \"HMW1\""));
    }
    let n = cur.u32()? as usize;
    if n > bytes.len() / 4 {
        return Err(Error::format("<HMW1>", format!("implausible layer count {n}")));
    }
    let sizes = (0..n).map(|_| cur.u32().map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
    let arch = Architecture::new(sizes.clone())?;
    let depth = arch.depth();
    let mut recognition = Vec::with_capacity(depth);
    for k in 1..=depth {
        let (r, c) = (sizes[k], sizes[k - 1] + 1);
        recognition.push(Matrix::from_rows(r, c, &cur.f64s::<T>(r * c)?)?);
    }
    let mut generative = Vec::with_capacity(depth);
    for k in 1..=depth {
        let (r, c) = (sizes[k - 1], sizes[k] + 1);
        generative.push(Matrix::from_rows(r, c, &cur.f64s::<T>(r * c)?)?);
    }
    let top_bias = cur.f64s(sizes[depth])?;
    if cur.at != bytes.len() {
        return Err(Error::format(
            "<HMW1>",
            format!("{} trailing bytes", bytes.len() - cur.at),
        ));
    }
    HelmholtzMachine::from_parts(&arch, recognition, generative, top_bias)
}

pub fn write_machine<T: Real>(machine: &HelmholtzMachine<T>, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(&to_bytes(machine))
}

pub fn read_machine<T: Real>(mut r: impl Read) -> Result<HelmholtzMachine<T>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<reader>", e))?;
    from_bytes(&bytes)
}

pub fn save<T: Real>(machine: &HelmholtzMachine<T>, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(machine)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Real>(path: &Path) -> Result<HelmholtzMachine<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path, message),
        other => other,
    })
}
