//! Checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "TRFL" | version u32 | header_len u32 | header JSON (UTF-8)
//! then per tensor until EOF:
//!   name_len u32 | name UTF-8 | rank u32 | dims u64[rank] | payload f32[product(dims)]
//! ```

use crate::error::{NnError, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"TRFL";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorEntry {
    pub name: String,
    pub dims: Vec<u64>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Architecture preset / configuration echo.
    pub header: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let header = serde_json::to_vec(&ckpt.header)
        .map_err(|e| NnError::Checkpoint(format!("header serialization failed: {e}")))?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    for t in &ckpt.tensors {
        let count: u64 = t.dims.iter().product();
        if count != t.data.len() as u64 {
            return Err(NnError::Checkpoint(format!(
                "tensor '{}': dims {:?} do not match {} data elements",
                t.name,
                t.dims,
                t.data.len()
            )));
        }
        w.write_all(&(t.name.len() as u32).to_le_bytes())?;
        w.write_all(t.name.as_bytes())?;
        w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
        for d in &t.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        for v in &t.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact_or_err(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| NnError::Checkpoint(format!("truncated while reading {what}")))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_err(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or_err(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint(format!(
            "bad magic {:02x?}, expected \"TRFL\"",
            magic
        )));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let header_len = read_u32(&mut r, "header length")? as usize;
    let mut header_bytes = vec![0u8; header_len];
    read_exact_or_err(&mut r, &mut header_bytes, "header")?;
    let header = serde_json::from_slice(&header_bytes)
        .map_err(|e| NnError::Checkpoint(format!("invalid header JSON: {e}")))?;

    let mut tensors = Vec::new();
    loop {
        let mut len_buf = [0u8; 4];
        match r.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let name_len = u32::from_le_bytes(len_buf) as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact_or_err(&mut r, &mut name_bytes, "tensor name")?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| NnError::Checkpoint(format!("tensor name not UTF-8: {e}")))?;
        let rank = read_u32(&mut r, "tensor rank")? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            let mut b = [0u8; 8];
            read_exact_or_err(&mut r, &mut b, "tensor dims")?;
            dims.push(u64::from_le_bytes(b));
        }
        let count = dims
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| NnError::Checkpoint(format!("tensor '{name}': dims overflow")))?;
        let mut data = vec![0f32; count as usize];
        for v in &mut data {
            let mut b = [0u8; 4];
            read_exact_or_err(&mut r, &mut b, "tensor payload")?;
            *v = f32::from_le_bytes(b);
        }
        tensors.push(TensorEntry { name, dims, data });
    }
    Ok(Checkpoint { header, tensors })
}
