//! On-disk formats.
//!
//! * `CREPSW01` weight container: little-endian; `u32` entry count; per entry
//!   a `u16` name length, the UTF-8 name, a `u8` rank, `rank × u32` dims and
//!   then `product(dims)` row-major `f32` values.
//! * `CFLD0001` coordinate field: little-endian; `u32 H`, `u32 W`, then
//!   `H·W` pairs of `f32` `(row, col)` in row-major order.
//! * Generator config as a JSON object keyed by [`GeneratorConfig`] field names.
//! * Traces as `iteration,mse` CSV.
//!
//! Values computed in `f64` are rounded to `f32` when saved.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::coords::CoordField;
use crate::error::{ContainerError, Error, Result};
use crate::generator::GeneratorConfig;

pub const CONTAINER_MAGIC: &[u8; 8] = b"CREPSW01";
pub const FIELD_MAGIC: &[u8; 8] = b"CFLD0001";

/// One named tensor of a weight container.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Entry {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Self {
        Self {
            name: name.into(),
            dims,
            data,
        }
    }

    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }
}

fn validate_entries(entries: &[Entry]) -> Result<(), ContainerError> {
    let mut seen = HashSet::new();
    for e in entries {
        if !seen.insert(e.name.as_str()) {
            return Err(ContainerError::DuplicateName(e.name.clone()));
        }
        if e.element_count() != e.data.len() {
            return Err(ContainerError::LengthMismatch {
                name: e.name.clone(),
                declared: e.element_count(),
                actual: e.data.len(),
            });
        }
    }
    Ok(())
}

pub fn encode_container(entries: &[Entry]) -> Result<Vec<u8>> {
    validate_entries(entries)?;
    let mut out = Vec::new();
    out.extend_from_slice(CONTAINER_MAGIC);
    let count = u32::try_from(entries.len())
        .map_err(|_| Error::InvalidArgument("too many container entries".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    for e in entries {
        let name = e.name.as_bytes();
        let len = u16::try_from(name.len())
            .map_err(|_| Error::InvalidArgument(format!("entry name too long: {}", e.name)))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name);
        let rank = u8::try_from(e.dims.len())
            .map_err(|_| Error::InvalidArgument(format!("rank too large for {}", e.name)))?;
        out.push(rank);
        for &d in &e.dims {
            let d = u32::try_from(d)
                .map_err(|_| Error::InvalidArgument(format!("dimension too large in {}", e.name)))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &e.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, context: &str) -> Result<&'a [u8], ContainerError> {
        if self.buf.len() - self.pos < n {
            return Err(ContainerError::Truncated {
                context: context.to_string(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, context: &str) -> Result<u32, ContainerError> {
        let b = self.take(4, context)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
}

pub fn decode_container(bytes: &[u8]) -> Result<Vec<Entry>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(8, "magic")?;
    if magic != CONTAINER_MAGIC {
        return Err(ContainerError::BadMagic {
            expected: String::from_utf8_lossy(CONTAINER_MAGIC).into_owned(),
            found: String::from_utf8_lossy(magic).into_owned(),
        }
        .into());
    }
    let count = r.u32("entry count")? as usize;
    let mut entries = Vec::with_capacity(count.min(4096));
    let mut seen = HashSet::new();
    for _ in 0..count {
        let len = u16::from_le_bytes(r.take(2, "name length")?.try_into().expect("2 bytes"));
        let name = std::str::from_utf8(r.take(len as usize, "entry name")?)
            .map_err(|_| ContainerError::InvalidName)?
            .to_string();
        if !seen.insert(name.clone()) {
            return Err(ContainerError::DuplicateName(name).into());
        }
        let rank = r.take(1, "rank")?[0] as usize;
        let dims = (0..rank)
            .map(|_| r.u32("dims").map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| ContainerError::Truncated {
                context: format!("payload of {name}"),
            })?;
        let payload = r.take(n, &format!("payload of {name}"))?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        entries.push(Entry { name, dims, data });
    }
    if r.pos != bytes.len() {
        return Err(ContainerError::TrailingBytes(bytes.len() - r.pos).into());
    }
    Ok(entries)
}

pub fn save_container(entries: &[Entry], path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_container(entries)?;
    write_bytes(path.as_ref(), &bytes)
}

pub fn load_container(path: impl AsRef<Path>) -> Result<Vec<Entry>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_container(&bytes)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<GeneratorConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GeneratorConfig::from_json(&text)
}

pub fn save_config(config: &GeneratorConfig, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), config.to_json().as_bytes())
}

pub fn encode_coord_field(field: &CoordField) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * field.rows.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(field.height as u32).to_le_bytes());
    out.extend_from_slice(&(field.width as u32).to_le_bytes());
    for (r, c) in field.rows.iter().zip(&field.cols) {
        out.extend_from_slice(&(*r as f32).to_le_bytes());
        out.extend_from_slice(&(*c as f32).to_le_bytes());
    }
    out
}

pub fn decode_coord_field(bytes: &[u8]) -> Result<CoordField> {
    if bytes.len() < 16 {
        return Err(Error::Format("coordinate field header truncated".into()));
    }
    if &bytes[..8] != FIELD_MAGIC {
        return Err(Error::Format(format!(
            "coordinate field magic {:?}",
            String::from_utf8_lossy(&bytes[..8])
        )));
    }
    let h = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let w = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let expected = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("coordinate field dimensions overflow".into()))?;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "coordinate field payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let mut rows = Vec::with_capacity(h * w);
    let mut cols = Vec::with_capacity(h * w);
    for pair in payload.chunks_exact(8) {
        rows.push(f32::from_le_bytes(pair[..4].try_into().expect("4 bytes")) as f64);
        cols.push(f32::from_le_bytes(pair[4..].try_into().expect("4 bytes")) as f64);
    }
    CoordField::new(h, w, rows, cols)
}

pub fn read_coord_field(path: impl AsRef<Path>) -> Result<CoordField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_coord_field(&bytes)
}

pub fn write_coord_field(field: &CoordField, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_coord_field(field))
}

pub fn write_trace_csv(trace: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut text = String::from("iteration,mse\n");
    for (i, v) in trace.iter().enumerate() {
        text.push_str(&format!("{i},{v:e}\n"));
    }
    write_bytes(path.as_ref(), text.as_bytes())
}

pub fn save_json<S: serde::Serialize>(value: &S, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_bytes(path.as_ref(), text.as_bytes())
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
