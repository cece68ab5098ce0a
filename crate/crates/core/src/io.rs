//! Readers and writers for the `.fvecs`, `.ivecs` and `.bvecs` formats used by
//! the SIFT/GIST benchmark sets.
//!
//! Each record is a little-endian `i32` length `d` followed by `d` components:
//! `f32` for fvecs, `i32` for ivecs, `u8` for bvecs. All records in one file
//! share the same `d`. bvecs components are widened to `f32` on load.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};

use crate::error::{Error, Result};
use crate::vectors::VectorSet;

/// Walks the records of a `*vecs` buffer, checking the per-record length
/// header. `width` is the byte size of one component.
fn for_each_record<'a>(
    bytes: &'a [u8],
    width: usize,
    mut f: impl FnMut(usize, u64, &'a [u8]) -> Result<()>,
) -> Result<usize> {
    if bytes.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut offset = 0usize;
    let mut record = 0usize;
    let mut dim = None;
    while offset < bytes.len() {
        if bytes.len() - offset < 4 {
            return Err(Error::Truncated {
                offset: offset as u64,
                what: "record header",
            });
        }
        let raw = LittleEndian::read_i32(&bytes[offset..]);
        if raw <= 0 {
            return Err(Error::Malformed {
                offset: offset as u64,
                reason: format!("record {record} has non-positive length {raw}"),
            });
        }
        let d = raw as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::InconsistentDimension {
                    record,
                    offset: offset as u64,
                    expected,
                    found: d,
                })
            }
            Some(_) => {}
        }
        let body = offset + 4;
        let end = body + d * width;
        if end > bytes.len() {
            return Err(Error::Truncated {
                offset: bytes.len() as u64,
                what: "record body",
            });
        }
        f(record, body as u64, &bytes[body..end])?;
        offset = end;
        record += 1;
    }
    Ok(dim.unwrap_or(0))
}

fn read_all(mut r: impl Read) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    Ok(bytes)
}

pub fn read_fvecs(r: impl Read) -> Result<VectorSet> {
    let bytes = read_all(r)?;
    let mut data = Vec::with_capacity(bytes.len() / 4);
    let dim = for_each_record(&bytes, 4, |record, offset, body| {
        for (c, chunk) in body.chunks_exact(4).enumerate() {
            let x = LittleEndian::read_f32(chunk);
            if !x.is_finite() {
                return Err(Error::NonFiniteRecord {
                    record,
                    offset: offset + 4 * c as u64,
                });
            }
            data.push(x);
        }
        Ok(())
    })?;
    VectorSet::new(dim, data)
}

pub fn read_bvecs(r: impl Read) -> Result<VectorSet> {
    let bytes = read_all(r)?;
    let mut data = Vec::with_capacity(bytes.len());
    let dim = for_each_record(&bytes, 1, |_, _, body| {
        data.extend(body.iter().map(|&b| b as f32));
        Ok(())
    })?;
    VectorSet::new(dim, data)
}

/// Reads integer lists, typically ground-truth neighbor ids.
pub fn read_ivecs(r: impl Read) -> Result<Vec<Vec<i32>>> {
    let bytes = read_all(r)?;
    let mut lists = Vec::new();
    for_each_record(&bytes, 4, |_, _, body| {
        lists.push(body.chunks_exact(4).map(LittleEndian::read_i32).collect());
        Ok(())
    })?;
    Ok(lists)
}

pub fn write_fvecs(mut w: impl Write, set: &VectorSet) -> Result<()> {
    let d = i32::try_from(set.dim()).map_err(|_| Error::InvalidParameter("dimension exceeds i32".into()))?;
    for row in set.rows() {
        w.write_i32::<LittleEndian>(d)?;
        for &x in row {
            w.write_f32::<LittleEndian>(x)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ivecs<L: AsRef<[i32]>>(mut w: impl Write, lists: &[L]) -> Result<()> {
    for list in lists {
        let list = list.as_ref();
        w.write_i32::<LittleEndian>(list.len() as i32)?;
        for &x in list {
            w.write_i32::<LittleEndian>(x)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_fvecs(path: impl AsRef<Path>) -> Result<VectorSet> {
    read_fvecs(File::open(path)?)
}

pub fn load_bvecs(path: impl AsRef<Path>) -> Result<VectorSet> {
    read_bvecs(File::open(path)?)
}

pub fn load_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    read_ivecs(File::open(path)?)
}

/// Loads `.fvecs` or `.bvecs` depending on the file extension.
pub fn load_vectors(path: impl AsRef<Path>) -> Result<VectorSet> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("bvecs") => load_bvecs(path),
        _ => load_fvecs(path),
    }
}

pub fn save_fvecs(path: impl AsRef<Path>, set: &VectorSet) -> Result<()> {
    write_fvecs(BufWriter::new(File::create(path)?), set)
}

pub fn save_ivecs<L: AsRef<[i32]>>(path: impl AsRef<Path>, lists: &[L]) -> Result<()> {
    write_ivecs(BufWriter::new(File::create(path)?), lists)
}
