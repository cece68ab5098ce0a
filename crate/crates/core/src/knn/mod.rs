//! k-nearest-neighbor graphs: exact and NN-descent construction, plus the
//! `KNNG` binary format.

mod brute;
mod descent;

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};

use crate::error::{Error, Result};
use crate::metric::Space;
use crate::neighbor::Neighbor;

pub use brute::brute_force_knn;
pub use descent::{nn_descent, NnDescentParams};

const MAGIC: &[u8; 4] = b"KNNG";
const VERSION: u32 = 1;

/// Per-node lists of `k` neighbors sorted by `(dist, id)`.
///
/// No list contains its owner or a repeated id.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnGraph {
    k: usize,
    entries: Vec<Neighbor>,
}

impl KnnGraph {
    /// Wraps flat row-major lists of length `k`. Each list is sorted here.
    pub fn from_flat(k: usize, mut entries: Vec<Neighbor>) -> Result<Self> {
        if k == 0 || !entries.len().is_multiple_of(k) {
            return Err(Error::InvalidParameter(format!(
                "{} entries do not form lists of length {k}",
                entries.len()
            )));
        }
        for (node, list) in entries.chunks_exact_mut(k).enumerate() {
            list.sort_unstable();
            for (i, nb) in list.iter().enumerate() {
                if nb.id as usize == node || list[..i].iter().any(|p| p.id == nb.id) {
                    return Err(Error::InvalidParameter(format!(
                        "list of node {node} has a self-loop or duplicate id {}",
                        nb.id
                    )));
                }
            }
        }
        Ok(Self { k, entries })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len() / self.k
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[Neighbor] {
        &self.entries[node * self.k..(node + 1) * self.k]
    }

    pub fn lists(&self) -> impl ExactSizeIterator<Item = &[Neighbor]> + '_ {
        self.entries.chunks_exact(self.k)
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u64::<LittleEndian>(self.len() as u64)?;
        w.write_u32::<LittleEndian>(self.k as u32)?;
        for nb in &self.entries {
            w.write_u32::<LittleEndian>(nb.id)?;
            w.write_f32::<LittleEndian>(nb.dist)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic("KNNG"));
        }
        if bytes.len() < 20 {
            return Err(Error::Truncated {
                offset: bytes.len() as u64,
                what: "KNNG header",
            });
        }
        let version = LittleEndian::read_u32(&bytes[4..]);
        if version != VERSION {
            return Err(Error::UnsupportedVersion {
                format: "KNNG",
                version,
            });
        }
        let n = LittleEndian::read_u64(&bytes[8..]) as usize;
        let k = LittleEndian::read_u32(&bytes[16..]) as usize;
        let body = &bytes[20..];
        let need = n
            .checked_mul(k)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::Malformed {
                offset: 8,
                reason: "node count overflows".into(),
            })?;
        if body.len() < need {
            let whole = body.len() / 8 * 8;
            return Err(Error::Truncated {
                offset: 20 + whole as u64,
                what: "KNNG neighbor entry",
            });
        }
        if body.len() > need {
            return Err(Error::Malformed {
                offset: 20 + need as u64,
                reason: "trailing bytes".into(),
            });
        }
        let entries = body
            .chunks_exact(8)
            .map(|c| Neighbor::new(LittleEndian::read_u32(c), LittleEndian::read_f32(&c[4..])))
            .collect();
        Self::from_flat(k, entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(File::open(path)?)
    }
}

/// Fraction of `exact`'s edges present in `approx`, over the nodes listed
/// (all nodes when `nodes` is `None`). Both graphs must have the same `k`.
pub fn graph_recall(approx: &KnnGraph, exact: &KnnGraph, nodes: Option<&[usize]>) -> f64 {
    let all: Vec<usize>;
    let nodes = match nodes {
        Some(n) => n,
        None => {
            all = (0..exact.len()).collect();
            &all
        }
    };
    let mut hits = 0usize;
    let mut total = 0usize;
    for &u in nodes {
        let truth = exact.neighbors(u);
        total += truth.len();
        hits += approx
            .neighbors(u)
            .iter()
            .filter(|a| truth.iter().any(|t| t.id == a.id))
            .count();
    }
    if total == 0 {
        return 1.0;
    }
    hits as f64 / total as f64
}

/// Effective list length for `n` points: `min(k, n - 1)`.
pub(crate) fn clamp_k(space: &Space, k: usize) -> Result<usize> {
    let n = space.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k >= n {
        log::warn!("k = {k} is not below n = {n}; lists are clamped to {}", n - 1);
        return Ok(n - 1);
    }
    Ok(k)
}
