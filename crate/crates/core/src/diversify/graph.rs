use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};

use super::DiversifyParams;
use crate::error::{Error, Result};
use crate::metric::Metric;

const MAGIC: &[u8; 4] = b"TSDG";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 1 + 4 + 4 + 2;
const EDGE_LEN: usize = 4 + 2 + 4;

/// One outgoing edge with its occlusion factor `lambda`: the number of other
/// candidate edges of the same node that occlude it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsdgEdge {
    pub target: u32,
    pub lambda: u16,
    pub dist: f32,
}

impl TsdgEdge {
    /// Sort key: `(lambda, dist, target)`.
    #[inline]
    pub(crate) fn key_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.lambda
            .cmp(&other.lambda)
            .then_with(|| self.dist.total_cmp(&other.dist))
            .then_with(|| self.target.cmp(&other.target))
    }
}

/// Header values recorded with a graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphHeader {
    pub metric: Metric,
    /// Length of the k-NN lists the graph was diversified from.
    pub k: u32,
    pub alpha: f32,
    pub lambda0: u16,
}

/// Diversified graph in compressed-row form.
///
/// Each node's edges are sorted by `(lambda, dist, target)`, so the edges with
/// `lambda < cut` are always a prefix of the list; see
/// [`TsdgGraph::neighbors_below`].
#[derive(Clone, Debug, PartialEq)]
pub struct TsdgGraph {
    header: GraphHeader,
    offsets: Vec<usize>,
    edges: Vec<TsdgEdge>,
}

impl TsdgGraph {
    /// Assembles a graph from per-node lists, sorting each list.
    pub fn from_lists(header: GraphHeader, lists: Vec<Vec<TsdgEdge>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut edges = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for mut list in lists {
            list.sort_unstable_by(TsdgEdge::key_cmp);
            edges.extend(list);
            offsets.push(edges.len());
        }
        Self { header, offsets, edges }
    }

    pub(crate) fn with_params(metric: Metric, k: usize, params: &DiversifyParams, lists: Vec<Vec<TsdgEdge>>) -> Self {
        Self::from_lists(
            GraphHeader {
                metric,
                k: k as u32,
                alpha: params.alpha,
                lambda0: params.lambda0,
            },
            lists,
        )
    }

    #[inline]
    pub fn header(&self) -> &GraphHeader {
        &self.header
    }

    #[inline]
    pub fn metric(&self) -> Metric {
        self.header.metric
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn neighbors(&self, node: u32) -> &[TsdgEdge] {
        let u = node as usize;
        &self.edges[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Edges of `node` whose occlusion factor is below `cut`.
    #[inline]
    pub fn neighbors_below(&self, node: u32, cut: u32) -> &[TsdgEdge] {
        let list = self.neighbors(node);
        let end = list.partition_point(|e| (e.lambda as u32) < cut);
        &list[..end]
    }

    /// Mean out-degree when only edges with `lambda < cut` are visited.
    pub fn mean_degree_below(&self, cut: u32) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let total: usize = (0..self.len() as u32).map(|u| self.neighbors_below(u, cut).len()).sum();
        total as f64 / self.len() as f64
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u64::<LittleEndian>(self.len() as u64)?;
        w.write_u8(self.header.metric.to_byte())?;
        w.write_u32::<LittleEndian>(self.header.k)?;
        w.write_f32::<LittleEndian>(self.header.alpha)?;
        w.write_u16::<LittleEndian>(self.header.lambda0)?;
        for u in 0..self.len() as u32 {
            let list = self.neighbors(u);
            w.write_u32::<LittleEndian>(list.len() as u32)?;
            for e in list {
                w.write_u32::<LittleEndian>(e.target)?;
                w.write_u16::<LittleEndian>(e.lambda)?;
                w.write_f32::<LittleEndian>(e.dist)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic("TSDG"));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                offset: bytes.len() as u64,
                what: "TSDG header",
            });
        }
        let version = LittleEndian::read_u32(&bytes[4..]);
        if version != VERSION {
            return Err(Error::UnsupportedVersion {
                format: "TSDG",
                version,
            });
        }
        let n = LittleEndian::read_u64(&bytes[8..]);
        let metric = Metric::from_byte(bytes[16]).ok_or_else(|| Error::Malformed {
            offset: 16,
            reason: format!("unknown metric code {}", bytes[16]),
        })?;
        let header = GraphHeader {
            metric,
            k: LittleEndian::read_u32(&bytes[17..]),
            alpha: LittleEndian::read_f32(&bytes[21..]),
            lambda0: LittleEndian::read_u16(&bytes[25..]),
        };
        if n > (bytes.len() as u64) / 4 {
            return Err(Error::Malformed {
                offset: 8,
                reason: format!("node count {n} exceeds file size"),
            });
        }
        let n = n as usize;

        let mut pos = HEADER_LEN;
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut edges = Vec::new();
        for node in 0..n {
            if bytes.len() - pos < 4 {
                return Err(Error::Truncated {
                    offset: pos as u64,
                    what: "node degree",
                });
            }
            let degree = LittleEndian::read_u32(&bytes[pos..]) as usize;
            pos += 4;
            for _ in 0..degree {
                if bytes.len() - pos < EDGE_LEN {
                    return Err(Error::Truncated {
                        offset: pos as u64,
                        what: "edge",
                    });
                }
                let e = TsdgEdge {
                    target: LittleEndian::read_u32(&bytes[pos..]),
                    lambda: LittleEndian::read_u16(&bytes[pos + 4..]),
                    dist: LittleEndian::read_f32(&bytes[pos + 6..]),
                };
                if e.target as usize >= n || e.target as usize == node {
                    return Err(Error::Malformed {
                        offset: pos as u64,
                        reason: format!("node {node} has invalid edge target {}", e.target),
                    });
                }
                if let Some(prev) = edges[offsets[node]..].last() {
                    if TsdgEdge::key_cmp(prev, &e).is_ge() {
                        return Err(Error::Malformed {
                            offset: pos as u64,
                            reason: format!("edges of node {node} are not sorted"),
                        });
                    }
                }
                edges.push(e);
                pos += EDGE_LEN;
            }
            offsets.push(edges.len());
        }
        if pos != bytes.len() {
            return Err(Error::Malformed {
                offset: pos as u64,
                reason: "trailing bytes".into(),
            });
        }
        Ok(Self { header, offsets, edges })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TsdgGraph {
        let header = GraphHeader {
            metric: Metric::Cosine,
            k: 3,
            alpha: 1.2,
            lambda0: 9,
        };
        let e = |target, lambda, dist| TsdgEdge { target, lambda, dist };
        TsdgGraph::from_lists(
            header,
            vec![
                vec![e(2, 1, 0.5), e(1, 0, 0.7), e(3, 1, 0.25)],
                vec![e(0, 0, 0.7)],
                vec![],
                vec![e(0, 3, 0.25), e(2, 0, 1.0)],
            ],
        )
    }

    #[test]
    fn lists_sort_by_lambda_then_distance() {
        let g = sample();
        let targets: Vec<u32> = g.neighbors(0).iter().map(|e| e.target).collect();
        assert_eq!(targets, vec![1, 3, 2]);
        assert_eq!(g.neighbors_below(0, 1).len(), 1);
        assert_eq!(g.neighbors_below(0, 2).len(), 3);
        assert_eq!(g.neighbors_below(3, 1)[0].target, 2);
        assert!(g.neighbors_below(2, 10).is_empty());
        assert_eq!(g.mean_degree_below(u32::MAX), 6.0 / 4.0);
    }

    #[test]
    fn round_trip_is_exact() {
        let g = sample();
        let mut bytes = Vec::new();
        g.write(&mut bytes).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 4 * 4 + 6 * EDGE_LEN);
        assert_eq!(TsdgGraph::read(&bytes[..]).unwrap(), g);
    }

    #[test]
    fn rejects_bad_input() {
        let g = sample();
        let mut bytes = Vec::new();
        g.write(&mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"KNNG");
        assert_eq!(TsdgGraph::read(&bad[..]).unwrap_err().to_string(), "not a TSDG file");

        let err = TsdgGraph::read(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, Error::Truncated { offset, .. } if offset == (bytes.len() - EDGE_LEN) as u64));

        assert!(matches!(
            TsdgGraph::read(&bytes[..10]),
            Err(Error::Truncated { offset: 10, .. })
        ));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(
            TsdgGraph::read(&bad[..]),
            Err(Error::UnsupportedVersion { version: 2, .. })
        ));

        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(TsdgGraph::read(&bad[..]), Err(Error::Malformed { .. })));
    }
}
