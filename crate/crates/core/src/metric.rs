//! Distance metrics and the [`Space`] that pairs vectors with one.
//!
//! Every metric is exposed as a dissimilarity: smaller means closer.
//!
//! * `L2` is the *squared* Euclidean distance. Rankings are the same as for
//!   the true distance, and every stored edge distance, queue key and probe
//!   threshold in this crate is in squared units.
//! * `Cosine` is `1 - cos(a, b)`. A [`Space`] normalizes its vectors once, so
//!   the hot path is a single dot product.
//! * `InnerProduct` is `-(a . b)`.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::vectors::{normalize_in_place, VectorSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    L2,
    Cosine,
    InnerProduct,
}

impl Metric {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Metric::L2 => 0,
            Metric::Cosine => 1,
            Metric::InnerProduct => 2,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Metric::L2),
            1 => Some(Metric::Cosine),
            2 => Some(Metric::InnerProduct),
            _ => None,
        }
    }

    /// Distance between vectors already prepared for this metric (unit norm
    /// for `Cosine`). No dimension checks.
    #[inline]
    pub fn kernel(self, a: &[f32], b: &[f32]) -> f32 {
        match self {
            Metric::L2 => l2_squared(a, b),
            Metric::Cosine => 1.0 - dot(a, b),
            // 0 - x rather than -x keeps an exact zero positive.
            Metric::InnerProduct => 0.0 - dot(a, b),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L2 => "l2",
            Metric::Cosine => "cos",
            Metric::InnerProduct => "ip",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(Metric::L2),
            "cos" | "cosine" => Ok(Metric::Cosine),
            "ip" | "inner_product" | "innerproduct" => Ok(Metric::InnerProduct),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

const LANES: usize = 8;

/// Squared Euclidean distance. Eight partial sums, combined in a fixed order,
/// so the result is deterministic and symmetric in `a`, `b`.
#[inline]
pub fn l2_squared(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; LANES];
    let (ca, ra) = a.as_chunks::<LANES>();
    let (cb, rb) = b.as_chunks::<LANES>();
    for (x, y) in ca.iter().zip(cb) {
        for l in 0..LANES {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    reduce(acc) + tail
}

/// Dot product with the same accumulation layout as [`l2_squared`].
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; LANES];
    let (ca, ra) = a.as_chunks::<LANES>();
    let (cb, rb) = b.as_chunks::<LANES>();
    for (x, y) in ca.iter().zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    reduce(acc) + tail
}

#[inline]
fn reduce(acc: [f32; LANES]) -> f32 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

/// Checked distance between two raw vectors.
///
/// Unlike [`Metric::kernel`], cosine here divides by both norms, so inputs
/// need not be normalized. A zero-norm input under cosine is an error.
pub fn distance(a: &[f32], b: &[f32], metric: Metric) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::ZeroDimension);
    }
    match metric {
        Metric::L2 | Metric::InnerProduct => Ok(metric.kernel(a, b)),
        Metric::Cosine => {
            let na = dot(a, a).sqrt();
            let nb = dot(b, b).sqrt();
            if na == 0.0 {
                return Err(Error::ZeroNorm { row: 0 });
            }
            if nb == 0.0 {
                return Err(Error::ZeroNorm { row: 1 });
            }
            Ok(1.0 - dot(a, b) / (na * nb))
        }
    }
}

/// A vector set prepared for one metric.
///
/// Under `Cosine` the rows are normalized at construction, and zero rows are
/// rejected. All graph builders and searches operate on a `Space`.
#[derive(Clone, Debug, PartialEq)]
pub struct Space {
    vectors: VectorSet,
    metric: Metric,
}

impl Space {
    pub fn new(vectors: VectorSet, metric: Metric) -> Result<Self> {
        let vectors = match metric {
            Metric::Cosine => vectors.normalized()?,
            _ => vectors,
        };
        Ok(Self { vectors, metric })
    }

    #[inline]
    pub fn metric(&self) -> Metric {
        self.metric
    }

    #[inline]
    pub fn vectors(&self) -> &VectorSet {
        &self.vectors
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    /// Distance between stored points `i` and `j`.
    #[inline]
    pub fn dist(&self, i: u32, j: u32) -> f32 {
        self.metric
            .kernel(self.vectors.row(i as usize), self.vectors.row(j as usize))
    }

    /// Distance from a prepared query to stored point `i`.
    #[inline]
    pub fn dist_to(&self, query: &[f32], i: u32) -> f32 {
        self.metric.kernel(query, self.vectors.row(i as usize))
    }

    /// Checks a query's dimension and finiteness and normalizes it under
    /// cosine.
    pub fn prepare_query<'q>(&self, query: &'q [f32]) -> Result<Cow<'q, [f32]>> {
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: query.len(),
            });
        }
        if let Some(component) = query.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: 0, component });
        }
        match self.metric {
            Metric::Cosine => {
                let mut owned = query.to_vec();
                normalize_in_place(&mut owned).ok_or(Error::ZeroNorm { row: 0 })?;
                Ok(Cow::Owned(owned))
            }
            _ => Ok(Cow::Borrowed(query)),
        }
    }

    /// Prepares a whole query set; see [`Space::prepare_query`].
    pub fn prepare_queries(&self, queries: &VectorSet) -> Result<VectorSet> {
        if queries.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: queries.dim(),
            });
        }
        match self.metric {
            Metric::Cosine => queries.normalized(),
            _ => Ok(queries.clone()),
        }
    }
}
