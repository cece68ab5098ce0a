use crate::error::{Error, Result};

/// `n` dense `f32` vectors of dimension `dim`, stored row-contiguous.
///
/// Every component is finite; constructors reject NaN and infinities.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet {
    dim: usize,
    data: Vec<f32>,
}

impl VectorSet {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::RaggedData { len: data.len(), dim });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                component: pos % dim,
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a set from rows, which must all have the same length.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().ok_or(Error::EmptyDataset)?.as_ref().len();
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// Empty set of the given dimension.
    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Copy of rows `range`, e.g. to split a generated set into base and queries.
    pub fn slice(&self, range: std::ops::Range<usize>) -> VectorSet {
        VectorSet {
            dim: self.dim,
            data: self.data[range.start * self.dim..range.end * self.dim].to_vec(),
        }
    }

    /// Returns a copy with every row scaled to unit L2 norm.
    ///
    /// Fails on the first row whose norm is zero.
    pub fn normalized(&self) -> Result<VectorSet> {
        let mut data = self.data.clone();
        for (row, chunk) in data.chunks_exact_mut(self.dim).enumerate() {
            normalize_in_place(chunk).ok_or(Error::ZeroNorm { row })?;
        }
        Ok(VectorSet { dim: self.dim, data })
    }
}

/// Scales `v` to unit norm; `None` if the norm is zero.
pub(crate) fn normalize_in_place(v: &mut [f32]) -> Option<()> {
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(())
}
