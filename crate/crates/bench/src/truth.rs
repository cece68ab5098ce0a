//! Exact ground truth and Recall@k.

use rayon::prelude::*;
use tsdg::{Neighbor, Space, VectorSet};

use crate::error::{Error, Result};

/// Exact neighbor ids per query, nearest first, ties by smaller id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    lists: Vec<Vec<u32>>,
}

impl GroundTruth {
    pub fn from_lists(lists: Vec<Vec<u32>>) -> Self {
        Self { lists }
    }

    /// From `.ivecs` records; negative ids are rejected.
    pub fn from_ivecs(records: Vec<Vec<i32>>) -> Result<Self> {
        let lists = records
            .into_iter()
            .enumerate()
            .map(|(q, rec)| {
                rec.into_iter()
                    .map(|id| {
                        u32::try_from(id)
                            .map_err(|_| Error::Recall(format!("negative id {id} in ground truth row {q}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self { lists })
    }

    pub fn to_ivecs(&self) -> Vec<Vec<i32>> {
        self.lists
            .iter()
            .map(|l| l.iter().map(|&id| id as i32).collect())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Shortest list length.
    pub fn depth(&self) -> usize {
        self.lists.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn list(&self, q: usize) -> &[u32] {
        &self.lists[q]
    }

    pub fn lists(&self) -> &[Vec<u32>] {
        &self.lists
    }
}

/// Exhaustive top-`k_gt` for every query.
pub fn ground_truth(space: &Space, queries: &VectorSet, k_gt: usize) -> Result<GroundTruth> {
    if k_gt == 0 || k_gt > space.len() {
        return Err(Error::Config(format!(
            "ground-truth depth {k_gt} must lie in 1..={}",
            space.len()
        )));
    }
    let prepared = space.prepare_queries(queries)?;
    let lists = (0..prepared.len())
        .into_par_iter()
        .map(|qi| {
            let q = prepared.row(qi);
            let mut all: Vec<Neighbor> = (0..space.len() as u32)
                .map(|v| Neighbor::new(v, space.dist_to(q, v)))
                .collect();
            if k_gt < all.len() {
                all.select_nth_unstable(k_gt - 1);
                all.truncate(k_gt);
            }
            all.sort_unstable();
            all.into_iter().map(|n| n.id).collect()
        })
        .collect();
    Ok(GroundTruth { lists })
}

/// Recall@k: true positives among the first `k` results, over `n * k`.
///
/// Result lists shorter than `k` count their missing entries as misses.
pub fn recall_at_k<L: AsRef<[u32]>>(results: &[L], truth: &GroundTruth, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Recall("k must be at least 1".into()));
    }
    if results.len() != truth.len() {
        return Err(Error::Recall(format!(
            "{} result lists for {} ground-truth queries",
            results.len(),
            truth.len()
        )));
    }
    if truth.depth() < k {
        return Err(Error::Recall(format!(
            "k = {k} exceeds ground-truth depth {}",
            truth.depth()
        )));
    }
    if results.is_empty() {
        return Ok(1.0);
    }
    let hits: usize = results
        .iter()
        .zip(&truth.lists)
        .map(|(res, gt)| {
            let res = res.as_ref();
            let top = &gt[..k];
            res[..k.min(res.len())].iter().filter(|id| top.contains(id)).count()
        })
        .sum();
    Ok(hits as f64 / (results.len() * k) as f64)
}
