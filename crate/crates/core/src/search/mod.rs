//! Graph search over a [`TsdgGraph`](crate::TsdgGraph).
//!
//! Two procedures share the graph:
//!
//! * [`greedy`] runs many cheap lane-parallel greedy searches per query and
//!   merges them. It suits small query batches, where each query can use a
//!   lot of parallel hardware.
//! * [`bestfirst`] is a classic best-first search with a fixed-size result
//!   pool, a segmented expansion queue and a segmented visited table. It
//!   suits large batches, one query per worker.
//!
//! Both visit only edges whose occlusion factor is below a runtime cutoff,
//! so one stored graph serves several effective degrees.

pub mod bestfirst;
pub mod greedy;
pub mod segmented;

use rand::Rng;
use rayon::prelude::*;

use crate::diversify::{TsdgEdge, TsdgGraph};
use crate::error::{Error, Result};
use crate::metric::Space;
use crate::neighbor::Neighbor;
use crate::vectors::VectorSet;

/// Width of one group of parallel lanes, and of every fixed array the
/// searches keep per query.
pub const LANES: usize = 32;

/// Random start candidates drawn per search.
pub const START_SEEDS: usize = 32;

/// Neighbors examined when one node was expanded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    pub node: u32,
    pub examined: Vec<u32>,
}

/// Counters for one query.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchStats {
    pub hops: usize,
    pub dist_evals: usize,
    /// Greedy: the last hop left the result list unchanged. Best-first: the
    /// probe threshold or an empty queue ended the search, not the hop limit.
    pub converged: bool,
    /// Best-first only: elements dropped by a full queue segment.
    pub queue_evictions: usize,
    /// Expansion log, recorded only when enabled with [`SearchStats::traced`].
    pub trace: Option<Vec<Expansion>>,
}

impl SearchStats {
    pub fn traced() -> Self {
        Self {
            trace: Some(Vec::new()),
            ..Default::default()
        }
    }

    fn record(&mut self, node: u32, examined: &[TsdgEdge]) {
        if let Some(trace) = &mut self.trace {
            trace.push(Expansion {
                node,
                examined: examined.iter().map(|e| e.target).collect(),
            });
        }
    }

    pub(crate) fn absorb(&mut self, other: SearchStats) {
        self.hops += other.hops;
        self.dist_evals += other.dist_evals;
        self.queue_evictions += other.queue_evictions;
        self.converged &= other.converged;
        if let (Some(mine), Some(theirs)) = (&mut self.trace, other.trace) {
            mine.extend(theirs);
        }
    }
}

/// Result list and counters for one query.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub neighbors: Vec<Neighbor>,
    pub stats: SearchStats,
}

impl QueryResult {
    pub fn ids(&self) -> Vec<u32> {
        self.neighbors.iter().map(|n| n.id).collect()
    }
}

/// The candidate closest to `query`, ties to the smaller id.
pub fn closest_of(space: &Space, query: &[f32], candidates: &[u32]) -> Option<Neighbor> {
    candidates
        .iter()
        .map(|&id| Neighbor::new(id, space.dist_to(query, id)))
        .min()
}

/// Draws [`START_SEEDS`] node ids uniformly (with replacement) and returns
/// the one closest to `query`.
pub fn select_start(space: &Space, query: &[f32], rng: &mut impl Rng, stats: &mut SearchStats) -> Neighbor {
    let n = space.len() as u32;
    let mut seeds = [0u32; START_SEEDS];
    for s in &mut seeds {
        *s = rng.random_range(0..n);
    }
    stats.dist_evals += START_SEEDS;
    closest_of(space, query, &seeds).expect("START_SEEDS is non-zero")
}

pub(crate) fn check_inputs(graph: &TsdgGraph, space: &Space) -> Result<()> {
    if graph.len() != space.len() {
        return Err(Error::GraphSizeMismatch {
            graph: graph.len(),
            vectors: space.len(),
        });
    }
    if graph.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if graph.metric() != space.metric() {
        return Err(Error::InvalidParameter(format!(
            "graph was built for metric {} but the vectors use {}",
            graph.metric(),
            space.metric()
        )));
    }
    Ok(())
}

/// Runs `per_query` over a prepared query set in parallel, passing each
/// query's global index `first_index + i`.
pub(crate) fn run_batch<F>(
    space: &Space,
    queries: &VectorSet,
    first_index: u64,
    per_query: F,
) -> Result<Vec<QueryResult>>
where
    F: Fn(&[f32], u64) -> QueryResult + Sync,
{
    let prepared = space.prepare_queries(queries)?;
    Ok((0..prepared.len())
        .into_par_iter()
        .map(|i| per_query(prepared.row(i), first_index + i as u64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;
    use crate::seeding;

    #[test]
    fn single_node_start() {
        let space = Space::new(VectorSet::from_rows(&[[4.0, 2.0]]).unwrap(), Metric::L2).unwrap();
        let mut rng = seeding::stream(0, 0, 0);
        let mut stats = SearchStats::default();
        let start = select_start(&space, &[0.0, 0.0], &mut rng, &mut stats);
        assert_eq!(start.id, 0);
        assert_eq!(stats.dist_evals, START_SEEDS);
    }

    #[test]
    fn start_is_deterministic_and_prefers_exact_matches() {
        let rows: Vec<[f32; 1]> = (0..100).map(|i| [i as f32]).collect();
        let space = Space::new(VectorSet::from_rows(&rows).unwrap(), Metric::L2).unwrap();
        let pick = |seed| {
            select_start(
                &space,
                &[37.2],
                &mut seeding::stream(seed, 1, 2),
                &mut SearchStats::default(),
            )
        };
        assert_eq!(pick(5), pick(5));
        assert_eq!(closest_of(&space, &[37.0], &[3, 90, 37, 12]).unwrap().id, 37);
        // Equidistant candidates resolve to the smaller id.
        assert_eq!(closest_of(&space, &[5.5], &[6, 5]).unwrap().id, 5);
    }
}
