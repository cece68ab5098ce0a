//! Large-batch search: best-first traversal with a fixed-size result pool.
//!
//! Starting from the closest of 32 random nodes, the search repeatedly pops
//! the nearest candidate `u` from the expansion queue. It stops when `u` is
//! farther than the current `k`-th result by more than the probe threshold
//! `delta`, when the queue runs dry, or at the hop limit. Otherwise `u` is
//! marked visited and each neighbor that is neither visited nor queued is
//! compared with the query; it enters the result pool and the queue if it
//! beats the current `k`-th result or the pool is not yet full.
//!
//! Only expanded nodes enter the visited table, never merely compared ones.

use rand::Rng;

use super::segmented::{
    ExpansionQueue, SegmentedQueue, SegmentedVisited, UnboundedQueue, UnboundedVisited, VisitedTable,
};
use super::{check_inputs, run_batch, select_start, QueryResult, SearchStats};
use crate::diversify::TsdgGraph;
use crate::error::{Error, Result};
use crate::metric::Space;
use crate::neighbor::Neighbor;
use crate::seeding;
use crate::vectors::VectorSet;

/// Which queue and visited-table implementation to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Structures {
    /// `m` segments of 32 slots each, lossy on overflow.
    #[default]
    Segmented,
    /// Exact priority queue and hash set.
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestFirstParams {
    pub k: usize,
    pub hops: usize,
    /// Probe threshold, in the metric's units (squared for L2).
    pub delta: f32,
    pub m_segments: usize,
    /// Visit edges with occlusion factor strictly below this.
    pub lambda_cut: u32,
    pub seed: u64,
    pub structures: Structures,
}

impl Default for BestFirstParams {
    fn default() -> Self {
        Self {
            k: 10,
            hops: 1024,
            delta: 0.0,
            m_segments: 8,
            lambda_cut: 5,
            seed: 0,
            structures: Structures::Segmented,
        }
    }
}

impl BestFirstParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.hops == 0 || self.m_segments == 0 || self.lambda_cut == 0 {
            return Err(Error::InvalidParameter(
                "k, hops, m_segments and lambda_cut must all be at least 1".into(),
            ));
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta must be non-negative, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Result pool of at most `k` entries, kept sorted by `(dist, id)`.
#[derive(Clone, Debug)]
pub struct TopK {
    k: usize,
    items: Vec<Neighbor>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.k
    }

    pub fn furthest(&self) -> Option<Neighbor> {
        self.items.last().copied()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.items.iter().any(|n| n.id == id)
    }

    /// Inserts `item` unless its id is present, then drops the furthest
    /// entry if the pool exceeds `k`. Returns whether `item` was inserted.
    pub fn push(&mut self, item: Neighbor) -> bool {
        if self.contains(item.id) {
            return false;
        }
        let pos = self.items.partition_point(|n| *n < item);
        self.items.insert(pos, item);
        if self.items.len() > self.k {
            self.items.pop();
        }
        true
    }

    pub fn pop_furthest(&mut self) -> Option<Neighbor> {
        self.items.pop()
    }

    pub fn into_sorted_vec(self) -> Vec<Neighbor> {
        self.items
    }
}

/// Best-first search for one query, with the structures chosen by
/// `params.structures`.
pub fn bestfirst_search(
    graph: &TsdgGraph,
    space: &Space,
    query: &[f32],
    params: &BestFirstParams,
    rng: &mut impl Rng,
    stats: &mut SearchStats,
) -> Vec<Neighbor> {
    match params.structures {
        Structures::Segmented => bestfirst_with(
            graph,
            space,
            query,
            params,
            rng,
            stats,
            SegmentedQueue::new(params.m_segments),
            SegmentedVisited::new(params.m_segments),
        ),
        Structures::Unbounded => bestfirst_with(
            graph,
            space,
            query,
            params,
            rng,
            stats,
            UnboundedQueue::default(),
            UnboundedVisited::default(),
        ),
    }
}

/// Best-first search over caller-supplied queue and visited structures.
#[allow(clippy::too_many_arguments)]
pub fn bestfirst_with<C: ExpansionQueue, V: VisitedTable>(
    graph: &TsdgGraph,
    space: &Space,
    query: &[f32],
    params: &BestFirstParams,
    rng: &mut impl Rng,
    stats: &mut SearchStats,
    mut queue: C,
    mut visited: V,
) -> Vec<Neighbor> {
    let start = select_start(space, query, rng, stats);
    let mut pool = TopK::new(params.k);
    pool.push(start);
    queue.push(start);

    let mut hops = 0;
    stats.converged = true;
    while !queue.is_empty() {
        if hops >= params.hops {
            stats.converged = false;
            break;
        }
        hops += 1;
        let u = queue.pop_min().expect("queue is non-empty");
        let f = pool.furthest().expect("pool always holds the start node");
        if u.dist > f.dist + params.delta {
            break;
        }
        visited.add(u.id);
        let list = graph.neighbors_below(u.id, params.lambda_cut);
        stats.record(u.id, list);
        for e in list {
            if visited.contains(e.target) || queue.contains(e.target) {
                continue;
            }
            let f = pool.furthest().expect("pool always holds the start node");
            let cand = Neighbor::new(e.target, space.dist_to(query, e.target));
            stats.dist_evals += 1;
            if cand < f || !pool.is_full() {
                pool.push(cand);
                if queue.push(cand).is_some() {
                    stats.queue_evictions += 1;
                }
            }
        }
    }
    stats.hops += hops;
    pool.into_sorted_vec()
}

/// Best-first search for one query with its own random stream.
pub fn bestfirst_query(
    graph: &TsdgGraph,
    space: &Space,
    query: &[f32],
    params: &BestFirstParams,
    query_index: u64,
    traced: bool,
) -> QueryResult {
    let mut stats = if traced {
        SearchStats::traced()
    } else {
        SearchStats::default()
    };
    let mut rng = seeding::stream(params.seed, query_index, 0);
    let neighbors = bestfirst_search(graph, space, query, params, &mut rng, &mut stats);
    QueryResult { neighbors, stats }
}

/// Searches every query (raw vectors; prepared for the metric here) and
/// returns the top-`params.k` neighbors of each.
pub fn large_batch_search(
    graph: &TsdgGraph,
    space: &Space,
    queries: &VectorSet,
    params: &BestFirstParams,
) -> Result<Vec<Vec<Neighbor>>> {
    Ok(large_batch_search_from(graph, space, queries, params, 0)?
        .into_iter()
        .map(|r| r.neighbors)
        .collect())
}

/// As [`large_batch_search`], with counters, numbering queries from
/// `first_index`.
pub fn large_batch_search_from(
    graph: &TsdgGraph,
    space: &Space,
    queries: &VectorSet,
    params: &BestFirstParams,
    first_index: u64,
) -> Result<Vec<QueryResult>> {
    params.validate()?;
    check_inputs(graph, space)?;
    run_batch(space, queries, first_index, |q, i| {
        bestfirst_query(graph, space, q, params, i, false)
    })
}
