//! Small-batch search: many independent lane-parallel greedy searches per
//! query, merged into one ranking.
//!
//! One search keeps two 32-slot arrays. `r_temp` is rebuilt every hop: the
//! current node's neighbors stream through in groups of 32, and the neighbor
//! at position `j` of a group only competes with slot `j`. There is no
//! comparison across lanes, so `r_temp` need not hold the best 32 neighbors
//! seen. `r_ij` is the search's sorted result list; after each hop the 16
//! smallest entries of `r_temp` are merged into its upper half. The next node
//! to expand is the closest entry of `r_temp`, and the search stops once a
//! hop leaves `r_ij` unchanged or the hop limit is reached.
//!
//! This is a deterministic emulation of the lane-parallel procedure, so the
//! output depends only on the graph, the query, the parameters and the seed.

use rand::Rng;

use super::{check_inputs, run_batch, select_start, QueryResult, SearchStats, LANES};
use crate::diversify::TsdgGraph;
use crate::error::{Error, Result};
use crate::metric::Space;
use crate::neighbor::Neighbor;
use crate::seeding;
use crate::vectors::VectorSet;

const HALF: usize = LANES / 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyParams {
    /// Independent searches per query.
    pub t0: usize,
    /// Hop limit per search.
    pub hops: usize,
    /// Visit edges with occlusion factor strictly below this.
    pub lambda_cut: u32,
    pub seed: u64,
}

impl Default for GreedyParams {
    fn default() -> Self {
        Self {
            t0: 16,
            hops: 16,
            lambda_cut: 10,
            seed: 0,
        }
    }
}

impl GreedyParams {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.t0 == 0 || self.hops == 0 || self.lambda_cut == 0 {
            return Err(Error::InvalidParameter(
                "t0, hops and lambda_cut must all be at least 1".into(),
            ));
        }
        if k == 0 || k > LANES * self.t0 {
            return Err(Error::InvalidParameter(format!(
                "k = {k} must lie in 1..={} for t0 = {}",
                LANES * self.t0,
                self.t0
            )));
        }
        Ok(())
    }
}

/// Fixed array of 32 `(id, dist)` slots; empty slots hold [`Neighbor::NONE`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankList {
    slots: [Neighbor; LANES],
}

impl Default for RankList {
    fn default() -> Self {
        Self::new()
    }
}

impl RankList {
    pub fn new() -> Self {
        Self {
            slots: [Neighbor::NONE; LANES],
        }
    }

    /// Slots `0..entries.len()` take `entries`, the rest stay empty.
    pub fn from_slice(entries: &[Neighbor]) -> Self {
        assert!(entries.len() <= LANES, "a rank list holds at most {LANES} entries");
        let mut list = Self::new();
        list.slots[..entries.len()].copy_from_slice(entries);
        list
    }

    pub fn slots(&self) -> &[Neighbor; LANES] {
        &self.slots
    }

    /// Non-empty slots, in slot order.
    pub fn entries(&self) -> impl Iterator<Item = Neighbor> + '_ {
        self.slots.iter().copied().filter(|n| !n.is_none())
    }

    /// Smallest slot by `(dist, id)`; `NONE` when all slots are empty.
    pub fn min(&self) -> Neighbor {
        self.slots.iter().copied().min().unwrap_or(Neighbor::NONE)
    }

    pub fn is_sorted(&self) -> bool {
        self.slots.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Per-lane update: `batch[j]` replaces slot `j` iff it is strictly closer.
/// Slots beyond `batch.len()` are untouched.
pub fn lane_update(r_temp: &mut RankList, batch: &[Neighbor]) {
    assert!(batch.len() <= LANES, "a lane batch holds at most {LANES} entries");
    for (slot, &cand) in r_temp.slots.iter_mut().zip(batch) {
        if cand.dist < slot.dist {
            *slot = cand;
        }
    }
}

/// Merges the 16 smallest entries of `r_temp` into the upper half of the
/// sorted `r_ij`, then re-sorts `r_ij`. Returns whether `r_ij` changed.
///
/// Entries of `r_temp` whose id is already in `r_ij` are skipped, so `r_ij`
/// never holds an id twice. The merge pairs `r_ij[31 - i]` with the `i`-th
/// smallest candidate and keeps the smaller of each pair, which is the
/// half-cleaner step of a bitonic merge: `r_ij` ends up holding the 32
/// smallest entries of its old content and the 16 candidates.
pub fn merge_halves(r_ij: &mut RankList, r_temp: &RankList) -> bool {
    let mut cand = r_temp.slots;
    for c in cand.iter_mut() {
        if !c.is_none() && r_ij.slots.iter().any(|r| r.id == c.id) {
            *c = Neighbor::NONE;
        }
    }
    cand.select_nth_unstable(HALF - 1);
    cand[..HALF].sort_unstable();

    let before = r_ij.slots;
    for (i, &c) in cand[..HALF].iter().enumerate() {
        let slot = &mut r_ij.slots[LANES - 1 - i];
        if c < *slot {
            *slot = c;
        }
    }
    r_ij.slots.sort_unstable();
    r_ij.slots != before
}

/// One greedy search. Returns the sorted 32-slot result list.
pub fn greedy_search_once(
    graph: &TsdgGraph,
    space: &Space,
    query: &[f32],
    params: &GreedyParams,
    rng: &mut impl Rng,
    stats: &mut SearchStats,
) -> RankList {
    let mut r_ij = RankList::new();
    let mut u = select_start(space, query, rng, stats).id;
    let mut improved = true;
    let mut hops = 0;
    let mut batch = [Neighbor::NONE; LANES];
    while improved && hops < params.hops {
        let mut r_temp = RankList::new();
        let list = graph.neighbors_below(u, params.lambda_cut);
        stats.record(u, list);
        for group in list.chunks(LANES) {
            for (slot, e) in batch.iter_mut().zip(group) {
                *slot = Neighbor::new(e.target, space.dist_to(query, e.target));
            }
            lane_update(&mut r_temp, &batch[..group.len()]);
        }
        stats.dist_evals += list.len();
        hops += 1;
        improved = merge_halves(&mut r_ij, &r_temp);
        let next = r_temp.min();
        if next.is_none() {
            break;
        }
        u = next.id;
    }
    stats.hops += hops;
    stats.converged = !improved;
    r_ij
}

/// Runs `t0` independent searches for one query and merges them: union,
/// deduplicate by id, sort by `(dist, id)`, keep the first `k`.
///
/// Search `s` draws from the stream `(params.seed, query_index, s)`, so the
/// first `a` searches are the same for every `t0 >= a`.
pub fn greedy_query(
    graph: &TsdgGraph,
    space: &Space,
    query: &[f32],
    k: usize,
    params: &GreedyParams,
    query_index: u64,
    traced: bool,
) -> QueryResult {
    let mut stats = if traced {
        SearchStats::traced()
    } else {
        SearchStats::default()
    };
    stats.converged = true;
    let mut pool: Vec<Neighbor> = Vec::with_capacity(LANES * params.t0);
    for s in 0..params.t0 {
        let mut rng = seeding::stream(params.seed, query_index, s as u64);
        let mut one = if traced {
            SearchStats::traced()
        } else {
            SearchStats::default()
        };
        let list = greedy_search_once(graph, space, query, params, &mut rng, &mut one);
        pool.extend(list.entries());
        stats.absorb(one);
    }
    QueryResult {
        neighbors: merge_rankings(pool, k),
        stats,
    }
}

/// Union of rankings: one entry per id (the closest), sorted, first `k`.
pub fn merge_rankings(mut pool: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    pool.sort_unstable_by(|a, b| a.id.cmp(&b.id).then(a.dist.total_cmp(&b.dist)));
    pool.dedup_by_key(|n| n.id);
    pool.sort_unstable();
    pool.truncate(k);
    pool
}

/// Searches every query in `queries` (raw vectors; prepared for the metric
/// here) and returns the top-`k` neighbors of each.
pub fn small_batch_search(
    graph: &TsdgGraph,
    space: &Space,
    queries: &VectorSet,
    k: usize,
    params: &GreedyParams,
) -> Result<Vec<Vec<Neighbor>>> {
    Ok(small_batch_search_from(graph, space, queries, k, params, 0)?
        .into_iter()
        .map(|r| r.neighbors)
        .collect())
}

/// As [`small_batch_search`], with counters, numbering queries from
/// `first_index` so results do not depend on how a query set is batched.
pub fn small_batch_search_from(
    graph: &TsdgGraph,
    space: &Space,
    queries: &VectorSet,
    k: usize,
    params: &GreedyParams,
    first_index: u64,
) -> Result<Vec<QueryResult>> {
    params.validate(k)?;
    check_inputs(graph, space)?;
    run_batch(space, queries, first_index, |q, i| {
        greedy_query(graph, space, q, k, params, i, false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diversify::{GraphHeader, TsdgEdge};
    use crate::metric::Metric;
    use proptest::prelude::*;

    fn nb(id: u32, dist: f32) -> Neighbor {
        Neighbor::new(id, dist)
    }

    #[test]
    fn lane_update_examples() {
        let mut r = RankList::new();
        lane_update(&mut r, &[nb(5, 0.5), nb(9, 0.9)]);
        assert_eq!(r.slots()[0], nb(5, 0.5));
        assert_eq!(r.slots()[1], nb(9, 0.9));
        assert!(r.slots()[2..].iter().all(Neighbor::is_none));

        // Lane 0 keeps 0.5 even though 0.6 would beat lane 1's 0.9.
        lane_update(&mut r, &[nb(7, 0.6)]);
        assert_eq!(r.slots()[0], nb(5, 0.5));
        assert_eq!(r.slots()[1], nb(9, 0.9));

        lane_update(&mut r, &[nb(1, 0.7), nb(2, 0.1)]);
        assert_eq!(r.slots()[1], nb(2, 0.1));
    }

    #[test]
    fn merge_into_empty_list() {
        let mut r_ij = RankList::new();
        let entries: Vec<Neighbor> = (0..32).map(|i| nb(i, (31 - i) as f32)).collect();
        let r_temp = RankList::from_slice(&entries);
        assert!(merge_halves(&mut r_ij, &r_temp));
        let mut expect: Vec<Neighbor> = entries.clone();
        expect.sort();
        assert_eq!(&r_ij.slots()[..16], &expect[..16]);
        assert!(r_ij.slots()[16..].iter().all(Neighbor::is_none));
        assert!(r_ij.is_sorted());
    }

    #[test]
    fn merging_empty_candidates_changes_nothing() {
        let entries: Vec<Neighbor> = (0..32).map(|i| nb(i, i as f32)).collect();
        let mut r_ij = RankList::from_slice(&entries);
        let before = r_ij;
        assert!(!merge_halves(&mut r_ij, &RankList::new()));
        assert_eq!(r_ij, before);
    }

    #[test]
    fn merging_known_ids_changes_nothing() {
        let entries: Vec<Neighbor> = (0..20).map(|i| nb(i, i as f32)).collect();
        let mut r_ij = RankList::from_slice(&entries);
        let before = r_ij;
        let r_temp = RankList::from_slice(&entries[..16]);
        assert!(!merge_halves(&mut r_ij, &r_temp));
        assert_eq!(r_ij, before);
    }

    /// Independent model of the merge: sort the deduplicated union of
    /// `r_ij` and the 16 best new candidates, keep 32.
    fn merge_oracle(r_ij: &RankList, r_temp: &RankList) -> Vec<Neighbor> {
        let known: Vec<u32> = r_ij.entries().map(|n| n.id).collect();
        let mut fresh: Vec<Neighbor> = r_temp.entries().filter(|n| !known.contains(&n.id)).collect();
        fresh.sort();
        fresh.truncate(16);
        let mut all: Vec<Neighbor> = r_ij.entries().chain(fresh).collect();
        all.sort();
        all.resize(32, Neighbor::NONE);
        all
    }

    fn rank_list(max_len: usize) -> impl Strategy<Value = Vec<(u32, u8)>> {
        prop::collection::vec((0u32..64, 0u8..40), 0..=max_len)
    }

    proptest! {
        #[test]
        fn merge_matches_oracle(a in rank_list(32), b in rank_list(32)) {
            let dedup = |v: Vec<(u32, u8)>| {
                let mut seen = Vec::new();
                v.into_iter()
                    .filter(|(id, _)| if seen.contains(id) { false } else { seen.push(*id); true })
                    // Same id always carries the same distance.
                    .map(|(id, _)| nb(id, (id % 23) as f32))
                    .collect::<Vec<_>>()
            };
            let mut a = dedup(a);
            a.sort();
            let b = dedup(b);
            let mut r_ij = RankList::from_slice(&a);
            let r_temp = RankList::from_slice(&b);
            let expect = merge_oracle(&r_ij, &r_temp);
            let changed = merge_halves(&mut r_ij, &r_temp);
            prop_assert_eq!(&r_ij.slots()[..], &expect[..]);
            prop_assert!(r_ij.is_sorted());
            let mut with_entries = a.clone();
            with_entries.resize(32, Neighbor::NONE);
            prop_assert_eq!(changed, with_entries != expect);
        }
    }

    fn complete_graph(space: &Space) -> TsdgGraph {
        let n = space.len() as u32;
        let lists = (0..n)
            .map(|u| {
                (0..n)
                    .filter(|&v| v != u)
                    .map(|v| TsdgEdge {
                        target: v,
                        lambda: 0,
                        dist: space.dist(u, v),
                    })
                    .collect()
            })
            .collect();
        let header = GraphHeader {
            metric: space.metric(),
            k: n - 1,
            alpha: 1.0,
            lambda0: 0,
        };
        TsdgGraph::from_lists(header, lists)
    }

    fn grid_space(n: usize) -> Space {
        let rows: Vec<[f32; 2]> = (0..n).map(|i| [(i % 10) as f32, (i / 10) as f32 * 1.3]).collect();
        Space::new(VectorSet::from_rows(&rows).unwrap(), Metric::L2).unwrap()
    }

    #[test]
    fn two_hops_on_a_complete_graph_find_the_nearest_neighbor() {
        let space = grid_space(60);
        let graph = complete_graph(&space);
        let params = GreedyParams {
            hops: 2,
            ..Default::default()
        };
        for (qi, q) in [[3.2f32, 4.1], [8.9, 0.2], [0.0, 7.0]].iter().enumerate() {
            let mut stats = SearchStats::default();
            let mut rng = seeding::stream(1, qi as u64, 0);
            let r = greedy_search_once(&graph, &space, q, &params, &mut rng, &mut stats);
            let truth = (0..60u32).map(|v| Neighbor::new(v, space.dist_to(q, v))).min().unwrap();
            assert_eq!(r.slots()[0], truth);
        }
    }

    #[test]
    fn hop_limit_of_one_expands_once() {
        let space = grid_space(60);
        let graph = complete_graph(&space);
        let params = GreedyParams {
            hops: 1,
            ..Default::default()
        };
        let mut stats = SearchStats::traced();
        greedy_search_once(
            &graph,
            &space,
            &[1.0, 1.0],
            &params,
            &mut seeding::stream(0, 0, 0),
            &mut stats,
        );
        assert_eq!(stats.hops, 1);
        assert_eq!(stats.trace.unwrap().len(), 1);
        assert_eq!(stats.dist_evals, 32 + 59);
    }

    #[test]
    fn single_search_equals_truncated_pool() {
        let space = grid_space(60);
        let graph = complete_graph(&space);
        let params = GreedyParams {
            t0: 1,
            ..Default::default()
        };
        let q = [4.4f32, 2.0];
        let merged = greedy_query(&graph, &space, &q, 5, &params, 3, false).neighbors;
        let mut rng = seeding::stream(params.seed, 3, 0);
        let once = greedy_search_once(&graph, &space, &q, &params, &mut rng, &mut SearchStats::default());
        assert_eq!(merged, once.entries().take(5).collect::<Vec<_>>());
    }

    #[test]
    fn merge_rankings_deduplicates() {
        let pool = vec![nb(4, 1.0), nb(2, 0.5), nb(4, 1.0), nb(7, 0.1)];
        assert_eq!(merge_rankings(pool, 10), vec![nb(7, 0.1), nb(2, 0.5), nb(4, 1.0)]);
    }

    #[test]
    fn rejects_k_beyond_pool_size() {
        let space = grid_space(20);
        let graph = complete_graph(&space);
        let params = GreedyParams {
            t0: 2,
            ..Default::default()
        };
        let queries = VectorSet::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(small_batch_search(&graph, &space, &queries, 65, &params).is_err());
        assert!(small_batch_search(&graph, &space, &queries, 64, &params).is_ok());
    }
}
