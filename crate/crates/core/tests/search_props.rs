//! Properties of both search procedures on small random instances.

mod common;

use std::collections::{HashMap, HashSet};

use tsdg::search::bestfirst::{bestfirst_query, BestFirstParams, Structures};
use tsdg::search::greedy::{greedy_query, greedy_search_once, GreedyParams};
use tsdg::search::{QueryResult, SearchStats};
use tsdg::{seeding, DiversifyParams, TsdgGraph};

use common::{exact_top_k, graph, ids, space, uniform};

fn hits(result: &[u32], truth: &[u32]) -> usize {
    result.iter().filter(|id| truth.contains(id)).count()
}

#[test]
fn greedy_recall_never_drops_as_t0_grows() {
    let sp = space(2000, 12, 1);
    let g = graph(&sp, 24, &DiversifyParams::default());
    let queries = uniform(60, 12, 2);
    let k = 10;
    for (qi, q) in queries.rows().enumerate() {
        let truth = exact_top_k(&sp, q, k);
        let mut last = 0;
        let mut last_pool: Vec<u32> = Vec::new();
        for t0 in [1, 2, 4, 8, 16] {
            let params = GreedyParams {
                t0,
                hops: 4,
                ..Default::default()
            };
            // k = 32 * t0 keeps the whole merged pool.
            let pool = greedy_query(&g, &sp, q, 32 * t0, &params, qi as u64, false).ids();
            let pool_set: HashSet<u32> = pool.iter().copied().collect();
            assert!(
                last_pool.iter().all(|id| pool_set.contains(id)),
                "pool shrank at t0={t0}"
            );
            last_pool = pool;
            let now = hits(&greedy_query(&g, &sp, q, k, &params, qi as u64, false).ids(), &truth);
            assert!(now >= last, "query {qi}: {now} hits at t0={t0}, {last} before");
            last = now;
        }
    }
}

/// Node to set of examined ids; a node expanded twice must examine the same set.
fn examined_by_node(result: &QueryResult) -> HashMap<u32, HashSet<u32>> {
    let mut map: HashMap<u32, HashSet<u32>> = HashMap::new();
    for e in result.stats.trace.as_ref().unwrap() {
        let set: HashSet<u32> = e.examined.iter().copied().collect();
        if let Some(prev) = map.insert(e.node, set.clone()) {
            assert_eq!(prev, set);
        }
    }
    map
}

fn check_nested(g: &TsdgGraph, runs: &[(u32, QueryResult)]) {
    let maps: Vec<_> = runs.iter().map(|(c, r)| (*c, examined_by_node(r))).collect();
    for (cut, map) in &maps {
        for (&node, set) in map {
            let oracle: HashSet<u32> = g
                .neighbors(node)
                .iter()
                .filter(|e| u32::from(e.lambda) < *cut)
                .map(|e| e.target)
                .collect();
            assert_eq!(set, &oracle, "node {node} at cut {cut}");
        }
    }
    for pair in maps.windows(2) {
        let (small, large) = (&pair[0].1, &pair[1].1);
        for (node, set) in small {
            if let Some(bigger) = large.get(node) {
                assert!(set.is_subset(bigger), "node {node} not nested");
            }
        }
    }
}

#[test]
fn examined_sets_are_nested_across_lambda_cuts() {
    let sp = space(1500, 10, 3);
    let g = graph(&sp, 30, &DiversifyParams::default());
    let queries = uniform(40, 10, 4);
    for (qi, q) in queries.rows().enumerate() {
        let greedy: Vec<_> = [2, 5, 10]
            .into_iter()
            .map(|c| {
                let p = GreedyParams {
                    t0: 2,
                    lambda_cut: c,
                    ..Default::default()
                };
                (c, greedy_query(&g, &sp, q, 10, &p, qi as u64, true))
            })
            .collect();
        check_nested(&g, &greedy);
        let best: Vec<_> = [2, 5, 10]
            .into_iter()
            .map(|c| {
                let p = BestFirstParams {
                    lambda_cut: c,
                    delta: 0.1,
                    ..Default::default()
                };
                (c, bestfirst_query(&g, &sp, q, &p, qi as u64, true))
            })
            .collect();
        check_nested(&g, &best);
    }
}

#[test]
fn larger_delta_expands_a_superset_without_overflow() {
    let sp = space(600, 6, 5);
    let g = graph(&sp, 20, &DiversifyParams::default());
    let queries = uniform(50, 6, 6);
    let mut compared = 0;
    for (qi, q) in queries.rows().enumerate() {
        let mut prev: Option<HashSet<u32>> = None;
        for delta in [0.0, 0.01, 0.05, 0.2, 1.0] {
            // 32 segments of 32 slots hold the whole 600-point set.
            let p = BestFirstParams {
                delta,
                m_segments: 32,
                hops: 10_000,
                ..Default::default()
            };
            let r = bestfirst_query(&g, &sp, q, &p, qi as u64, true);
            assert_eq!(r.stats.queue_evictions, 0);
            let expanded: HashSet<u32> = r.stats.trace.unwrap().iter().map(|e| e.node).collect();
            if let Some(prev) = &prev {
                assert!(prev.is_subset(&expanded), "query {qi}, delta {delta}");
                compared += 1;
            }
            prev = Some(expanded);
        }
    }
    assert_eq!(compared, 200);
}

#[test]
fn greedy_converges_within_eight_hops() {
    let sp = space(1000, 16, 7);
    let g = graph(&sp, 50, &DiversifyParams::default());
    let queries = uniform(200, 16, 8);
    let params = GreedyParams {
        t0: 1,
        ..Default::default()
    };
    let fast = queries
        .rows()
        .enumerate()
        .filter(|&(qi, q)| {
            let mut rng = seeding::stream(0, qi as u64, 0);
            let mut stats = SearchStats::default();
            greedy_search_once(&g, &sp, q, &params, &mut rng, &mut stats);
            stats.converged && stats.hops <= 8
        })
        .count();
    assert!(fast >= 180, "{fast} of 200 queries converged within 8 hops");
}

#[test]
fn results_are_sound_sorted_and_unique() {
    let sp = space(800, 8, 9);
    let g = graph(&sp, 20, &DiversifyParams::default());
    let queries = uniform(30, 8, 10);
    for (qi, q) in queries.rows().enumerate() {
        let p = BestFirstParams {
            k: 15,
            structures: Structures::Segmented,
            ..Default::default()
        };
        let r = bestfirst_query(&g, &sp, q, &p, qi as u64, true);
        let mut compared: HashSet<u32> = r
            .stats
            .trace
            .as_ref()
            .unwrap()
            .iter()
            .flat_map(|e| e.examined.clone())
            .collect();
        // The start node is compared before any expansion.
        compared.extend(r.stats.trace.as_ref().unwrap().first().map(|e| e.node));
        let got = ids(&r.neighbors);
        assert!(got.iter().all(|id| compared.contains(id)));
        assert!(r.neighbors.windows(2).all(|w| w[0] < w[1]));
        for n in &r.neighbors {
            assert_eq!(n.dist, sp.dist_to(q, n.id));
        }
    }
}
