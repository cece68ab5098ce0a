//! Two-stage graph diversification.
//!
//! Edge `<x0, xj>` is *occluded* by edge `<x0, xi>` when `xi` is closer to
//! `x0` than `xj` is, and also closer to `xj` than `x0` is:
//!
//! ```text
//! m(x0, xi) < m(x0, xj)   and   m(xi, xj) < m(x0, xj)
//! ```
//!
//! Stage one walks each k-NN list in ascending distance order and keeps an
//! edge only if no already-kept edge occludes it under the relaxed test
//! (both left-hand sides scaled by `alpha >= 1`). Reverse edges are then added
//! so the graph becomes undirected. Stage two assigns every surviving edge an
//! occlusion factor `lambda` (how many other candidates occlude it), drops
//! edges with `lambda > lambda0`, and orders each list by `(lambda, dist)`.
//!
//! With [`Metric::L2`](crate::Metric::L2) all distances are squared, so
//! `alpha` scales squared distances.

mod graph;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::KnnGraph;
use crate::metric::Space;
use crate::neighbor::{CandidateEdge, Neighbor};

pub use graph::{GraphHeader, TsdgEdge, TsdgGraph};

/// Parameters of the two diversification stages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiversifyParams {
    /// Relaxation factor of the first stage; `1.0` is plain occlusion.
    pub alpha: f32,
    /// Edges with an occlusion factor above this are removed.
    pub lambda0: u16,
    /// Optional cap on the out-degree, applied after sorting.
    pub max_degree: Option<usize>,
}

impl Default for DiversifyParams {
    fn default() -> Self {
        Self {
            alpha: 1.2,
            lambda0: 9,
            max_degree: None,
        }
    }
}

impl DiversifyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be a finite value >= 1.0, got {}",
                self.alpha
            )));
        }
        if self.max_degree == Some(0) {
            return Err(Error::InvalidParameter("max_degree must be at least 1".into()));
        }
        Ok(())
    }
}

/// Whether edge `<x0, xj>` is occluded by `<x0, xi>`, given
/// `d0i = m(x0, xi)`, `d0j = m(x0, xj)` and `dij = m(xi, xj)`.
#[inline]
pub fn occludes(d0i: f32, d0j: f32, dij: f32) -> bool {
    d0i < d0j && dij < d0j
}

/// Relaxed occlusion: both left-hand sides are scaled by `alpha`.
#[inline]
pub fn occludes_relaxed(d0i: f32, d0j: f32, dij: f32, alpha: f32) -> bool {
    alpha * d0i < d0j && alpha * dij < d0j
}

/// First-stage relaxed diversification of one node's candidate list.
///
/// `candidates` must be sorted by ascending distance. A candidate is kept when
/// no previously kept edge occludes it under [`occludes_relaxed`]; the closest
/// candidate is therefore always kept. Output order is input order.
pub fn stage1_relaxed_gd(
    candidates: &[CandidateEdge],
    space: &Space,
    owner: u32,
    alpha: f32,
) -> Result<Vec<CandidateEdge>> {
    if let Some(i) = candidates
        .windows(2)
        .position(|w| w[0].dist.total_cmp(&w[1].dist).is_gt())
    {
        return Err(Error::UnsortedCandidates(i + 1));
    }
    let mut kept: Vec<CandidateEdge> = Vec::new();
    for &cand in candidates {
        debug_assert_ne!(cand.id, owner);
        let occluded = kept.iter().any(|k| {
            alpha * k.dist < cand.dist && occludes_relaxed(k.dist, cand.dist, space.dist(k.id, cand.id), alpha)
        });
        if !occluded {
            kept.push(cand);
        }
    }
    Ok(kept)
}

/// Appends reverse edges: for every `u -> v`, `v`'s list gains `u`.
///
/// Lists come back deduplicated by target and sorted by `(dist, id)`.
pub fn add_reverse_edges(lists: &[Vec<CandidateEdge>], space: &Space) -> Vec<Vec<CandidateEdge>> {
    let mut degree: Vec<usize> = lists.iter().map(Vec::len).collect();
    for list in lists {
        for e in list {
            degree[e.id as usize] += 1;
        }
    }
    let mut out: Vec<Vec<CandidateEdge>> = degree.iter().map(|&d| Vec::with_capacity(d)).collect();
    for (u, list) in lists.iter().enumerate() {
        out[u].extend_from_slice(list);
        for e in list {
            out[e.id as usize].push(Neighbor::new(u as u32, e.dist));
        }
    }
    out.par_iter_mut().enumerate().for_each(|(owner, list)| {
        list.sort_unstable_by(|a, b| a.id.cmp(&b.id).then(a.dist.total_cmp(&b.dist)));
        list.dedup_by(|dup, kept| {
            if dup.id != kept.id {
                return false;
            }
            let tol = 1e-5 * kept.dist.abs().max(dup.dist.abs()).max(f32::MIN_POSITIVE);
            if (dup.dist - kept.dist).abs() > tol {
                kept.dist = space.dist(owner as u32, kept.id);
            }
            true
        });
        list.sort_unstable();
    });
    out
}

/// Occlusion factor of every candidate against all other candidates.
pub fn occlusion_factors(candidates: &[CandidateEdge], space: &Space) -> Vec<u32> {
    candidates
        .iter()
        .map(|j| {
            candidates
                .iter()
                .filter(|i| i.id != j.id && i.dist < j.dist)
                .filter(|i| occludes(i.dist, j.dist, space.dist(i.id, j.id)))
                .count() as u32
        })
        .collect()
}

/// Second-stage soft diversification of one node's augmented list.
///
/// Each candidate's occlusion factor counts the *other* candidates that
/// occlude it. Edges with `lambda > lambda0` are dropped, the rest are
/// sorted by `(lambda, dist, target)` and optionally truncated to
/// `max_degree`. Factors saturate at `u16::MAX`.
pub fn stage2_soft_gd(
    candidates: &[CandidateEdge],
    space: &Space,
    owner: u32,
    lambda0: u16,
    max_degree: Option<usize>,
) -> Vec<TsdgEdge> {
    debug_assert!(candidates.iter().all(|c| c.id != owner));
    let factors = occlusion_factors(candidates, space);
    let mut edges: Vec<TsdgEdge> = candidates
        .iter()
        .zip(factors)
        .map(|(c, lambda)| TsdgEdge {
            target: c.id,
            lambda: lambda.min(u16::MAX as u32) as u16,
            dist: c.dist,
        })
        .filter(|e| e.lambda <= lambda0)
        .collect();
    edges.sort_unstable_by(TsdgEdge::key_cmp);
    if let Some(cap) = max_degree {
        edges.truncate(cap);
    }
    edges
}

/// Edge counts at each pipeline step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub knn_edges: usize,
    pub stage1_edges: usize,
    pub augmented_edges: usize,
    pub final_edges: usize,
}

impl BuildStats {
    /// Fraction of k-NN edges that survive the first stage.
    pub fn stage1_retention(&self) -> f64 {
        if self.knn_edges == 0 {
            return 0.0;
        }
        self.stage1_edges as f64 / self.knn_edges as f64
    }
}

/// Runs [`stage1_relaxed_gd`] over every k-NN list.
pub fn stage1(space: &Space, knn: &KnnGraph, alpha: f32) -> Result<Vec<Vec<CandidateEdge>>> {
    if knn.len() != space.len() {
        return Err(Error::GraphSizeMismatch {
            graph: knn.len(),
            vectors: space.len(),
        });
    }
    (0..knn.len())
        .into_par_iter()
        .map(|u| stage1_relaxed_gd(knn.neighbors(u), space, u as u32, alpha))
        .collect()
}

/// Builds the diversified graph: stage one on every k-NN list, reverse-edge
/// augmentation, then stage two on every augmented list.
pub fn build(space: &Space, knn: &KnnGraph, params: &DiversifyParams) -> Result<TsdgGraph> {
    build_with_stats(space, knn, params).map(|(g, _)| g)
}

pub fn build_with_stats(space: &Space, knn: &KnnGraph, params: &DiversifyParams) -> Result<(TsdgGraph, BuildStats)> {
    params.validate()?;
    let first = stage1(space, knn, params.alpha)?;
    let augmented = add_reverse_edges(&first, space);
    let lists: Vec<Vec<TsdgEdge>> = augmented
        .par_iter()
        .enumerate()
        .map(|(u, cands)| stage2_soft_gd(cands, space, u as u32, params.lambda0, params.max_degree))
        .collect();
    let stats = BuildStats {
        knn_edges: knn.len() * knn.k(),
        stage1_edges: first.iter().map(Vec::len).sum(),
        augmented_edges: augmented.iter().map(Vec::len).sum(),
        final_edges: lists.iter().map(Vec::len).sum(),
    };
    log::info!(
        "diversified {} nodes: {} k-NN edges, {} after stage 1 ({:.1}%), {} after augmentation, {} final",
        knn.len(),
        stats.knn_edges,
        stats.stage1_edges,
        100.0 * stats.stage1_retention(),
        stats.augmented_edges,
        stats.final_edges
    );
    let graph = TsdgGraph::with_params(space.metric(), knn.k(), params, lists);
    Ok((graph, stats))
}

/// Augmented stage-two candidate lists, exactly as [`build`] sees them.
pub fn augment(space: &Space, knn: &KnnGraph, alpha: f32) -> Result<Vec<Vec<CandidateEdge>>> {
    Ok(add_reverse_edges(&stage1(space, knn, alpha)?, space))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::brute_force_knn;
    use crate::metric::Metric;
    use crate::vectors::VectorSet;

    fn line(xs: &[f32]) -> Space {
        let rows: Vec<[f32; 1]> = xs.iter().map(|&x| [x]).collect();
        Space::new(VectorSet::from_rows(&rows).unwrap(), Metric::L2).unwrap()
    }

    /// Candidate list of node 0 in a 1-D space, with squared distances.
    fn cands(space: &Space, ids: &[u32]) -> Vec<CandidateEdge> {
        ids.iter().map(|&v| Neighbor::new(v, space.dist(0, v))).collect()
    }

    #[test]
    fn occlusion_examples() {
        assert!(occludes(1.0, 1.5, 0.5));
        assert!(!occludes(1.0, 1.0, 0.5));
        assert!(!occludes(3.0, 1.5, 0.5));
        assert!(occludes_relaxed(1.0, 1.5, 0.5, 1.0));
        assert!(!occludes_relaxed(1.0, 1.5, 0.5, 1.6));
        assert!(occludes_relaxed(0.1, 1.5, 0.2, 1.2));
    }

    #[test]
    fn stage1_examples() {
        // Squared distances d01 = 1.0, d02 = 1.5, d12 = 0.5.
        let set = VectorSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.5f32.sqrt()]]).unwrap();
        let space = Space::new(set, Metric::L2).unwrap();
        assert!((space.dist(1, 2) - 0.5).abs() < 1e-6);
        let c = cands(&space, &[1, 2]);
        let kept = stage1_relaxed_gd(&c, &space, 0, 1.0).unwrap();
        assert_eq!(kept.iter().map(|n| n.id).collect::<Vec<_>>(), vec![1]);
        let kept = stage1_relaxed_gd(&c, &space, 0, 1.6).unwrap();
        assert_eq!(kept.iter().map(|n| n.id).collect::<Vec<_>>(), vec![1, 2]);
        let single = stage1_relaxed_gd(&c[1..], &space, 0, 1.0).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn stage1_rejects_unsorted_input() {
        let space = line(&[0.0, 1.0, 1.5]);
        let c = vec![Neighbor::new(2, 2.25), Neighbor::new(1, 1.0)];
        assert!(stage1_relaxed_gd(&c[..1], &space, 0, 1.0).is_ok());
        assert!(matches!(
            stage1_relaxed_gd(&c, &space, 0, 1.0),
            Err(Error::UnsortedCandidates(1))
        ));
    }

    #[test]
    fn reverse_edges_on_a_chain() {
        let space = line(&[0.0, 1.0, 3.0]);
        let lists = vec![vec![Neighbor::new(1, 1.0)], vec![Neighbor::new(2, 4.0)], vec![]];
        let out = add_reverse_edges(&lists, &space);
        let ids = |u: usize| out[u].iter().map(|n| n.id).collect::<Vec<_>>();
        assert_eq!(ids(0), vec![1]);
        assert_eq!(ids(1), vec![0, 2]);
        assert_eq!(ids(2), vec![1]);
        assert_eq!(out[2][0].dist, 4.0);
    }

    #[test]
    fn reverse_edges_do_not_duplicate() {
        let space = line(&[0.0, 1.0]);
        let lists = vec![vec![Neighbor::new(1, 1.0)], vec![Neighbor::new(0, 1.0)]];
        let out = add_reverse_edges(&lists, &space);
        assert_eq!(out[0].len(), 1);
        assert_eq!(out[1].len(), 1);
    }

    #[test]
    fn reverse_edges_recompute_disagreeing_distances() {
        let space = line(&[0.0, 2.0]);
        let lists = vec![vec![Neighbor::new(1, 4.0)], vec![Neighbor::new(0, 3.0)]];
        let out = add_reverse_edges(&lists, &space);
        assert_eq!(out[0][0].dist, 4.0);
        assert_eq!(out[1][0].dist, 4.0);
    }

    #[test]
    fn stage2_counts_on_a_line() {
        // Owner 0, candidates at 1, 1.5, 3 (squared distances 1, 2.25, 9).
        // x1 occludes x1.5 and x3; x1.5 occludes x3; nothing occludes x1.
        let space = line(&[0.0, 1.0, 1.5, 3.0]);
        let c = cands(&space, &[1, 2, 3]);
        assert_eq!(occlusion_factors(&c, &space), vec![0, 1, 2]);
        let kept = stage2_soft_gd(&c, &space, 0, 1, None);
        let got: Vec<(u32, u16)> = kept.iter().map(|e| (e.target, e.lambda)).collect();
        assert_eq!(got, vec![(1, 0), (2, 1)]);
        assert_eq!(stage2_soft_gd(&c, &space, 0, 9, Some(2)).len(), 2);
        let single = stage2_soft_gd(&c[2..], &space, 0, 0, None);
        assert_eq!((single.len(), single[0].lambda), (1, 0));
    }

    #[test]
    fn stage2_equal_distances_do_not_occlude() {
        let set = VectorSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let space = Space::new(set, Metric::L2).unwrap();
        let c = cands(&space, &[1, 2]);
        assert_eq!(occlusion_factors(&c, &space), vec![0, 0]);
    }

    #[test]
    fn collinear_points_keep_only_adjacent_edges() {
        let space = line(&[0.0, 1.0, 2.0]);
        let knn = brute_force_knn(&space, 2).unwrap();
        let params = DiversifyParams {
            alpha: 1.0,
            lambda0: 0,
            max_degree: None,
        };
        let g = build(&space, &knn, &params).unwrap();
        let targets = |u: u32| g.neighbors(u).iter().map(|e| e.target).collect::<Vec<_>>();
        assert_eq!(targets(0), vec![1]);
        assert_eq!(targets(1), vec![0, 2]);
        assert_eq!(targets(2), vec![1]);
    }

    #[test]
    fn rejects_bad_params() {
        for alpha in [0.9, f32::NAN, f32::INFINITY] {
            let p = DiversifyParams {
                alpha,
                ..Default::default()
            };
            assert!(p.validate().is_err());
        }
        let p = DiversifyParams {
            max_degree: Some(0),
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn build_checks_sizes() {
        let space = line(&[0.0, 1.0, 2.0]);
        let other = line(&[0.0, 1.0]);
        let knn = brute_force_knn(&other, 1).unwrap();
        assert!(matches!(
            build(&space, &knn, &DiversifyParams::default()),
            Err(Error::GraphSizeMismatch { .. })
        ));
    }
}
