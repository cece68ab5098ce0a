#![allow(dead_code)]

use rand::Rng;
use tsdg::{brute_force_knn, diversify, seeding, DiversifyParams, Metric, Neighbor, Space, TsdgGraph, VectorSet};

/// `n` points uniform in the unit cube.
pub fn uniform(n: usize, dim: usize, seed: u64) -> VectorSet {
    let mut rng = seeding::stream(seed, 0, 0);
    let data = (0..n * dim).map(|_| rng.random::<f32>()).collect();
    VectorSet::new(dim, data).unwrap()
}

pub fn space(n: usize, dim: usize, seed: u64) -> Space {
    Space::new(uniform(n, dim, seed), Metric::L2).unwrap()
}

pub fn graph(space: &Space, k: usize, params: &DiversifyParams) -> TsdgGraph {
    let knn = brute_force_knn(space, k).unwrap();
    diversify::build(space, &knn, params).unwrap()
}

/// Exact top-`k` by scanning every point, in f64.
pub fn exact_top_k(space: &Space, q: &[f32], k: usize) -> Vec<u32> {
    let mut all: Vec<(f64, u32)> = (0..space.len())
        .map(|i| {
            let d = space.vectors().row(i).iter().zip(q).map(|(a, b)| {
                let t = *a as f64 - *b as f64;
                t * t
            });
            (d.sum(), i as u32)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn ids(list: &[Neighbor]) -> Vec<u32> {
    list.iter().map(|n| n.id).collect()
}
