//! NN-descent: iterative local joins over sampled "new" and "old" neighbors.
//!
//! Proposals for a block of nodes are generated in parallel against a snapshot
//! of each list's current worst distance, then applied sequentially in node
//! order. The graph is therefore a pure function of the inputs and the seed.

use rand::seq::index;
use rayon::prelude::*;

use super::{clamp_k, KnnGraph};
use crate::error::{Error, Result};
use crate::metric::Space;
use crate::neighbor::Neighbor;
use crate::seeding;

const BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NnDescentParams {
    pub k: usize,
    pub iterations: usize,
    /// Fraction of `k` sampled per node and direction each iteration.
    pub sample_rate: f64,
    pub seed: u64,
}

impl Default for NnDescentParams {
    fn default() -> Self {
        Self {
            k: 20,
            iterations: 10,
            sample_rate: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy)]
struct Slot {
    nb: Neighbor,
    fresh: bool,
}

struct Lists {
    k: usize,
    slots: Vec<Slot>,
}

impl Lists {
    fn list(&self, u: usize) -> &[Slot] {
        &self.slots[u * self.k..(u + 1) * self.k]
    }

    fn list_mut(&mut self, u: usize) -> &mut [Slot] {
        &mut self.slots[u * self.k..(u + 1) * self.k]
    }

    fn worst(&self, u: usize) -> Neighbor {
        self.list(u)[self.k - 1].nb
    }

    /// Inserts `cand` into `u`'s list if it beats the current worst entry and
    /// is not already present.
    fn try_insert(&mut self, u: usize, cand: Neighbor) -> bool {
        let list = self.list_mut(u);
        let last = list.len() - 1;
        if cand >= list[last].nb || list.iter().any(|s| s.nb.id == cand.id) {
            return false;
        }
        let pos = list.partition_point(|s| s.nb < cand);
        list.copy_within(pos..last, pos + 1);
        list[pos] = Slot { nb: cand, fresh: true };
        true
    }
}

fn sample_ids(ids: &mut Vec<u32>, keep: usize, rng: &mut impl rand::Rng) {
    if ids.len() > keep {
        let picked: Vec<u32> = index::sample(rng, ids.len(), keep)
            .into_iter()
            .map(|i| ids[i])
            .collect();
        *ids = picked;
    }
}

/// Approximate k-NN graph by NN-descent.
///
/// `iterations = 0` returns the random initial lists.
pub fn nn_descent(space: &Space, params: &NnDescentParams) -> Result<KnnGraph> {
    if !(params.sample_rate > 0.0 && params.sample_rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sample_rate must lie in (0, 1], got {}",
            params.sample_rate
        )));
    }
    let k = clamp_k(space, params.k)?;
    let n = space.len();
    let sample = ((params.sample_rate * k as f64).ceil() as usize).clamp(1, k);

    let mut slots = vec![
        Slot {
            nb: Neighbor::NONE,
            fresh: true
        };
        n * k
    ];
    slots.par_chunks_mut(k).enumerate().for_each(|(u, out)| {
        let mut rng = seeding::stream(params.seed, 0, u as u64);
        let mut list: Vec<Neighbor> = index::sample(&mut rng, n - 1, k)
            .into_iter()
            .map(|i| {
                let v = if i >= u { i + 1 } else { i } as u32;
                Neighbor::new(v, space.dist(u as u32, v))
            })
            .collect();
        list.sort_unstable();
        for (slot, nb) in out.iter_mut().zip(list) {
            *slot = Slot { nb, fresh: true };
        }
    });
    let mut lists = Lists { k, slots };

    for iter in 0..params.iterations {
        let round = iter as u64 + 1;
        let mut fresh: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut old: Vec<Vec<u32>> = vec![Vec::new(); n];
        for u in 0..n {
            let mut rng = seeding::stream(params.seed, round, u as u64);
            let mut f: Vec<u32> = Vec::new();
            for s in lists.list(u) {
                if s.fresh {
                    f.push(s.nb.id);
                } else {
                    old[u].push(s.nb.id);
                }
            }
            sample_ids(&mut f, sample, &mut rng);
            for s in lists.list_mut(u) {
                if f.contains(&s.nb.id) {
                    s.fresh = false;
                }
            }
            fresh[u] = f;
        }

        let mut fresh_rev: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut old_rev: Vec<Vec<u32>> = vec![Vec::new(); n];
        for u in 0..n {
            for &v in &fresh[u] {
                fresh_rev[v as usize].push(u as u32);
            }
            for &v in &old[u] {
                old_rev[v as usize].push(u as u32);
            }
        }
        for u in 0..n {
            let mut rng = seeding::stream(params.seed, round, (n + u) as u64);
            sample_ids(&mut fresh_rev[u], sample, &mut rng);
            sample_ids(&mut old_rev[u], sample, &mut rng);
            fresh[u].append(&mut fresh_rev[u]);
            fresh[u].sort_unstable();
            fresh[u].dedup();
            old[u].append(&mut old_rev[u]);
            old[u].sort_unstable();
            old[u].dedup();
        }

        let mut updates = 0usize;
        for start in (0..n).step_by(BLOCK) {
            let end = (start + BLOCK).min(n);
            let worst: Vec<f32> = (0..n).map(|u| lists.worst(u).dist).collect();
            let proposals: Vec<Vec<(u32, u32, f32)>> = (start..end)
                .into_par_iter()
                .map(|u| {
                    let mut out = Vec::new();
                    let mut consider = |a: u32, b: u32| {
                        if a == b {
                            return;
                        }
                        let d = space.dist(a, b);
                        if d <= worst[a as usize] || d <= worst[b as usize] {
                            out.push((a, b, d));
                        }
                    };
                    let f = &fresh[u];
                    for (i, &a) in f.iter().enumerate() {
                        for &b in &f[i + 1..] {
                            consider(a, b);
                        }
                        for &b in &old[u] {
                            consider(a, b);
                        }
                    }
                    out
                })
                .collect();
            for (a, b, d) in proposals.into_iter().flatten() {
                updates += lists.try_insert(a as usize, Neighbor::new(b, d)) as usize;
                updates += lists.try_insert(b as usize, Neighbor::new(a, d)) as usize;
            }
        }
        log::debug!("nn-descent iteration {round}: {updates} updates");
        if updates == 0 && lists.slots.iter().all(|s| !s.fresh) {
            break;
        }
    }

    KnnGraph::from_flat(k, lists.slots.into_iter().map(|s| s.nb).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{brute_force_knn, graph_recall};
    use crate::metric::Metric;
    use crate::vectors::VectorSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_space(n: usize, d: usize, seed: u64) -> Space {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * d).map(|_| rng.random_range(0.0f32..1.0)).collect();
        Space::new(VectorSet::new(d, data).unwrap(), Metric::L2).unwrap()
    }

    fn check_structure(g: &KnnGraph, space: &Space) {
        for (u, list) in g.lists().enumerate() {
            assert!(list.windows(2).all(|w| w[0] < w[1]));
            for nb in list {
                assert_ne!(nb.id as usize, u);
                assert_eq!(nb.dist, space.dist(u as u32, nb.id));
            }
        }
    }

    #[test]
    fn reaches_high_recall_on_small_sets() {
        let space = random_space(500, 8, 11);
        let params = NnDescentParams {
            k: 20,
            iterations: 10,
            sample_rate: 1.0,
            seed: 5,
        };
        let approx = nn_descent(&space, &params).unwrap();
        let exact = brute_force_knn(&space, 20).unwrap();
        check_structure(&approx, &space);
        let r = graph_recall(&approx, &exact, None);
        assert!(r >= 0.90, "recall {r}");
    }

    #[test]
    fn zero_iterations_gives_valid_random_lists() {
        let space = random_space(50, 3, 1);
        let params = NnDescentParams {
            k: 7,
            iterations: 0,
            ..Default::default()
        };
        let g = nn_descent(&space, &params).unwrap();
        assert_eq!((g.len(), g.k()), (50, 7));
        check_structure(&g, &space);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let space = random_space(300, 6, 2);
        let params = NnDescentParams {
            k: 10,
            iterations: 4,
            sample_rate: 0.5,
            seed: 99,
        };
        assert_eq!(
            nn_descent(&space, &params).unwrap(),
            nn_descent(&space, &params).unwrap()
        );
    }

    #[test]
    fn quality_does_not_drop_with_more_iterations() {
        let space = random_space(1000, 8, 4);
        let exact = brute_force_knn(&space, 10).unwrap();
        let mut last = 0.0;
        for iterations in [1, 2, 4, 8] {
            let params = NnDescentParams {
                k: 10,
                iterations,
                sample_rate: 0.5,
                seed: 17,
            };
            let r = graph_recall(&nn_descent(&space, &params).unwrap(), &exact, None);
            assert!(r >= last, "{iterations} iterations: {r} < {last}");
            last = r;
        }
    }

    #[test]
    fn rejects_bad_sample_rate() {
        let space = random_space(10, 2, 0);
        for rate in [0.0, 1.5, f64::NAN] {
            let params = NnDescentParams {
                sample_rate: rate,
                ..Default::default()
            };
            assert!(nn_descent(&space, &params).is_err());
        }
    }
}
