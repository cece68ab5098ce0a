use rayon::prelude::*;

use super::{clamp_k, KnnGraph};
use crate::error::Result;
use crate::metric::Space;
use crate::neighbor::Neighbor;

/// Exact k-NN graph by exhaustive scan. Lists hold `min(k, n - 1)` entries.
///
/// Rows are computed independently in parallel; the output does not depend on
/// the worker count.
pub fn brute_force_knn(space: &Space, k: usize) -> Result<KnnGraph> {
    let k = clamp_k(space, k)?;
    let n = space.len();
    let mut entries = vec![Neighbor::NONE; n * k];
    entries
        .par_chunks_mut(k)
        .enumerate()
        .for_each_init(Vec::new, |scratch, (u, out)| {
            let u = u as u32;
            scratch.clear();
            scratch.extend(
                (0..n as u32)
                    .filter(|&v| v != u)
                    .map(|v| Neighbor::new(v, space.dist(u, v))),
            );
            if k < scratch.len() {
                scratch.select_nth_unstable(k - 1);
            }
            let top = &mut scratch[..k];
            top.sort_unstable();
            out.copy_from_slice(top);
        });
    KnnGraph::from_flat(k, entries)
}
