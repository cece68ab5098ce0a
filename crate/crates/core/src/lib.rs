//! Graph-based approximate nearest-neighbor search on a two-stage
//! diversified graph.
//!
//! The pipeline is:
//!
//! 1. Load or generate a [`VectorSet`] and wrap it in a [`Space`] with a
//!    [`Metric`].
//! 2. Build a k-NN graph with [`brute_force_knn`] or [`nn_descent`].
//! 3. Diversify it with [`diversify::build`] into a [`TsdgGraph`], whose
//!    edges carry occlusion factors.
//! 4. Search with [`search::greedy`] (small query batches) or
//!    [`search::bestfirst`] (large batches), choosing at query time how many
//!    edges per node to visit through an occlusion-factor cutoff.
//!
//! ```
//! use tsdg::{brute_force_knn, diversify, Metric, Space, VectorSet};
//! use tsdg::search::bestfirst::{large_batch_search, BestFirstParams};
//!
//! let rows: Vec<[f32; 2]> = (0..64).map(|i| [(i % 8) as f32, (i / 8) as f32]).collect();
//! let space = Space::new(VectorSet::from_rows(&rows)?, Metric::L2)?;
//! let knn = brute_force_knn(&space, 8)?;
//! let graph = diversify::build(&space, &knn, &Default::default())?;
//!
//! let queries = VectorSet::from_rows(&[[2.1f32, 5.9]])?;
//! let params = BestFirstParams { k: 1, delta: 4.0, ..Default::default() };
//! let hits = large_batch_search(&graph, &space, &queries, &params)?;
//! assert_eq!(hits[0][0].id, 2 + 6 * 8);
//! # Ok::<(), tsdg::Error>(())
//! ```

pub mod diversify;
mod error;
pub mod io;
pub mod knn;
mod metric;
mod neighbor;
pub mod search;
pub mod seeding;
mod vectors;

pub use diversify::{DiversifyParams, TsdgEdge, TsdgGraph};
pub use error::{Error, Result};
pub use knn::{brute_force_knn, nn_descent, KnnGraph, NnDescentParams};
pub use metric::{distance, Metric, Space};
pub use neighbor::{CandidateEdge, Neighbor, NONE_ID};
pub use vectors::VectorSet;

// Code listings in the guide under `book/` run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/knn.md")]
    mod knn {}
    #[doc = include_str!("../../../book/src/occlusion.md")]
    mod occlusion {}
    #[doc = include_str!("../../../book/src/two-stage.md")]
    mod two_stage {}
    #[doc = include_str!("../../../book/src/greedy-search.md")]
    mod greedy_search {}
    #[doc = include_str!("../../../book/src/best-first-search.md")]
    mod best_first_search {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    mod benchmarking {}
}
