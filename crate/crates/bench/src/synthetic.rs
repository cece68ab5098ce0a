//! Gaussian-mixture test data.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use tsdg::{seeding, VectorSet};

use crate::error::{Error, Result};

/// Isotropic Gaussian mixture with centers drawn uniformly from `[0, 1)^d`.
///
/// The centers depend only on `seed`, so base points and queries sampled
/// from the same mixture share clusters.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    dim: usize,
    spread: f32,
    centers: Vec<f32>,
    seed: u64,
}

const CENTER_STREAM: u64 = 0;
const BASE_STREAM: u64 = 1;
const QUERY_STREAM: u64 = 2;

impl GaussianMixture {
    pub fn new(dim: usize, clusters: usize, spread: f32, seed: u64) -> Result<Self> {
        if dim == 0 || clusters == 0 {
            return Err(Error::Config("dimension and cluster count must be at least 1".into()));
        }
        if !(spread >= 0.0 && spread.is_finite()) {
            return Err(Error::Config(format!(
                "spread must be finite and non-negative, got {spread}"
            )));
        }
        let mut rng = seeding::stream(seed, CENTER_STREAM, 0);
        let centers = (0..dim * clusters).map(|_| rng.random::<f32>()).collect();
        Ok(Self {
            dim,
            spread,
            centers,
            seed,
        })
    }

    pub fn clusters(&self) -> usize {
        self.centers.len() / self.dim
    }

    fn sample_stream(&self, n: usize, stream: u64) -> VectorSet {
        let mut rng = seeding::stream(self.seed, stream, 0);
        let noise = Normal::new(0.0f32, self.spread).expect("spread validated in new");
        let mut data = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            let c = rng.random_range(0..self.clusters());
            let center = &self.centers[c * self.dim..(c + 1) * self.dim];
            data.extend(center.iter().map(|&x| x + noise.sample(&mut rng)));
        }
        VectorSet::new(self.dim, data).expect("mixture samples are finite")
    }

    /// Base points.
    pub fn sample(&self, n: usize) -> VectorSet {
        self.sample_stream(n, BASE_STREAM)
    }

    /// Query points from the same mixture, independent of the base points.
    pub fn sample_queries(&self, n: usize) -> VectorSet {
        self.sample_stream(n, QUERY_STREAM)
    }
}

/// `n` points from a `clusters`-component mixture in `d` dimensions.
pub fn make_synthetic(n: usize, d: usize, clusters: usize, spread: f32, seed: u64) -> Result<VectorSet> {
    Ok(GaussianMixture::new(d, clusters, spread, seed)?.sample(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spread_single_cluster_repeats_one_vector() {
        let set = make_synthetic(20, 5, 1, 0.0, 3).unwrap();
        assert_eq!(set.len(), 20);
        assert!(set.rows().all(|r| r == set.row(0)));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let a = make_synthetic(200, 8, 4, 0.1, 9).unwrap();
        let b = make_synthetic(200, 8, 4, 0.1, 9).unwrap();
        let bits = |s: &VectorSet| s.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&make_synthetic(200, 8, 4, 0.1, 10).unwrap()));
    }

    #[test]
    fn queries_share_the_clusters() {
        let mix = GaussianMixture::new(4, 1, 0.0, 1).unwrap();
        assert_eq!(mix.sample(1).row(0), mix.sample_queries(3).row(2));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianMixture::new(4, 0, 0.1, 0).is_err());
        assert!(GaussianMixture::new(4, 2, -0.1, 0).is_err());
        assert!(GaussianMixture::new(0, 2, 0.1, 0).is_err());
    }
}
