//! Benchmark configuration, read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tsdg::search::bestfirst::Structures;
use tsdg::Metric;

use crate::error::{Error, Result};

fn default_metric() -> String {
    "l2".into()
}
fn default_k() -> usize {
    10
}
fn default_batch_sizes() -> Vec<usize> {
    vec![10]
}
fn default_small_batch_max() -> usize {
    100
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Dataset label written to every CSV row.
    pub name: String,
    #[serde(default = "default_metric")]
    pub metric: String,
    /// Results per query, and the k of Recall@k.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Depth of computed ground truth; defaults to `k`.
    #[serde(default)]
    pub gt_k: Option<usize>,
    #[serde(default = "default_batch_sizes")]
    pub batch_sizes: Vec<usize>,
    /// Batches of at most this many queries take the greedy procedure under
    /// `route = "auto"`; larger batches take best-first.
    #[serde(default = "default_small_batch_max")]
    pub small_batch_max: usize,
    #[serde(default)]
    pub route: Route,
    /// Seed for search start nodes.
    #[serde(default)]
    pub seed: u64,
    /// Run one untimed batch before each timed pass.
    #[serde(default = "default_true")]
    pub warmup: bool,
    pub data: DataSource,
    #[serde(default)]
    pub graph: GraphSource,
    #[serde(default)]
    pub greedy: GreedySweep,
    #[serde(default)]
    pub bestfirst: BestFirstSweep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Choose by batch size against `small_batch_max`.
    #[default]
    Auto,
    Greedy,
    Bestfirst,
    /// Run both procedures at every batch size.
    Both,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Synthetic {
        n: usize,
        d: usize,
        clusters: usize,
        spread: f32,
        #[serde(default)]
        seed: u64,
        queries: usize,
    },
    Files {
        base: PathBuf,
        queries: PathBuf,
        #[serde(default)]
        ground_truth: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMethod {
    #[default]
    Brute,
    Nndescent,
}

fn default_knn_k() -> usize {
    50
}
fn default_alpha() -> f32 {
    1.2
}
fn default_lambda0() -> u16 {
    9
}
fn default_nn_iterations() -> usize {
    10
}
fn default_sample_rate() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    /// Prebuilt TSDG file; when set, the build fields are ignored.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_knn_k")]
    pub knn_k: usize,
    #[serde(default)]
    pub knn_method: KnnMethod,
    #[serde(default = "default_nn_iterations")]
    pub nn_iterations: usize,
    #[serde(default = "default_sample_rate")]
    pub nn_sample_rate: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f32,
    #[serde(default = "default_lambda0")]
    pub lambda0: u16,
    #[serde(default)]
    pub max_degree: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GraphSource {
    fn default() -> Self {
        Self {
            path: None,
            knn_k: default_knn_k(),
            knn_method: KnnMethod::default(),
            nn_iterations: default_nn_iterations(),
            nn_sample_rate: default_sample_rate(),
            alpha: default_alpha(),
            lambda0: default_lambda0(),
            max_degree: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GreedySweep {
    pub t0: Vec<usize>,
    pub hops: Vec<usize>,
    pub lambda_cut: Vec<u32>,
}

impl Default for GreedySweep {
    fn default() -> Self {
        Self {
            t0: vec![16],
            hops: vec![16],
            lambda_cut: vec![10],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StructuresName {
    Segmented,
    Unbounded,
}

impl From<StructuresName> for Structures {
    fn from(s: StructuresName) -> Self {
        match s {
            StructuresName::Segmented => Structures::Segmented,
            StructuresName::Unbounded => Structures::Unbounded,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BestFirstSweep {
    pub hops: Vec<usize>,
    pub delta: Vec<f32>,
    pub lambda_cut: Vec<u32>,
    pub m_segments: Vec<usize>,
    pub structures: Vec<StructuresName>,
}

impl Default for BestFirstSweep {
    fn default() -> Self {
        Self {
            hops: vec![1024],
            delta: vec![0.0],
            lambda_cut: vec![5],
            m_segments: vec![8],
            structures: vec![StructuresName::Segmented],
        }
    }
}

impl BenchConfig {
    /// Parses TOML, or JSON when the path ends in `.json`. Relative paths in
    /// the config are resolved against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut config = if is_json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
        .map_err(|e| match e {
            Error::Parse { reason, .. } => Error::Parse {
                path: path.display().to_string(),
                reason,
            },
            other => other,
        })?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<toml>".into(),
            reason: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<json>".into(),
            reason: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let DataSource::Files {
            base,
            queries,
            ground_truth,
        } = &mut self.data
        {
            fix(base);
            fix(queries);
            if let Some(gt) = ground_truth {
                fix(gt);
            }
        }
        if let Some(p) = &mut self.graph.path {
            fix(p);
        }
    }

    pub fn metric(&self) -> Result<Metric> {
        Ok(self.metric.parse()?)
    }

    pub fn gt_depth(&self) -> usize {
        self.gt_k.unwrap_or(self.k).max(self.k)
    }

    pub fn validate(&self) -> Result<()> {
        self.metric()?;
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.batch_sizes.is_empty() || self.batch_sizes.contains(&0) {
            return Err(Error::Config("batch_sizes must be non-empty and positive".into()));
        }
        let g = &self.greedy;
        if g.t0.is_empty() || g.hops.is_empty() || g.lambda_cut.is_empty() {
            return Err(Error::Config("greedy sweep lists must be non-empty".into()));
        }
        let b = &self.bestfirst;
        if b.hops.is_empty()
            || b.delta.is_empty()
            || b.lambda_cut.is_empty()
            || b.m_segments.is_empty()
            || b.structures.is_empty()
        {
            return Err(Error::Config("bestfirst sweep lists must be non-empty".into()));
        }
        Ok(())
    }

    /// Procedures to run for one batch size.
    pub fn procedures(&self, batch_size: usize) -> Vec<Procedure> {
        match self.route {
            Route::Greedy => vec![Procedure::Greedy],
            Route::Bestfirst => vec![Procedure::BestFirst],
            Route::Both => vec![Procedure::Greedy, Procedure::BestFirst],
            Route::Auto if batch_size <= self.small_batch_max => vec![Procedure::Greedy],
            Route::Auto => vec![Procedure::BestFirst],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Procedure {
    Greedy,
    BestFirst,
}

impl Procedure {
    pub fn name(self) -> &'static str {
        match self {
            Procedure::Greedy => "greedy",
            Procedure::BestFirst => "bestfirst",
        }
    }
}
