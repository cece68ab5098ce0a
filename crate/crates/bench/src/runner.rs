//! Parameter sweeps with recall and throughput measurement.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `dataset` | config `name` |
//! | `algorithm` | `greedy` or `bestfirst` |
//! | `batch_size` | queries per search call |
//! | `k` | results per query |
//! | `t0`, `hops`, `lambda_cut`, `delta`, `m_segments`, `structures` | search parameters; empty where they do not apply |
//! | `seed` | search seed |
//! | `metric`, `knn_k`, `alpha`, `lambda0` | graph parameters |
//! | `recall` | Recall@k against exhaustive ground truth |
//! | `qps` | queries per second of wall-clock search time |
//! | `mean_hops`, `mean_dist_evals` | per-query averages |

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use log::info;
use serde::Serialize;
use tsdg::search::bestfirst::{large_batch_search_from, BestFirstParams, Structures};
use tsdg::search::greedy::{small_batch_search_from, GreedyParams};
use tsdg::search::QueryResult;
use tsdg::{
    brute_force_knn, diversify, io, nn_descent, DiversifyParams, KnnGraph, Metric, NnDescentParams, Space, TsdgGraph,
    VectorSet,
};

use crate::config::{BenchConfig, DataSource, KnnMethod, Procedure};
use crate::error::{Error, Result};
use crate::synthetic::GaussianMixture;
use crate::truth::{ground_truth, recall_at_k, GroundTruth};

/// Base vectors, queries and their exact neighbors.
pub struct Dataset {
    pub space: Space,
    pub queries: VectorSet,
    pub truth: GroundTruth,
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub algorithm: &'static str,
    pub batch_size: usize,
    pub k: usize,
    pub t0: Option<usize>,
    pub hops: usize,
    pub lambda_cut: u32,
    pub delta: Option<f32>,
    pub m_segments: Option<usize>,
    pub structures: Option<&'static str>,
    pub seed: u64,
    pub metric: String,
    pub knn_k: u32,
    pub alpha: f32,
    pub lambda0: u16,
    pub recall: f64,
    pub qps: f64,
    pub mean_hops: f64,
    pub mean_dist_evals: f64,
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// Loads or generates the vectors and queries, and loads or computes ground
/// truth to depth `config.gt_depth()`.
pub fn load_dataset(config: &BenchConfig) -> Result<Dataset> {
    let metric = config.metric()?;
    let (base, queries, truth_file) = match &config.data {
        DataSource::Synthetic {
            n,
            d,
            clusters,
            spread,
            seed,
            queries,
        } => {
            let mix = GaussianMixture::new(*d, *clusters, *spread, *seed)?;
            (mix.sample(*n), mix.sample_queries(*queries), None)
        }
        DataSource::Files {
            base,
            queries,
            ground_truth,
        } => (
            io::load_vectors(base)?,
            io::load_vectors(queries)?,
            ground_truth.clone(),
        ),
    };
    let space = Space::new(base, metric)?;
    let truth = match truth_file {
        Some(path) => {
            let truth = GroundTruth::from_ivecs(io::load_ivecs(&path)?)?;
            if truth.len() != queries.len() {
                return Err(Error::Config(format!(
                    "{} has {} rows for {} queries",
                    path.display(),
                    truth.len(),
                    queries.len()
                )));
            }
            truth
        }
        None => ground_truth(&space, &queries, config.gt_depth().min(space.len()))?,
    };
    Ok(Dataset { space, queries, truth })
}

/// Loads the configured graph, or builds it from the base vectors.
pub fn obtain_graph(config: &BenchConfig, space: &Space) -> Result<TsdgGraph> {
    let g = &config.graph;
    if let Some(path) = &g.path {
        return Ok(TsdgGraph::load(path)?);
    }
    let knn = build_knn(space, g.knn_method, g.knn_k, g.nn_iterations, g.nn_sample_rate, g.seed)?;
    let params = DiversifyParams {
        alpha: g.alpha,
        lambda0: g.lambda0,
        max_degree: g.max_degree,
    };
    Ok(diversify::build(space, &knn, &params)?)
}

pub fn build_knn(
    space: &Space,
    method: KnnMethod,
    k: usize,
    iterations: usize,
    sample_rate: f64,
    seed: u64,
) -> Result<KnnGraph> {
    let knn = match method {
        KnnMethod::Brute => brute_force_knn(space, k)?,
        KnnMethod::Nndescent => nn_descent(
            space,
            &NnDescentParams {
                k,
                iterations,
                sample_rate,
                seed,
            },
        )?,
    };
    Ok(knn)
}

/// Runs the full sweep described by `config`.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let graph = obtain_graph(config, &dataset.space)?;
    run_bench_on(config, &dataset, &graph)
}

/// Runs the sweep against an already prepared dataset and graph.
pub fn run_bench_on(config: &BenchConfig, dataset: &Dataset, graph: &TsdgGraph) -> Result<BenchReport> {
    config.validate()?;
    let metric: Metric = config.metric()?;
    if metric != dataset.space.metric() {
        return Err(Error::Config(format!(
            "config metric {metric} differs from dataset metric {}",
            dataset.space.metric()
        )));
    }
    let header = graph.header();
    let mut report = BenchReport::default();
    for &batch_size in &config.batch_sizes {
        for procedure in config.procedures(batch_size) {
            for point in sweep_points(config, procedure) {
                let row_base = BenchRow {
                    dataset: config.name.clone(),
                    algorithm: procedure.name(),
                    batch_size,
                    k: config.k,
                    t0: None,
                    hops: 0,
                    lambda_cut: 0,
                    delta: None,
                    m_segments: None,
                    structures: None,
                    seed: config.seed,
                    metric: metric.to_string(),
                    knn_k: header.k,
                    alpha: header.alpha,
                    lambda0: header.lambda0,
                    recall: 0.0,
                    qps: 0.0,
                    mean_hops: 0.0,
                    mean_dist_evals: 0.0,
                };
                let row = measure(config, dataset, graph, batch_size, &point, row_base)?;
                info!(
                    "{} batch={} recall={:.4} qps={:.0}",
                    row.algorithm, row.batch_size, row.recall, row.qps
                );
                report.rows.push(row);
            }
        }
    }
    Ok(report)
}

/// One parameter point of a sweep.
#[derive(Clone, Debug)]
pub enum SweepPoint {
    Greedy(GreedyParams),
    BestFirst(BestFirstParams),
}

/// Cartesian product of the configured sweep lists for one procedure.
pub fn sweep_points(config: &BenchConfig, procedure: Procedure) -> Vec<SweepPoint> {
    let mut points = Vec::new();
    match procedure {
        Procedure::Greedy => {
            let g = &config.greedy;
            for &t0 in &g.t0 {
                for &hops in &g.hops {
                    for &lambda_cut in &g.lambda_cut {
                        points.push(SweepPoint::Greedy(GreedyParams {
                            t0,
                            hops,
                            lambda_cut,
                            seed: config.seed,
                        }));
                    }
                }
            }
        }
        Procedure::BestFirst => {
            let b = &config.bestfirst;
            for &structures in &b.structures {
                for &m_segments in &b.m_segments {
                    for &hops in &b.hops {
                        for &lambda_cut in &b.lambda_cut {
                            for &delta in &b.delta {
                                points.push(SweepPoint::BestFirst(BestFirstParams {
                                    k: config.k,
                                    hops,
                                    delta,
                                    m_segments,
                                    lambda_cut,
                                    seed: config.seed,
                                    structures: structures.into(),
                                }));
                            }
                        }
                    }
                }
            }
        }
    }
    points
}

fn search_chunk(
    graph: &TsdgGraph,
    space: &Space,
    queries: &VectorSet,
    k: usize,
    point: &SweepPoint,
    first_index: u64,
) -> Result<Vec<QueryResult>> {
    Ok(match point {
        SweepPoint::Greedy(p) => small_batch_search_from(graph, space, queries, k, p, first_index)?,
        SweepPoint::BestFirst(p) => large_batch_search_from(graph, space, queries, p, first_index)?,
    })
}

fn measure(
    config: &BenchConfig,
    dataset: &Dataset,
    graph: &TsdgGraph,
    batch_size: usize,
    point: &SweepPoint,
    mut row: BenchRow,
) -> Result<BenchRow> {
    let nq = dataset.queries.len();
    if config.warmup && nq > 0 {
        let end = batch_size.min(nq);
        search_chunk(
            graph,
            &dataset.space,
            &dataset.queries.slice(0..end),
            config.k,
            point,
            0,
        )?;
    }
    let mut results: Vec<QueryResult> = Vec::with_capacity(nq);
    let mut elapsed = Duration::ZERO;
    for start in (0..nq).step_by(batch_size) {
        let chunk = dataset.queries.slice(start..(start + batch_size).min(nq));
        let t = Instant::now();
        let out = search_chunk(graph, &dataset.space, &chunk, config.k, point, start as u64)?;
        elapsed += t.elapsed();
        results.extend(out);
    }
    let ids: Vec<Vec<u32>> = results.iter().map(QueryResult::ids).collect();
    row.recall = recall_at_k(&ids, &dataset.truth, config.k)?;
    let secs = elapsed.as_secs_f64();
    row.qps = if secs > 0.0 { nq as f64 / secs } else { 0.0 };
    let denom = nq.max(1) as f64;
    row.mean_hops = results.iter().map(|r| r.stats.hops as f64).sum::<f64>() / denom;
    row.mean_dist_evals = results.iter().map(|r| r.stats.dist_evals as f64).sum::<f64>() / denom;
    match point {
        SweepPoint::Greedy(p) => {
            row.t0 = Some(p.t0);
            row.hops = p.hops;
            row.lambda_cut = p.lambda_cut;
        }
        SweepPoint::BestFirst(p) => {
            row.hops = p.hops;
            row.lambda_cut = p.lambda_cut;
            row.delta = Some(p.delta);
            row.m_segments = Some(p.m_segments);
            row.structures = Some(match p.structures {
                Structures::Segmented => "segmented",
                Structures::Unbounded => "unbounded",
            });
        }
    }
    Ok(row)
}
