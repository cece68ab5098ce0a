use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use tsdg::search::bestfirst::{large_batch_search, BestFirstParams, Structures};
use tsdg::search::greedy::{small_batch_search, GreedyParams};
use tsdg::{diversify, io, DiversifyParams, KnnGraph, Metric, Space, TsdgGraph};
use tsdg_bench::config::KnnMethod;
use tsdg_bench::runner::build_knn;
use tsdg_bench::{ground_truth, run_bench, BenchConfig, GaussianMixture};

#[derive(Parser)]
#[command(
    name = "tsdg",
    version,
    about = "Build and benchmark two-stage diversified search graphs"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian-mixture dataset.
    Gen(GenArgs),
    /// Build a k-NN graph.
    Knn(KnnArgs),
    /// Diversify a k-NN graph into a TSDG graph.
    Diversify(DiversifyArgs),
    /// Compute exact ground truth.
    Gt(GtArgs),
    /// Search a TSDG graph.
    Search(SearchArgs),
    /// Run a benchmark sweep from a config file.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    #[arg(long, default_value_t = 0.05)]
    spread: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also sample this many queries from the same mixture.
    #[arg(long, requires = "queries_out")]
    queries: Option<usize>,
    #[arg(long)]
    queries_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    L2,
    Cos,
    Ip,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::L2 => Metric::L2,
            MetricArg::Cos => Metric::Cosine,
            MetricArg::Ip => Metric::InnerProduct,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Brute,
    Nndescent,
}

#[derive(Args)]
struct KnnArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, value_enum, default_value = "l2")]
    metric: MetricArg,
    #[arg(long, value_enum, default_value = "brute")]
    method: MethodArg,
    /// NN-descent rounds.
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    /// NN-descent fraction of new neighbors joined per round.
    #[arg(long, default_value_t = 1.0)]
    sample_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiversifyArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    knn: PathBuf,
    /// Metric the k-NN graph was built with.
    #[arg(long, value_enum, default_value = "l2")]
    metric: MetricArg,
    #[arg(long, default_value_t = 1.2)]
    alpha: f32,
    #[arg(long, default_value_t = 9)]
    lambda0: u16,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GtArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, value_enum, default_value = "l2")]
    metric: MetricArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Greedy,
    Bestfirst,
}

#[derive(Clone, Copy, ValueEnum)]
enum StructuresArg {
    Segmented,
    Unbounded,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Independent searches per query (greedy).
    #[arg(long, default_value_t = 16)]
    t0: usize,
    /// Hop limit; defaults to 16 for greedy and 1024 for best-first.
    #[arg(long = "T", alias = "hops")]
    hops: Option<usize>,
    /// Visit only edges with occlusion factor below this; defaults to 10
    /// for greedy and 5 for best-first.
    #[arg(long)]
    lambda_cut: Option<u32>,
    /// Termination slack (best-first), in metric units.
    #[arg(long, default_value_t = 0.0)]
    delta: f32,
    #[arg(long, default_value_t = 8)]
    m_segments: usize,
    #[arg(long, value_enum, default_value = "segmented")]
    structures: StructuresArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML, or JSON when the name ends in `.json`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Knn(a) => knn(a),
        Command::Diversify(a) => diversify_cmd(a),
        Command::Gt(a) => gt(a),
        Command::Search(a) => search(a),
        Command::Bench(a) => bench(a),
    }
}

fn load_space(path: &PathBuf, metric: Metric) -> Result<Space> {
    let set = io::load_vectors(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Space::new(set, metric)?)
}

fn gen(a: GenArgs) -> Result<()> {
    let mix = GaussianMixture::new(a.d, a.clusters, a.spread, a.seed)?;
    io::save_fvecs(&a.out, &mix.sample(a.n))?;
    info!("wrote {} vectors to {}", a.n, a.out.display());
    if let (Some(nq), Some(path)) = (a.queries, a.queries_out) {
        io::save_fvecs(&path, &mix.sample_queries(nq))?;
        info!("wrote {nq} queries to {}", path.display());
    }
    Ok(())
}

fn knn(a: KnnArgs) -> Result<()> {
    let space = load_space(&a.data, a.metric.into())?;
    let method = match a.method {
        MethodArg::Brute => KnnMethod::Brute,
        MethodArg::Nndescent => KnnMethod::Nndescent,
    };
    let graph = build_knn(&space, method, a.k, a.iterations, a.sample_rate, a.seed)?;
    graph.save(&a.out)?;
    info!(
        "wrote {}-NN graph over {} nodes to {}",
        graph.k(),
        graph.len(),
        a.out.display()
    );
    Ok(())
}

fn diversify_cmd(a: DiversifyArgs) -> Result<()> {
    let space = load_space(&a.data, a.metric.into())?;
    let knn = KnnGraph::load(&a.knn).with_context(|| format!("reading {}", a.knn.display()))?;
    let params = DiversifyParams {
        alpha: a.alpha,
        lambda0: a.lambda0,
        max_degree: a.max_degree,
    };
    let (graph, stats) = diversify::build_with_stats(&space, &knn, &params)?;
    info!(
        "stage 1 kept {:.1}% of {} edges; final graph has {} edges",
        100.0 * stats.stage1_retention(),
        stats.knn_edges,
        stats.final_edges
    );
    graph.save(&a.out)?;
    Ok(())
}

fn gt(a: GtArgs) -> Result<()> {
    let space = load_space(&a.data, a.metric.into())?;
    let queries = io::load_vectors(&a.queries)?;
    let truth = ground_truth(&space, &queries, a.k)?;
    io::save_ivecs(&a.out, &truth.to_ivecs())?;
    Ok(())
}

fn search(a: SearchArgs) -> Result<()> {
    let graph = TsdgGraph::load(&a.graph).with_context(|| format!("reading {}", a.graph.display()))?;
    let space = load_space(&a.data, graph.metric())?;
    let queries = io::load_vectors(&a.queries)?;
    let results = match a.mode {
        Mode::Greedy => {
            let params = GreedyParams {
                t0: a.t0,
                hops: a.hops.unwrap_or(16),
                lambda_cut: a.lambda_cut.unwrap_or(10),
                seed: a.seed,
            };
            small_batch_search(&graph, &space, &queries, a.k, &params)?
        }
        Mode::Bestfirst => {
            let params = BestFirstParams {
                k: a.k,
                hops: a.hops.unwrap_or(1024),
                delta: a.delta,
                m_segments: a.m_segments,
                lambda_cut: a.lambda_cut.unwrap_or(5),
                seed: a.seed,
                structures: match a.structures {
                    StructuresArg::Segmented => Structures::Segmented,
                    StructuresArg::Unbounded => Structures::Unbounded,
                },
            };
            large_batch_search(&graph, &space, &queries, &params)?
        }
    };
    let lists: Vec<Vec<i32>> = results
        .iter()
        .map(|r| r.iter().map(|n| n.id as i32).collect())
        .collect();
    io::save_ivecs(&a.out, &lists)?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let config = BenchConfig::load(&a.config)?;
    let report = run_bench(&config)?;
    if report.rows.is_empty() {
        bail!("the configuration produced no parameter points");
    }
    report.save_csv(&a.out)?;
    info!("wrote {} rows to {}", report.rows.len(), a.out.display());
    Ok(())
}
