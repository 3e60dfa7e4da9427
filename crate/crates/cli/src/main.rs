//! Command-line front-end: dataset generation, single clustering runs and
//! benchmarks.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use spectral_accel::bench::{run_benchmark, run_method, BenchmarkSpec, Dataset, DatasetSpec, Input, MethodConfig};
use spectral_accel::datasets::misclustering_rate;
use spectral_accel::graph::{cut_cost, CutKind, Partition, PointSet, SimilarityGraph};

#[derive(Parser)]
#[command(name = "spectral-accel", version, about = "Accelerated spectral clustering")]
struct Cli {
    /// Master seed; overrides the seed in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SPEC_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[command(subcommand)]
        dataset: GenDataset,
    },
    /// Run one method configuration and write labels.
    Cluster(ClusterArgs),
    /// Run a benchmark file and write the report.
    Bench {
        /// JSON benchmark specification.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenDataset {
    /// Two interleaved half-circles (writes points.csv, truth.csv).
    TwoMoons {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
    },
    /// Stochastic block model (writes graph.edges, truth.csv).
    Sbm {
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.3)]
        p_in: f64,
        #[arg(long, default_value_t = 0.01)]
        p_out: f64,
    },
    /// Gaussian blobs on a circle (writes points.csv, truth.csv).
    Blobs {
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 5.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
    },
}

#[derive(Args)]
struct ClusterArgs {
    /// JSON method configuration.
    #[arg(long)]
    config: PathBuf,
    /// Points CSV with a header row.
    #[arg(long, conflicts_with = "edges", required_unless_present = "edges")]
    points: Option<PathBuf>,
    /// Whitespace-separated edge list `i j w`.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Ground-truth labels CSV `point_id,label`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring thread pool")?;
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match cli.command {
        Command::Gen { dataset } => gen(dataset, cli.seed.unwrap_or(0), &cli.out),
        Command::Cluster(args) => cluster(&args, cli.seed, &cli.out),
        Command::Bench { config } => bench(&config, cli.seed, &cli.out),
    }
}

fn gen(dataset: GenDataset, seed: u64, out: &Path) -> Result<()> {
    let spec = match dataset {
        GenDataset::TwoMoons { n, noise } => DatasetSpec::TwoMoons { n, noise },
        GenDataset::Sbm { n, k, p_in, p_out } => DatasetSpec::Sbm { n, k, p_in, p_out },
        GenDataset::Blobs {
            n,
            k,
            d,
            separation,
            spread,
        } => DatasetSpec::Blobs {
            n,
            k,
            d,
            separation,
            spread,
        },
    };
    let Dataset { input, truth } = spec.generate(seed)?;
    match input {
        Input::Points(p) => p.write_csv(out.join("points.csv"))?,
        Input::Graph(g) => {
            if !g.is_connected() {
                log::warn!("generated graph is disconnected");
            }
            g.write_edge_list(out.join("graph.edges"))?
        }
    }
    if let Some(t) = truth {
        t.write_csv(out.join("truth.csv"))?;
    }
    info!("wrote dataset to {}", out.display());
    Ok(())
}

fn cluster(args: &ClusterArgs, seed: Option<u64>, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut config: MethodConfig = serde_json::from_str(&text).context("parsing method configuration")?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let input = match (&args.points, &args.edges) {
        (Some(p), _) => Input::Points(PointSet::read_csv(p)?),
        (None, Some(e)) => Input::Graph(SimilarityGraph::read_edge_list(e, None)?),
        (None, None) => bail!("one of --points or --edges is required"),
    };
    let start = Instant::now();
    let result = run_method(&config, &input)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    result.partition.write_csv(out.join("labels.csv"))?;

    let graph = match (&result.graph, &input) {
        (Some(g), _) => Some(g.clone()),
        (None, Input::Graph(g)) => Some(g.clone()),
        (None, Input::Points(_)) => None,
    };
    let cut = |kind| graph.as_ref().and_then(|g| cut_cost(g, &result.partition, kind).ok());
    let misclustering = match &args.truth {
        Some(path) => Some(misclustering_rate(&result.partition, &Partition::read_csv(path)?)?),
        None => None,
    };
    let summary = json!({
        "method_id": config.id,
        "params": config,
        "seed": config.seed,
        "n": result.partition.n(),
        "k": result.partition.k(),
        "cluster_sizes": result.partition.sizes(),
        "wall_time_ms": wall_time_ms,
        "rcut": cut(CutKind::Rcut),
        "ncut": cut(CutKind::Ncut),
        "misclustering_rate": misclustering,
    });
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

fn bench(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut spec = BenchmarkSpec::read_json(config).with_context(|| format!("reading {}", config.display()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let report = run_benchmark(&spec)?;
    report.write_json(out.join("report.json"))?;
    report.write_csv(out.join("report.csv"))?;
    let failed = report.runs.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} runs failed; see report", report.runs.len());
    }
    for m in &spec.methods {
        println!(
            "{:<24} median misclustering {:>8} median cost ratio {:>8}",
            m.id,
            fmt(report.median(&m.id, |r| r.misclustering_rate)),
            fmt(report.median(&m.id, |r| r.cost_ratio_vs_exact)),
        );
    }
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}
