use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netmanifold::phate::DiffusionTime;
use netmanifold::tda::{DiagramDistanceConfig, InfinitePointPolicy};
use netmanifold::SignatureMethod;
use netmanifold_cli::{exit_code, run, RunConfig, Stage};

#[derive(Parser)]
#[command(
    name = "netmanifold",
    version,
    about = "Build and analyse manifolds of neural networks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Corpus manifest (JSON).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Network signature: diffusion, distance, knn[:k] or weights[:layer].
    #[arg(long, global = true, default_value = "diffusion")]
    method: SignatureMethod,
    /// Gaussian kernel bandwidth for the activation kernels.
    #[arg(long, global = true, default_value_t = 0.5)]
    sigma: f64,
    /// PHATE neighbourhood size.
    #[arg(long, global = true, default_value_t = 5)]
    knn: usize,
    /// Networks sampled by the recommender.
    #[arg(long, global = true, default_value_t = 30)]
    top_n: usize,
    /// Networks in the top-N tightness score.
    #[arg(long, global = true, default_value_t = 10)]
    tightness_top: usize,
    /// Dendrogram cut.
    #[arg(long, global = true, default_value_t = 10)]
    clusters: usize,
    /// Accuracy bin width.
    #[arg(long, global = true, default_value_t = 0.03)]
    bin_width: f64,
    /// Highest homology dimension (0, 1 or 2).
    #[arg(long, global = true, default_value_t = 2)]
    max_dim: usize,
    /// Largest point cloud accepted by the Rips stage.
    #[arg(long, global = true, default_value_t = netmanifold::tda::DEFAULT_POINT_CAP)]
    point_cap: usize,
    /// Order of the diagram Wasserstein distance.
    #[arg(long, global = true, default_value_t = 2.0)]
    wasserstein_p: f64,
    /// Replace essential diagram points by this death value instead of dropping them.
    #[arg(long, global = true)]
    cap_infinite: Option<f64>,
    /// PHATE diffusion time: `auto` or a positive integer.
    #[arg(long, global = true, default_value = "auto")]
    t: DiffusionTime,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write every network signature under `signatures/`.
    #[arg(long, global = true)]
    save_signatures: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-network signatures.
    Signature,
    /// Network-to-network distance matrix (`manifold.csv`).
    Manifold,
    /// PHATE embedding of `manifold.csv`.
    Embed,
    /// Class structure, Ward dendrograms, ARI, spectral entropy and correlations.
    Structure,
    /// Rips persistence diagrams and Wasserstein heatmaps.
    Tda,
    /// Graph Fourier spectra and smoothness of accuracy and hyperparameters.
    Gft,
    /// Hyperparameter recommendation from the most accurate networks.
    Recommend,
    /// SVG figures and a summary from persisted artifacts.
    Report,
    /// Run several stages in pipeline order (all by default).
    Run {
        /// Comma-separated subset of stages.
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
    },
}

fn build_config(cli: Cli) -> Result<RunConfig, String> {
    let g = cli.global;
    let manifest = g.manifest.ok_or("--manifest is required")?;
    let stages = match cli.command {
        Command::Signature => vec![Stage::Signature],
        Command::Manifold => vec![Stage::Manifold],
        Command::Embed => vec![Stage::Embed],
        Command::Structure => vec![Stage::Structure],
        Command::Tda => vec![Stage::Tda],
        Command::Gft => vec![Stage::Gft],
        Command::Recommend => vec![Stage::Recommend],
        Command::Report => vec![Stage::Report],
        Command::Run { stages } => stages.unwrap_or_else(|| Stage::ALL.to_vec()),
    };
    let mut config = RunConfig::new(manifest, g.out);
    config.method = g.method;
    config.sigma = g.sigma;
    config.phate.knn = g.knn;
    config.phate.t = g.t;
    config.phate.seed = g.seed;
    config.top_n = g.top_n;
    config.tightness_top = g.tightness_top;
    config.clusters = g.clusters;
    config.bin_width = g.bin_width;
    config.max_dim = g.max_dim;
    config.point_cap = g.point_cap;
    config.diagram = DiagramDistanceConfig {
        p: g.wasserstein_p,
        infinite_points: g
            .cap_infinite
            .map_or(InfinitePointPolicy::Drop, InfinitePointPolicy::Cap),
    };
    config.save_signatures = g.save_signatures;
    config.stages = stages;
    Ok(config)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("REPR_MANIFOLD_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        format!("REPR_MANIFOLD_THREADS must be a positive integer, got `{value}`")
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match configure_threads().and_then(|()| build_config(cli)) {
        Ok(c) => c,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    };
    match run(&config) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e.error) as u8)
        }
    }
}
