use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use robust_opo::cover::{build_cover, certify_radius, write_certificate, WeightSetSpec};
use robust_opo::data::{load_dataset, load_dataset_with_actions, save_dataset};
use robust_opo::egopo::{run_egopo, EgopoConfig};
use robust_opo::harness::{run_experiment, score_dataset, write_experiment_outputs, ExperimentConfig};
use robust_opo::metrics::skewness_report;
use robust_opo::nuisance::NuisanceConfig;
use robust_opo::simulator::{allocate_sizes, generate_sources, sample_params, to_dataset};
use robust_opo::Error;

#[derive(Parser)]
#[command(name = "robust-opo", version, about = "Distributionally robust offline policy optimization over mixtures of sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic multi-source dataset.
    Simulate(Io),
    /// Cross-fit nuisances and write AIPW scores.
    Score(Io),
    /// Run EG-OPO on a dataset.
    Solve {
        #[command(flatten)]
        io: Io,
        /// Also write the score matrix.
        #[arg(long)]
        export_scores: bool,
    },
    /// Regret-versus-sample-size experiment.
    Experiment(Io),
    /// Build a cover of the weight set and certify its radius.
    CoverCheck(Io),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateConfig {
    num_sources: usize,
    action_count: usize,
    block_size: usize,
    sigma_theta_sq: f64,
    sigma_sq: f64,
    n_total: usize,
    seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            num_sources: 3,
            action_count: 2,
            block_size: 4,
            sigma_theta_sq: 5.0,
            sigma_sq: 1.0,
            n_total: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreConfig {
    dataset: PathBuf,
    #[serde(default)]
    action_count: Option<usize>,
    #[serde(default)]
    nuisance: NuisanceConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    dataset: PathBuf,
    #[serde(default)]
    action_count: Option<usize>,
    #[serde(default)]
    nuisance: NuisanceConfig,
    #[serde(default)]
    weight_set: Option<WeightSetSpec>,
    #[serde(default)]
    egopo: EgopoConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverCheckConfig {
    weight_set: WeightSetSpec,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    seed: u64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_samples() -> usize {
    10_000
}

enum Failure {
    Config(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other),
        }
    }
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(e.into()))
}

fn load(path: &Path, action_count: Option<usize>) -> Result<robust_opo::ObservationalDataset, Failure> {
    Ok(match action_count {
        Some(d) => load_dataset_with_actions(path, d)?,
        None => load_dataset(path)?,
    })
}

fn simulate(io: &Io) -> Result<(), Failure> {
    let cfg: SimulateConfig = read_config(&io.config)?;
    if !(cfg.sigma_sq >= 0.0) {
        return Err(Failure::Config("sigma_sq must be non-negative".into()));
    }
    let mut params = sample_params(cfg.num_sources, cfg.block_size, cfg.action_count, cfg.sigma_theta_sq, cfg.seed)
        .map_err(|e| Failure::Config(e.to_string()))?;
    for p in &mut params {
        p.sigma_sq = cfg.sigma_sq;
    }
    let sizes = allocate_sizes(cfg.n_total, cfg.num_sources).map_err(|e| Failure::Config(e.to_string()))?;
    let sims = generate_sources(&params, &sizes, cfg.seed)?;
    create_out(&io.out)?;
    save_dataset(&to_dataset(&sims)?, io.out.join("dataset.csv"))?;
    let js = serde_json::json!({ "config": cfg, "sources": params });
    std::fs::write(io.out.join("params.json"), serde_json::to_string_pretty(&js).map_err(Error::from)?)
        .map_err(|e| Failure::Runtime(e.into()))?;
    Ok(())
}

fn score(io: &Io) -> Result<(), Failure> {
    let cfg: ScoreConfig = read_config(&io.config)?;
    cfg.nuisance.validate()?;
    let ds = load(&cfg.dataset, cfg.action_count)?;
    let scores = score_dataset(&ds, &cfg.nuisance, 0)?;
    create_out(&io.out)?;
    scores.write_csv(io.out.join("scores.csv"))?;
    Ok(())
}

fn solve(io: &Io, export_scores: bool) -> Result<(), Failure> {
    let cfg: SolveConfig = read_config(&io.config)?;
    cfg.nuisance.validate()?;
    cfg.egopo.validate()?;
    let ds = load(&cfg.dataset, cfg.action_count)?;
    let spec = cfg
        .weight_set
        .unwrap_or_else(|| WeightSetSpec::full_simplex(ds.num_sources()));
    spec.validate()?;
    if spec.num_sources != ds.num_sources() {
        return Err(Failure::Config(format!(
            "weight set has {} sources, dataset has {}",
            spec.num_sources,
            ds.num_sources()
        )));
    }
    let scores = score_dataset(&ds, &cfg.nuisance, 0)?;
    let cover = build_cover(&spec, cfg.egopo.epsilon)?;
    let result = run_egopo(&scores, &cover, &cfg.egopo)?;
    create_out(&io.out)?;
    result.write_json(io.out.join("result.json"))?;
    result.write_traces(io.out.join("traces.csv"))?;
    std::fs::write(io.out.join("policy.json"), result.policy.to_json()?).map_err(|e| Failure::Runtime(e.into()))?;
    let report = skewness_report(&cover.points, &ds.sample_distribution())?;
    std::fs::write(
        io.out.join("skewness.json"),
        serde_json::to_string_pretty(&report).map_err(Error::from)?,
    )
    .map_err(|e| Failure::Runtime(e.into()))?;
    if export_scores {
        scores.write_csv(io.out.join("scores.csv"))?;
    }
    Ok(())
}

fn experiment(io: &Io) -> Result<(), Failure> {
    let cfg: ExperimentConfig = read_config(&io.config)?;
    cfg.validate()?;
    let curve = run_experiment(&cfg)?;
    write_experiment_outputs(&cfg, &curve, &io.out)?;
    let failed = curve.failures().count();
    if failed > 0 {
        eprintln!("{failed} experiment cells failed; see regret.csv");
    }
    Ok(())
}

fn cover_check(io: &Io) -> Result<(), Failure> {
    let cfg: CoverCheckConfig = read_config(&io.config)?;
    cfg.weight_set.validate()?;
    let mut cover = build_cover(&cfg.weight_set, cfg.epsilon).map_err(|e| Failure::Config(e.to_string()))?;
    let radius = certify_radius(&mut cover, &cfg.weight_set, cfg.samples, cfg.seed);
    create_out(&io.out)?;
    cover.write_csv(io.out.join("cover.csv"))?;
    let f = std::fs::File::create(io.out.join("certificate.json")).map_err(|e| Failure::Runtime(e.into()))?;
    write_certificate(&cover, f)?;
    println!("cover size {}, certified radius {radius:.6} (epsilon {})", cover.len(), cfg.epsilon);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(io) => simulate(io),
        Command::Score(io) => score(io),
        Command::Solve { io, export_scores } => solve(io, *export_scores),
        Command::Experiment(io) => experiment(io),
        Command::CoverCheck(io) => cover_check(io),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
