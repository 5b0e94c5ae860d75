//! End-to-end synthetic experiments: simulate, score, train EG-OPO and the
//! two baselines, and measure true regret against reference policies.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aipw::{compute_aipw_scores, compute_oracle_scores, ScoreMatrix};
use crate::cover::{build_cover, WeightSetSpec};
use crate::data::{MixtureWeights, ObservationalDataset, TreePolicy};
use crate::egopo::{run_egopo, EgopoConfig, PooledScores};
use crate::error::{Error, Result};
use crate::metrics::true_regrets;
use crate::nuisance::{assign_dataset_folds, fit_nuisance, NuisanceConfig, NuisanceMode};
use crate::oracle::solve_opo;
use crate::simulator::{
    allocate_sizes, generate_mixture, generate_source, generate_sources, sample_params, source_name,
    to_dataset, SourceGenParams,
};
use crate::{par, plot, rng};

pub const EGOPO: &str = "egopo";
pub const AGGREGATE: &str = "aggregate";
pub const SOURCE: &str = "source";
pub const FAILURE: &str = "failure";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub weights: MixtureWeights,
}

/// How many samples the single-source baseline trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceBaselineSize {
    /// `n` samples, the full training budget.
    Total,
    /// `n_1`, source 1's share of the budget.
    PerSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub num_sources: usize,
    pub action_count: usize,
    /// Context block size `q`; contexts have dimension `action_count · q`.
    pub block_size: usize,
    pub sigma_theta_sq: f64,
    pub sigma_sq: f64,
    pub seeds: Vec<u64>,
    pub sample_sizes: Vec<usize>,
    pub targets: Vec<Target>,
    /// Valid mixture weights; the full simplex when absent.
    pub weight_set: Option<WeightSetSpec>,
    pub egopo: EgopoConfig,
    pub nuisance: NuisanceConfig,
    pub reference_training_n: usize,
    pub mc_samples: usize,
    pub source_baseline: SourceBaselineSize,
    pub plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let k = 3;
        Self {
            num_sources: k,
            action_count: 2,
            block_size: 4,
            sigma_theta_sq: 5.0,
            sigma_sq: 1.0,
            seeds: vec![1, 2, 3],
            sample_sizes: (1..=10).map(|i| 50 * i).collect(),
            targets: vec![
                Target {
                    name: "e1".into(),
                    weights: MixtureWeights::vertex(0, k),
                },
                Target {
                    name: "mixture".into(),
                    weights: MixtureWeights::new(vec![0.9, 0.05, 0.05]).expect("valid"),
                },
            ],
            weight_set: None,
            egopo: EgopoConfig::default(),
            nuisance: NuisanceConfig {
                mode: NuisanceMode::KnownPropensity,
                ..NuisanceConfig::default()
            },
            reference_training_n: 2000,
            mc_samples: 50_000,
            source_baseline: SourceBaselineSize::Total,
            plots: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sample_sizes.is_empty() {
            return bad("sample-size grid is empty".into());
        }
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if self.targets.is_empty() {
            return bad("no evaluation targets".into());
        }
        if self.num_sources == 0 || self.action_count < 2 || self.block_size == 0 {
            return bad("need num_sources >= 1, action_count >= 2, block_size >= 1".into());
        }
        if let Some(t) = self.targets.iter().find(|t| t.weights.len() != self.num_sources) {
            return bad(format!("target `{}` has {} weights, expected {}", t.name, t.weights.len(), self.num_sources));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < self.num_sources * self.nuisance.folds) {
            return bad(format!("sample size {n} is too small for {} sources × {} folds", self.num_sources, self.nuisance.folds));
        }
        if self.mc_samples < 1000 {
            return bad("mc_samples must be at least 1000".into());
        }
        if self.reference_training_n == 0 {
            return bad("reference_training_n must be positive".into());
        }
        if let Some(ws) = &self.weight_set {
            ws.validate()?;
            if ws.num_sources != self.num_sources {
                return bad("weight set dimension differs from num_sources".into());
            }
        }
        self.egopo.validate()?;
        self.nuisance.validate()
    }

    pub fn weight_set(&self) -> WeightSetSpec {
        self.weight_set
            .clone()
            .unwrap_or_else(|| WeightSetSpec::full_simplex(self.num_sources))
    }

    fn params(&self, seed: u64) -> Result<Vec<SourceGenParams>> {
        let mut params = sample_params(
            self.num_sources,
            self.block_size,
            self.action_count,
            self.sigma_theta_sq,
            seed,
        )?;
        for p in &mut params {
            p.sigma_sq = self.sigma_sq;
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub n: usize,
    pub seed: u64,
    pub policy: String,
    pub target: String,
    pub regret: f64,
    pub se: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretCurve {
    pub rows: Vec<RegretRow>,
}

impl RegretCurve {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "seed", "policy", "target", "regret", "se", "error"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.seed.to_string(),
                r.policy.clone(),
                r.target.clone(),
                r.regret.to_string(),
                r.se.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean regret of `policy` on `target` over all successful rows at `n`.
    pub fn mean_regret(&self, n: usize, policy: &str, target: &str) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.n == n && r.policy == policy && r.target == target && r.error.is_none())
            .map(|r| r.regret)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RegretRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub aggregate: TreePolicy,
    pub source: TreePolicy,
}

/// Pooled-data policy (uniform weight `1/n` per example) and the policy
/// trained on source-only data, one oracle call each.
pub fn train_baselines(scores: &ScoreMatrix, source_scores: &ScoreMatrix, depth: usize) -> Result<Baselines> {
    let pooled_weights = |m: &ScoreMatrix| -> Vec<f64> {
        let n = m.total_len() as f64;
        m.source_sizes().iter().map(|&s| s as f64 / n).collect()
    };
    let aggregate = solve_opo(&PooledScores::new(scores).examples(&pooled_weights(scores))?, depth)?.policy;
    let source = solve_opo(
        &PooledScores::new(source_scores).examples(&pooled_weights(source_scores))?,
        depth,
    )?
    .policy;
    Ok(Baselines { aggregate, source })
}

/// Cross-fitted scores of a dataset under `config`.
pub fn score_dataset(dataset: &ObservationalDataset, config: &NuisanceConfig, seed: u64) -> Result<ScoreMatrix> {
    let folds = assign_dataset_folds(dataset, config.folds, config.seed ^ seed)?;
    let fits = fit_nuisance(dataset, &folds, config)?;
    compute_aipw_scores(dataset, &fits, &folds)
}

/// Reference policy for a target: trained by the oracle on oracle scores of
/// `n` draws from the target mixture.
pub fn train_reference(
    params: &[SourceGenParams],
    target: &MixtureWeights,
    n: usize,
    depth: usize,
    seed: u64,
) -> Result<TreePolicy> {
    let sample = generate_mixture(params, target, n, seed)?;
    let scores = compute_oracle_scores(std::slice::from_ref(&sample))?;
    Ok(solve_opo(&PooledScores::new(&scores).examples(&[1.0])?, depth)?.policy)
}

/// Policies trained in one `(n, seed)` cell.
#[derive(Debug, Clone)]
pub struct CellPolicies {
    pub egopo: TreePolicy,
    pub baselines: Baselines,
}

pub fn train_cell(config: &ExperimentConfig, params: &[SourceGenParams], n: usize, seed: u64) -> Result<CellPolicies> {
    let cell_seed = rng::sub_seed(seed, n as u64, 0x63656c6c);
    let sizes = allocate_sizes(n, config.num_sources)?;
    let sims = generate_sources(params, &sizes, cell_seed)?;
    let dataset = to_dataset(&sims)?;
    let scores = score_dataset(&dataset, &config.nuisance, cell_seed)?;

    let cover = build_cover(&config.weight_set(), config.egopo.epsilon)?;
    let result = run_egopo(&scores, &cover, &config.egopo)?;

    let source_n = match config.source_baseline {
        SourceBaselineSize::Total => n,
        SourceBaselineSize::PerSource => sizes[0],
    };
    let source_seed = rng::sub_seed(cell_seed, 0, 0x73726331);
    let source_sim = generate_source(&params[0], &source_name(0), source_n, source_seed)?;
    let source_ds = to_dataset(std::slice::from_ref(&source_sim))?;
    let source_scores = score_dataset(&source_ds, &config.nuisance, source_seed)?;
    let baselines = train_baselines(&scores, &source_scores, config.egopo.depth)?;
    Ok(CellPolicies {
        egopo: result.policy,
        baselines,
    })
}

fn failure_row(n: usize, seed: u64, target: &str, err: &Error) -> RegretRow {
    RegretRow {
        n,
        seed,
        policy: FAILURE.into(),
        target: target.into(),
        regret: f64::NAN,
        se: f64::NAN,
        error: Some(err.to_string()),
    }
}

fn run_cell(
    config: &ExperimentConfig,
    params: &[SourceGenParams],
    references: &[TreePolicy],
    n: usize,
    seed: u64,
) -> Vec<RegretRow> {
    let evaluate = || -> Result<Vec<RegretRow>> {
        let cell = train_cell(config, params, n, seed)?;
        let policies = [&cell.egopo, &cell.baselines.aggregate, &cell.baselines.source];
        let names = [EGOPO, AGGREGATE, SOURCE];
        let mut rows = Vec::new();
        for (t, (target, reference)) in config.targets.iter().zip(references).enumerate() {
            let mc_seed = rng::sub_seed(seed, t as u64, rng::tag::CHUNK);
            let est = true_regrets(&policies, reference, params, &target.weights, config.mc_samples, mc_seed)?;
            for (name, e) in names.iter().zip(est) {
                rows.push(RegretRow {
                    n,
                    seed,
                    policy: (*name).into(),
                    target: target.name.clone(),
                    regret: e.mean,
                    se: e.se,
                    error: None,
                });
            }
        }
        Ok(rows)
    };
    match evaluate() {
        Ok(rows) => rows,
        Err(e) => config
            .targets
            .iter()
            .map(|t| failure_row(n, seed, &t.name, &e))
            .collect(),
    }
}

/// Runs every `(n, seed)` cell. A failing cell contributes one failure row
/// per target and the run continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RegretCurve> {
    config.validate()?;
    // per seed: DGP parameters and one reference policy per target
    let per_seed: Vec<Result<(Vec<SourceGenParams>, Vec<TreePolicy>)>> = par::map_slice(&config.seeds, |&seed| {
        let params = config.params(seed)?;
        let refs = config
            .targets
            .iter()
            .enumerate()
            .map(|(t, target)| {
                train_reference(
                    &params,
                    &target.weights,
                    config.reference_training_n,
                    config.egopo.depth,
                    rng::sub_seed(seed, t as u64, 0x72656673),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((params, refs))
    });
    let mut setups = Vec::with_capacity(per_seed.len());
    for s in per_seed {
        setups.push(s?);
    }
    let cells: Vec<(usize, usize)> = config
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..config.seeds.len()).map(move |k| (n, k)))
        .collect();
    let rows = par::map_slice(&cells, |&(n, k)| {
        let (params, refs) = &setups[k];
        run_cell(config, params, refs, n, config.seeds[k])
    });
    Ok(RegretCurve {
        rows: rows.into_iter().flatten().collect(),
    })
}

/// `regret.csv`, `config.json` and (optionally) one SVG per target.
pub fn write_experiment_outputs(config: &ExperimentConfig, curve: &RegretCurve, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    curve.write_csv(out_dir.join("regret.csv"))?;
    let mut f = std::fs::File::create(out_dir.join("config.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(config)?)?;
    if config.plots {
        for target in &config.targets {
            let svg = plot::regret_svg(curve, &target.name, &[EGOPO, AGGREGATE, SOURCE], 3);
            std::fs::write(out_dir.join(format!("regret_{}.svg", target.name)), svg)?;
        }
    }
    Ok(())
}
