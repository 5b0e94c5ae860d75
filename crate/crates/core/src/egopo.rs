//! Exponentiated-gradient minimax solver over a finite cover of mixture weights.
//!
//! The adversary keeps a distribution `ρ` over cover points `λ`. Each round
//! the learner best-responds with one oracle call on the pooled data weighted
//! by `E_{λ~ρ}[λ_s] / n_s`, and the adversary moves toward the weights with
//! the largest empirical regret:
//!
//! ```text
//! g_λ = M_λ − Q̂_λ(π_t),     ρ_λ ← ρ_λ · exp(η g_λ) / Z,     η = √(log|Λ| / (B̂² T))
//! ```
//!
//! where `M_λ = max_π Q̂_λ(π)` does not depend on the round and is computed
//! once per cover point.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aipw::ScoreMatrix;
use crate::cover::CoverSet;
use crate::data::{MixtureWeights, TreePolicy};
use crate::error::{Error, Result};
use crate::metrics;
use crate::oracle::{solve_opo, WeightedExamples};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BHatMode {
    /// `2 · max |Γ̂|`.
    Auto,
    Explicit(f64),
    /// `max_λ (max_π Q̂_λ − min_π Q̂_λ)`, two oracle calls per cover point.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterateMode {
    Last,
    UniformAverage,
    BestWorstCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgopoConfig {
    /// Explicit horizon `T`; `None` derives it from the sample size and skewness.
    pub iterations: Option<usize>,
    /// Cap on the derived horizon.
    pub max_iterations: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub depth: usize,
    pub b_hat: BHatMode,
    pub iterate_mode: IterateMode,
}

impl Default for EgopoConfig {
    fn default() -> Self {
        Self {
            iterations: None,
            max_iterations: 1000,
            alpha: 0.05,
            epsilon: 0.1,
            depth: 2,
            b_hat: BHatMode::Auto,
            iterate_mode: IterateMode::Last,
        }
    }
}

impl EgopoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == Some(0) || self.max_iterations == 0 {
            return Err(Error::Config("iteration count must be at least 1".into()));
        }
        if let BHatMode::Explicit(b) = self.b_hat {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("explicit B̂ must be positive, got {b}")));
            }
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.depth > 3 {
            return Err(Error::Config(format!("depth {} is above the supported maximum 3", self.depth)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgopoResult {
    pub policy: TreePolicy,
    /// `π_1, …, π_T`.
    pub iterates: Vec<TreePolicy>,
    /// Row `t` is `ρ_t` over the cover.
    pub rho_trace: Vec<Vec<f64>>,
    /// Row `t` is `g_t` over the cover.
    pub gradient_trace: Vec<Vec<f64>>,
    pub per_lambda_max: Vec<f64>,
    pub eta: f64,
    pub b_hat: f64,
    pub iterate_mode: IterateMode,
}

impl EgopoResult {
    pub fn iterations(&self) -> usize {
        self.iterates.len()
    }

    /// `E_{π~P_T} R̂_λ(π)` for cover point `index`, with `P_T` uniform over iterates.
    pub fn average_regret(&self, index: usize) -> f64 {
        self.gradient_trace.iter().map(|g| g[index]).sum::<f64>() / self.gradient_trace.len() as f64
    }

    /// Largest cover-point regret of iterate `t`.
    pub fn worst_case_regret(&self, t: usize) -> f64 {
        self.gradient_trace[t].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let js = serde_json::json!({
            "policy": self.policy,
            "eta": self.eta,
            "b_hat": self.b_hat,
            "per_lambda_max": self.per_lambda_max,
            "iterations": self.iterations(),
            "iterate_mode": self.iterate_mode,
        });
        std::fs::write(path, serde_json::to_string_pretty(&js)?)?;
        Ok(())
    }

    /// `t,lambda_index,rho,gradient`, with `t` starting at 1.
    pub fn write_traces(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,lambda_index,rho,gradient")?;
        for (t, (rho, g)) in self.rho_trace.iter().zip(&self.gradient_trace).enumerate() {
            for (l, (r, g)) in rho.iter().zip(g).enumerate() {
                writeln!(w, "{},{l},{r},{g}", t + 1)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Pooled contexts and score rows of all sources, in source order.
#[derive(Debug, Clone)]
pub struct PooledScores {
    contexts: Vec<f64>,
    scores: Vec<f64>,
    source_of: Vec<usize>,
    sizes: Vec<usize>,
    p: usize,
    d: usize,
}

impl PooledScores {
    pub fn new(scores: &ScoreMatrix) -> Self {
        let mut contexts = Vec::new();
        let mut rows = Vec::new();
        let mut source_of = Vec::new();
        for (s, src) in scores.sources().iter().enumerate() {
            contexts.extend_from_slice(&src.contexts);
            rows.extend_from_slice(&src.scores);
            source_of.extend(std::iter::repeat_n(s, scores.source_sizes()[s]));
        }
        Self {
            contexts,
            scores: rows,
            source_of,
            sizes: scores.source_sizes().to_vec(),
            p: scores.context_dim(),
            d: scores.action_count(),
        }
    }

    /// Per-example weights `mix_s / n_s`.
    pub fn weights_for(&self, mix: &[f64]) -> Vec<f64> {
        self.source_of
            .iter()
            .map(|&s| mix[s] / self.sizes[s] as f64)
            .collect()
    }

    pub fn examples(&self, mix: &[f64]) -> Result<WeightedExamples> {
        WeightedExamples::new(
            self.contexts.clone(),
            self.p,
            self.scores.clone(),
            self.d,
            self.weights_for(mix),
        )
    }

    /// Score of the action each example receives under `policy`.
    pub fn chosen_scores(&self, policy: &TreePolicy) -> Vec<f64> {
        self.contexts
            .chunks_exact(self.p)
            .enumerate()
            .map(|(i, x)| self.scores[i * self.d + policy.act(x)])
            .collect()
    }

    /// `Σ_i (λ_s / n_s) · chosen_i`, summed in example order.
    pub fn mixture_value(&self, lambda: &[f64], chosen: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, &c) in chosen.iter().enumerate() {
            let s = self.source_of[i];
            total += (lambda[s] / self.sizes[s] as f64) * c;
        }
        total
    }
}

fn check_lambda(scores: &ScoreMatrix, lambda: &MixtureWeights) -> Result<()> {
    if lambda.len() != scores.num_sources() {
        return Err(Error::DimensionMismatch {
            expected: scores.num_sources(),
            actual: lambda.len(),
        });
    }
    Ok(())
}

fn check_cover(scores: &ScoreMatrix, cover: &CoverSet) -> Result<()> {
    if cover.is_empty() {
        return Err(Error::invalid("cover is empty"));
    }
    if cover.num_sources() != scores.num_sources() {
        return Err(Error::DimensionMismatch {
            expected: scores.num_sources(),
            actual: cover.num_sources(),
        });
    }
    Ok(())
}

/// `Q̂_λ(π) = Σ_s (λ_s / n_s) Σ_i Γ̂_i^s(π(X_i^s))`.
pub fn empirical_mixture_value(scores: &ScoreMatrix, lambda: &MixtureWeights, policy: &TreePolicy) -> Result<f64> {
    check_lambda(scores, lambda)?;
    let pooled = PooledScores::new(scores);
    Ok(pooled.mixture_value(lambda.as_slice(), &pooled.chosen_scores(policy)))
}

/// `R̂_λ(π) = M_λ − Q̂_λ(π)`.
pub fn empirical_mixture_regret(
    scores: &ScoreMatrix,
    lambda: &MixtureWeights,
    policy: &TreePolicy,
    per_lambda_max: f64,
) -> Result<f64> {
    Ok(per_lambda_max - empirical_mixture_value(scores, lambda, policy)?)
}

/// Best policy for a single mixture `λ`.
pub fn solve_for_lambda(scores: &ScoreMatrix, lambda: &MixtureWeights, depth: usize) -> Result<crate::OracleSolution> {
    check_lambda(scores, lambda)?;
    solve_opo(&PooledScores::new(scores).examples(lambda.as_slice())?, depth)
}

fn per_lambda_max_pooled(pooled: &PooledScores, cover: &CoverSet, depth: usize) -> Result<Vec<f64>> {
    par::map_slice(&cover.points, |lambda| {
        Ok(solve_opo(&pooled.examples(lambda.as_slice())?, depth)?.objective)
    })
    .into_iter()
    .collect()
}

/// `M_λ = max_π Q̂_λ(π)` for every cover point, one oracle call each.
pub fn per_lambda_max_values(scores: &ScoreMatrix, cover: &CoverSet, depth: usize) -> Result<Vec<f64>> {
    check_cover(scores, cover)?;
    per_lambda_max_pooled(&PooledScores::new(scores), cover, depth)
}

/// `E_{λ~ρ}[λ_s]` per source.
pub fn collapse_weights(cover: &CoverSet, rho: &[f64]) -> Vec<f64> {
    let k = cover.num_sources();
    let mut mix = vec![0.0; k];
    for (r, lambda) in rho.iter().zip(&cover.points) {
        for (m, l) in mix.iter_mut().zip(lambda.as_slice()) {
            *m += r * l;
        }
    }
    mix
}

fn check_rho(cover: &CoverSet, rho: &[f64]) -> Result<()> {
    if rho.len() != cover.len() {
        return Err(Error::DimensionMismatch {
            expected: cover.len(),
            actual: rho.len(),
        });
    }
    let sum: f64 = rho.iter().sum();
    if rho.iter().any(|r| !(*r >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("rho is not a probability vector"));
    }
    Ok(())
}

/// `argmax_π E_{λ~ρ} Q̂_λ(π)` with one oracle call on collapsed weights.
pub fn best_response(scores: &ScoreMatrix, cover: &CoverSet, rho: &[f64], depth: usize) -> Result<TreePolicy> {
    check_cover(scores, cover)?;
    check_rho(cover, rho)?;
    let pooled = PooledScores::new(scores);
    Ok(solve_opo(&pooled.examples(&collapse_weights(cover, rho))?, depth)?.policy)
}

/// One exponentiated-gradient step: `ρ'_λ ∝ ρ_λ exp(η g_λ)`.
pub fn eg_update(rho: &[f64], eta: f64, gradient: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = rho.iter().zip(gradient).map(|(r, g)| r.ln() + eta * g).collect();
    softmax(&logs)
}

fn softmax(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ex: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = ex.iter().sum();
    ex.into_iter().map(|e| e / z).collect()
}

/// Horizon `⌈(n / 𝔰(Λ‖n̄))^{1+α}⌉`, capped.
pub fn auto_iterations(scores: &ScoreMatrix, cover: &CoverSet, alpha: f64, cap: usize) -> Result<usize> {
    let n = scores.total_len() as f64;
    let n_bar = MixtureWeights::new(scores.source_sizes().iter().map(|&s| s as f64 / n).collect())?;
    let report = metrics::skewness_report(&cover.points, &n_bar)?;
    let t = (n / report.mixture_agnostic).powf(1.0 + alpha).ceil();
    Ok((t as usize).clamp(1, cap))
}

pub fn run_egopo(scores: &ScoreMatrix, cover: &CoverSet, config: &EgopoConfig) -> Result<EgopoResult> {
    config.validate()?;
    check_cover(scores, cover)?;
    let horizon = match config.iterations {
        Some(t) => t,
        None => auto_iterations(scores, cover, config.alpha, config.max_iterations)?,
    };
    let pooled = PooledScores::new(scores);
    let size = cover.len();
    let per_lambda_max = per_lambda_max_pooled(&pooled, cover, config.depth)?;
    let b_hat = match config.b_hat {
        BHatMode::Auto => 2.0 * scores.gamma_max(),
        BHatMode::Explicit(b) => b,
        BHatMode::Oracle => {
            let negated = PooledScores {
                scores: pooled.scores.iter().map(|g| -g).collect(),
                ..pooled.clone()
            };
            let mins = per_lambda_max_pooled(&negated, cover, config.depth)?;
            per_lambda_max
                .iter()
                .zip(&mins)
                .map(|(hi, neg_lo)| hi + neg_lo)
                .fold(0.0, f64::max)
        }
    };
    let eta = if size > 1 && b_hat > 0.0 {
        ((size as f64).ln() / (b_hat * b_hat * horizon as f64)).sqrt()
    } else {
        0.0
    };

    let regrets = |policy: &TreePolicy| -> Vec<f64> {
        let chosen = pooled.chosen_scores(policy);
        cover
            .points
            .iter()
            .zip(&per_lambda_max)
            .map(|(lambda, m)| (m - pooled.mixture_value(lambda.as_slice(), &chosen)).clamp(0.0, b_hat.max(0.0)))
            .collect()
    };

    let mut iterates = Vec::with_capacity(horizon);
    let mut rho_trace = Vec::with_capacity(horizon);
    let mut gradient_trace = Vec::with_capacity(horizon);

    if size == 1 {
        // trivial game: one oracle call, repeated in the traces
        let policy = solve_opo(&pooled.examples(cover.points[0].as_slice())?, config.depth)?.policy;
        let g = regrets(&policy);
        for _ in 0..horizon {
            iterates.push(policy.clone());
            rho_trace.push(vec![1.0]);
            gradient_trace.push(g.clone());
        }
    } else {
        let mut log_rho = vec![0.0; size];
        let mut rho = vec![1.0 / size as f64; size];
        for _ in 0..horizon {
            let mix = collapse_weights(cover, &rho);
            let policy = solve_opo(&pooled.examples(&mix)?, config.depth)?.policy;
            let g = regrets(&policy);
            for (l, gl) in log_rho.iter_mut().zip(&g) {
                *l += eta * gl;
            }
            rho_trace.push(std::mem::replace(&mut rho, softmax(&log_rho)));
            gradient_trace.push(g);
            iterates.push(policy);
        }
    }

    let mut result = EgopoResult {
        policy: iterates[horizon - 1].clone(),
        iterates,
        rho_trace,
        gradient_trace,
        per_lambda_max,
        eta,
        b_hat,
        iterate_mode: config.iterate_mode,
    };
    result.policy = match config.iterate_mode {
        IterateMode::Last => result.policy,
        IterateMode::UniformAverage => modal_iterate(&result.iterates).clone(),
        IterateMode::BestWorstCase => {
            let mut best = 0;
            for t in 1..horizon {
                if result.worst_case_regret(t) < result.worst_case_regret(best) {
                    best = t;
                }
            }
            result.iterates[best].clone()
        }
    };
    Ok(result)
}

/// Most frequent iterate; the earliest one wins ties.
fn modal_iterate(iterates: &[TreePolicy]) -> &TreePolicy {
    let mut best = 0;
    let mut best_count = 0;
    for (t, pi) in iterates.iter().enumerate() {
        if iterates[..t].contains(pi) {
            continue;
        }
        let count = iterates[t..].iter().filter(|q| *q == pi).count();
        if count > best_count {
            best = t;
            best_count = count;
        }
    }
    &iterates[best]
}
