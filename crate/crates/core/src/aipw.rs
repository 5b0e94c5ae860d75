//! Doubly robust (AIPW) score matrices.
//!
//! For point `i` of source `s` in fold `k(i)` and every action `a`:
//!
//! ```text
//! Γ̂_i(a) = μ̂^{-k(i)}(X_i; a) + (Y_i − μ̂^{-k(i)}(X_i; a)) · ŵ^{-k(i)}(X_i; a) · 1{A_i = a}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ObservationalDataset, SourceData};
use crate::error::{Error, Result};
use crate::nuisance::{FoldAssignment, NuisanceFits, NuisanceMode};
use crate::par;
use crate::simulator::SimulatedSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreProvenance {
    /// Built from the true nuisances (simulator only).
    Oracle,
    CrossFitted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceScores {
    pub source_id: String,
    /// Row-major `n_s × p`, copied from the dataset.
    pub contexts: Vec<f64>,
    /// Row-major `n_s × d`.
    pub scores: Vec<f64>,
}

/// Per-source AIPW scores plus the contexts they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    sources: Vec<SourceScores>,
    sizes: Vec<usize>,
    context_dim: usize,
    action_count: usize,
    provenance: ScoreProvenance,
    gamma_max: f64,
}

impl ScoreMatrix {
    pub fn new(
        sources: Vec<SourceScores>,
        context_dim: usize,
        action_count: usize,
        provenance: ScoreProvenance,
    ) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::invalid("score matrix has no sources"));
        }
        let mut sizes = Vec::with_capacity(sources.len());
        let mut gamma_max: f64 = 0.0;
        for src in &sources {
            let n = src.contexts.len() / context_dim.max(1);
            if n == 0 || src.contexts.len() != n * context_dim || src.scores.len() != n * action_count {
                return Err(Error::invalid(format!(
                    "source `{}`: inconsistent score/context shapes",
                    src.source_id
                )));
            }
            if let Some(k) = src.scores.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFinite {
                    source_id: src.source_id.clone(),
                    row: k / action_count,
                    action: k % action_count,
                });
            }
            gamma_max = src.scores.iter().fold(gamma_max, |m, g| m.max(g.abs()));
            sizes.push(n);
        }
        Ok(Self {
            sources,
            sizes,
            context_dim,
            action_count,
            provenance,
            gamma_max,
        })
    }

    pub fn sources(&self) -> &[SourceScores] {
        &self.sources
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn source_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total_len(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn provenance(&self) -> ScoreProvenance {
        self.provenance
    }

    /// Largest absolute score.
    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    #[inline]
    pub fn row(&self, s: usize, i: usize) -> &[f64] {
        let d = self.action_count;
        &self.sources[s].scores[i * d..(i + 1) * d]
    }

    #[inline]
    pub fn context(&self, s: usize, i: usize) -> &[f64] {
        let p = self.context_dim;
        &self.sources[s].contexts[i * p..(i + 1) * p]
    }

    /// `source,i,gamma_0,...,gamma_{d-1}`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["source".to_string(), "i".to_string()];
        header.extend((0..self.action_count).map(|a| format!("gamma_{a}")));
        w.write_record(&header)?;
        for (s, src) in self.sources.iter().enumerate() {
            for i in 0..self.sizes[s] {
                let mut rec = vec![src.source_id.clone(), i.to_string()];
                rec.extend(self.row(s, i).iter().map(|g| g.to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[inline]
fn aipw_row(mu: &[f64], w: &[f64], action: usize, reward: f64, out: &mut [f64]) {
    for a in 0..mu.len() {
        out[a] = if a == action {
            mu[a] + (reward - mu[a]) * w[a]
        } else {
            mu[a]
        };
    }
}

fn score_source(
    src: &SourceData,
    fits: &NuisanceFits,
    s: usize,
    folds: &FoldAssignment,
) -> Result<SourceScores> {
    let d = fits.action_count;
    let models = &fits.sources[s].folds;
    let mut scores = vec![0.0; src.len() * d];
    for i in 0..src.len() {
        let k = folds.fold_of[i];
        let fold = models.get(k).ok_or_else(|| {
            Error::invalid(format!("no fitted fold {k} for source `{}`", src.source_id))
        })?;
        let x = src.context(i);
        let mu = fold.mu.predict(x);
        let mut w = fold.w.predict(x);
        if fits.mode == NuisanceMode::KnownPropensity {
            if let Some(logged) = &src.logged_propensities {
                w[src.actions[i]] = 1.0 / logged[i];
            }
        }
        for a in 0..d {
            if !mu[a].is_finite() || !w[a].is_finite() {
                return Err(Error::NonFinite {
                    source_id: src.source_id.clone(),
                    row: i,
                    action: a,
                });
            }
        }
        aipw_row(&mu, &w, src.actions[i], src.rewards[i], &mut scores[i * d..(i + 1) * d]);
    }
    Ok(SourceScores {
        source_id: src.source_id.clone(),
        contexts: src.contexts().to_vec(),
        scores,
    })
}

/// Cross-fitted scores: point `i` uses the models that excluded its fold.
/// In known-propensity mode the observed action is weighted by the inverse
/// of the row's own logged propensity.
pub fn compute_aipw_scores(
    dataset: &ObservationalDataset,
    fits: &NuisanceFits,
    folds: &[FoldAssignment],
) -> Result<ScoreMatrix> {
    if fits.sources.len() != dataset.num_sources() || folds.len() != dataset.num_sources() {
        return Err(Error::invalid("fits and folds must cover every source"));
    }
    for ((src, f), fa) in dataset.sources.iter().zip(&fits.sources).zip(folds) {
        if src.source_id != f.source_id || fa.fold_of.len() != src.len() {
            return Err(Error::invalid(format!(
                "fits/folds do not match source `{}`",
                src.source_id
            )));
        }
    }
    let indices: Vec<usize> = (0..dataset.num_sources()).collect();
    let sources = par::map_slice(&indices, |&s| score_source(&dataset.sources[s], fits, s, &folds[s]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::new(
        sources,
        dataset.context_dim(),
        dataset.action_count(),
        ScoreProvenance::CrossFitted,
    )
}

/// Scores built from the simulator's true means and true inverse propensities.
pub fn compute_oracle_scores(sources: &[SimulatedSource]) -> Result<ScoreMatrix> {
    let first = sources.first().ok_or_else(|| Error::invalid("no sources"))?;
    let d = first.action_count();
    let p = first.observable.context_dim();
    let out = sources
        .iter()
        .map(|sim| {
            let src = &sim.observable;
            if sim.true_mu.len() != src.len() * d || sim.potential_outcomes.len() != src.len() * d {
                return Err(Error::invalid("potential-outcome table has the wrong shape"));
            }
            let logged = src
                .logged_propensities
                .as_ref()
                .ok_or_else(|| Error::invalid("simulated source lacks true propensities"))?;
            let mut scores = vec![0.0; src.len() * d];
            let mut w = vec![0.0; d];
            for i in 0..src.len() {
                w[src.actions[i]] = 1.0 / logged[i];
                aipw_row(
                    &sim.true_mu[i * d..(i + 1) * d],
                    &w,
                    src.actions[i],
                    src.rewards[i],
                    &mut scores[i * d..(i + 1) * d],
                );
            }
            Ok(SourceScores {
                source_id: src.source_id.clone(),
                contexts: src.contexts().to_vec(),
                scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::new(out, p, d, ScoreProvenance::Oracle)
}

/// Scores from explicit per-row nuisance values; used for hand-built cases.
pub fn scores_from_nuisances(
    src: &SourceData,
    mu: &[f64],
    w: &[f64],
    action_count: usize,
) -> Result<ScoreMatrix> {
    let d = action_count;
    if mu.len() != src.len() * d || w.len() != src.len() * d {
        return Err(Error::invalid("nuisance tables must be n_s × d"));
    }
    let mut scores = vec![0.0; src.len() * d];
    for i in 0..src.len() {
        aipw_row(
            &mu[i * d..(i + 1) * d],
            &w[i * d..(i + 1) * d],
            src.actions[i],
            src.rewards[i],
            &mut scores[i * d..(i + 1) * d],
        );
    }
    ScoreMatrix::new(
        vec![SourceScores {
            source_id: src.source_id.clone(),
            contexts: src.contexts().to_vec(),
            scores,
        }],
        src.context_dim(),
        d,
        ScoreProvenance::CrossFitted,
    )
}
