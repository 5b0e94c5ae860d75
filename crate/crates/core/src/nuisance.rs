//! Cross-fitted nuisance models per source: the conditional mean reward
//! `μ_s(x; a)` and the inverse propensity `w_s(x; a) = 1 / e_s(x; a)`.
//!
//! Each source is split into `K` folds; the fold-`k` models are trained only
//! on the other `K − 1` folds. Sources are never pooled.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{ObservationalDataset, SourceData};
use crate::error::{Error, Result};
use crate::{par, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceMode {
    Estimated,
    KnownPropensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    Knn,
    Ridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NuisanceConfig {
    pub mode: NuisanceMode,
    pub folds: usize,
    pub regressor: Regressor,
    pub eta_min: f64,
    pub seed: u64,
    /// Neighbour count override; `None` uses `⌈√m⌉` for `m` training points.
    pub knn_k: Option<usize>,
    pub ridge_penalty: f64,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        Self {
            mode: NuisanceMode::Estimated,
            folds: 5,
            regressor: Regressor::Knn,
            eta_min: 0.01,
            seed: 0,
            knn_k: None,
            ridge_penalty: 1e-3,
        }
    }
}

impl NuisanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("cross-fitting needs at least 2 folds, got {}", self.folds)));
        }
        if !(self.eta_min > 0.0 && self.eta_min <= 1.0) {
            return Err(Error::Config(format!("eta_min {} is outside (0, 1]", self.eta_min)));
        }
        if self.knn_k == Some(0) {
            return Err(Error::Config("knn_k must be positive".into()));
        }
        if !(self.ridge_penalty >= 0.0) {
            return Err(Error::Config("ridge_penalty must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fold index of every point of one source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub source_id: String,
    pub fold_of: Vec<usize>,
    pub folds: usize,
}

impl FoldAssignment {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &k in &self.fold_of {
            sizes[k] += 1;
        }
        sizes
    }
}

/// Shuffled balanced partition of `0..n_s` into `folds` non-empty folds.
pub fn assign_folds(n_s: usize, folds: usize, seed: u64) -> Result<FoldAssignment> {
    if folds == 0 || folds > n_s {
        return Err(Error::invalid(format!(
            "cannot split {n_s} points into {folds} non-empty folds"
        )));
    }
    let mut perm: Vec<usize> = (0..n_s).collect();
    perm.shuffle(&mut rng::seeded(seed));
    let mut fold_of = vec![0; n_s];
    for (pos, &i) in perm.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    Ok(FoldAssignment {
        source_id: String::new(),
        fold_of,
        folds,
    })
}

/// Fold assignments for every source, seeded per source from `seed`.
pub fn assign_dataset_folds(
    dataset: &ObservationalDataset,
    folds: usize,
    seed: u64,
) -> Result<Vec<FoldAssignment>> {
    dataset
        .sources
        .iter()
        .enumerate()
        .map(|(s, src)| {
            let mut fa = assign_folds(src.len(), folds, rng::sub_seed(seed, s as u64, rng::tag::FOLDS))?;
            fa.source_id = src.source_id.clone();
            Ok(fa)
        })
        .collect()
}

/// Regression of reward on context, one model per action.
#[derive(Debug, Clone)]
pub enum OutcomeModel {
    Knn {
        k: usize,
        dim: usize,
        /// Per action: row-major training contexts and rewards.
        train: Vec<(Vec<f64>, Vec<f64>)>,
    },
    /// Per action: intercept followed by `p` slopes.
    Ridge { coef: Vec<Vec<f64>> },
}

impl OutcomeModel {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        match self {
            OutcomeModel::Knn { k, dim, train } => train
                .iter()
                .map(|(xs, ys)| knn_mean(xs, ys, *dim, *k, x))
                .collect(),
            OutcomeModel::Ridge { coef } => coef
                .iter()
                .map(|b| b[0] + b[1..].iter().zip(x).map(|(b, x)| b * x).sum::<f64>())
                .collect(),
        }
    }
}

fn knn_mean(xs: &[f64], ys: &[f64], dim: usize, k: usize, x: &[f64]) -> f64 {
    let mut dist: Vec<(f64, usize)> = xs
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, row)| {
            let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    let k = k.min(dist.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
    }
    let mut nearest: Vec<usize> = dist[..k].iter().map(|&(_, i)| i).collect();
    nearest.sort_unstable();
    nearest.iter().map(|&i| ys[i]).sum::<f64>() / k as f64
}

fn fit_ridge(xs: &[f64], ys: &[f64], dim: usize, penalty: f64) -> Vec<f64> {
    let m = ys.len();
    let design = DMatrix::from_fn(m, dim + 1, |i, j| if j == 0 { 1.0 } else { xs[i * dim + j - 1] });
    let mut gram = design.transpose() * &design;
    for j in 1..=dim {
        gram[(j, j)] += penalty;
    }
    let rhs = design.transpose() * DVector::from_column_slice(ys);
    let sol = gram
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| gram.clone().lu().solve(&rhs))
        .unwrap_or_else(|| {
            // rank-deficient and unpenalized: fall back to the intercept-only fit
            let mut b = DVector::zeros(dim + 1);
            b[0] = ys.iter().sum::<f64>() / m as f64;
            b
        });
    sol.iter().copied().collect()
}

/// Clipped propensity and its inverse.
#[inline]
pub fn clip_propensity(raw: f64, eta_min: f64) -> f64 {
    raw.clamp(eta_min, 1.0)
}

#[inline]
pub fn clipped_inverse(raw: f64, eta_min: f64) -> f64 {
    1.0 / clip_propensity(raw, eta_min)
}

/// Inverse-propensity model; predictions do not depend on the context.
#[derive(Debug, Clone)]
pub struct PropensityModel {
    /// Clipped propensity per action.
    pub propensity: Vec<f64>,
    /// `1 / propensity`, per action.
    pub inverse: Vec<f64>,
}

impl PropensityModel {
    fn from_raw(raw: &[f64], eta_min: f64) -> Self {
        let propensity: Vec<f64> = raw.iter().map(|&e| clip_propensity(e, eta_min)).collect();
        let inverse = propensity.iter().map(|e| 1.0 / e).collect();
        Self { propensity, inverse }
    }

    pub fn predict(&self, _x: &[f64]) -> Vec<f64> {
        self.inverse.clone()
    }
}

#[derive(Debug, Clone)]
pub struct FoldModels {
    pub mu: OutcomeModel,
    pub w: PropensityModel,
}

#[derive(Debug, Clone)]
pub struct SourceFits {
    pub source_id: String,
    pub folds: Vec<FoldModels>,
}

#[derive(Debug, Clone)]
pub struct NuisanceFits {
    pub mode: NuisanceMode,
    pub action_count: usize,
    pub context_dim: usize,
    pub sources: Vec<SourceFits>,
}

/// Train the fold-`fold` models of one source on the points outside `fold`.
pub fn fit_fold(
    src: &SourceData,
    folds: &FoldAssignment,
    fold: usize,
    d: usize,
    config: &NuisanceConfig,
) -> Result<FoldModels> {
    let p = src.context_dim();
    let train: Vec<usize> = (0..src.len()).filter(|&i| folds.fold_of[i] != fold).collect();
    let mut per_action: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); d];
    for &i in &train {
        let a = src.actions[i];
        per_action[a].0.extend_from_slice(src.context(i));
        per_action[a].1.push(src.rewards[i]);
    }
    if let Some(a) = per_action.iter().position(|(_, ys)| ys.is_empty()) {
        return Err(Error::EmptyCell {
            source_id: src.source_id.clone(),
            action: a,
            fold,
        });
    }
    let mu = match config.regressor {
        Regressor::Knn => OutcomeModel::Knn {
            k: config
                .knn_k
                .unwrap_or_else(|| (train.len() as f64).sqrt().ceil() as usize),
            dim: p,
            train: per_action,
        },
        Regressor::Ridge => OutcomeModel::Ridge {
            coef: per_action
                .iter()
                .map(|(xs, ys)| fit_ridge(xs, ys, p, config.ridge_penalty))
                .collect(),
        },
    };
    let w = match config.mode {
        NuisanceMode::Estimated => {
            // Laplace-smoothed action frequencies on the training folds
            let m = train.len() as f64;
            let raw: Vec<f64> = (0..d)
                .map(|a| {
                    let c = train.iter().filter(|&&i| src.actions[i] == a).count() as f64;
                    (c + 1.0) / (m + d as f64)
                })
                .collect();
            PropensityModel::from_raw(&raw, config.eta_min)
        }
        NuisanceMode::KnownPropensity => {
            let logged = src.logged_propensities.as_ref().ok_or_else(|| {
                Error::invalid(format!("source `{}` has no logged propensities", src.source_id))
            })?;
            // logged propensity of each action where it was observed
            let raw: Vec<f64> = (0..d)
                .map(|a| {
                    let (sum, count) = (0..src.len())
                        .filter(|&i| src.actions[i] == a)
                        .fold((0.0, 0usize), |(s, c), i| (s + logged[i], c + 1));
                    if count == 0 {
                        1.0 / d as f64
                    } else {
                        sum / count as f64
                    }
                })
                .collect();
            PropensityModel::from_raw(&raw, f64::MIN_POSITIVE)
        }
    };
    Ok(FoldModels { mu, w })
}

pub fn fit_nuisance(
    dataset: &ObservationalDataset,
    folds: &[FoldAssignment],
    config: &NuisanceConfig,
) -> Result<NuisanceFits> {
    config.validate()?;
    if folds.len() != dataset.num_sources() {
        return Err(Error::DimensionMismatch {
            expected: dataset.num_sources(),
            actual: folds.len(),
        });
    }
    if config.mode == NuisanceMode::KnownPropensity && !dataset.has_propensities() {
        return Err(Error::invalid("known-propensity mode needs logged propensities for every source"));
    }
    for (src, fa) in dataset.sources.iter().zip(folds) {
        if fa.fold_of.len() != src.len() {
            return Err(Error::DimensionMismatch {
                expected: src.len(),
                actual: fa.fold_of.len(),
            });
        }
        if fa.folds < 2 {
            return Err(Error::Config(format!(
                "source `{}` has {} fold(s); cross-fitting needs at least 2",
                src.source_id, fa.folds
            )));
        }
    }
    let d = dataset.action_count();
    let cells: Vec<(usize, usize)> = folds
        .iter()
        .enumerate()
        .flat_map(|(s, fa)| (0..fa.folds).map(move |k| (s, k)))
        .collect();
    let fitted = par::map_slice(&cells, |&(s, k)| fit_fold(&dataset.sources[s], &folds[s], k, d, config));
    let mut sources: Vec<SourceFits> = dataset
        .sources
        .iter()
        .map(|src| SourceFits {
            source_id: src.source_id.clone(),
            folds: Vec::new(),
        })
        .collect();
    for ((s, _), model) in cells.into_iter().zip(fitted) {
        sources[s].folds.push(model?);
    }
    Ok(NuisanceFits {
        mode: config.mode,
        action_count: d,
        context_dim: dataset.context_dim(),
        sources,
    })
}

impl NuisanceFits {
    fn fold_models(&self, source: &str, fold: usize) -> Result<&FoldModels> {
        let src = self
            .sources
            .iter()
            .find(|s| s.source_id == source)
            .ok_or_else(|| Error::UnknownSource(source.to_string()))?;
        src.folds
            .get(fold)
            .ok_or_else(|| Error::invalid(format!("fold {fold} out of range for `{source}`")))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.context_dim {
            return Err(Error::DimensionMismatch {
                expected: self.context_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }
}

/// `μ̂^{-fold}(x; ·)` for `source`.
pub fn predict_mu(fits: &NuisanceFits, source: &str, fold: usize, x: &[f64]) -> Result<Vec<f64>> {
    fits.check_dim(x)?;
    Ok(fits.fold_models(source, fold)?.mu.predict(x))
}

/// `ŵ^{-fold}(x; ·)` for `source`.
pub fn predict_w(fits: &NuisanceFits, source: &str, fold: usize, x: &[f64]) -> Result<Vec<f64>> {
    fits.check_dim(x)?;
    Ok(fits.fold_models(source, fold)?.w.predict(x))
}
