//! Synthetic multi-source data-generating process.
//!
//! Each source `s` has a parameter `θ_s ∈ R^q`. Contexts are uniform on
//! `[−1, 1]^p` with `p = d·q`, actions are uniform over `d` arms, and the
//! potential outcome of arm `a` is `N(x_aᵀθ_s, σ_s²)` where `x_a` is the
//! coordinate block `[a·q, (a+1)·q)` of `x`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{MixtureWeights, ObservationalDataset, SourceData};
use crate::error::{Error, Result};
use crate::rng::{self, tag, Normal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceGenParams {
    pub theta: Vec<f64>,
    /// Reward noise variance σ_s².
    pub sigma_sq: f64,
    pub action_count: usize,
    /// Constant added to every potential outcome.
    #[serde(default)]
    pub reward_offset: f64,
}

impl SourceGenParams {
    pub fn new(theta: Vec<f64>, sigma_sq: f64, action_count: usize) -> Result<Self> {
        if theta.is_empty() || action_count < 2 {
            return Err(Error::invalid("need q >= 1 and d >= 2"));
        }
        if !(sigma_sq >= 0.0) {
            return Err(Error::invalid(format!("noise variance {sigma_sq} is negative")));
        }
        Ok(Self {
            theta,
            sigma_sq,
            action_count,
            reward_offset: 0.0,
        })
    }

    pub fn block_size(&self) -> usize {
        self.theta.len()
    }

    pub fn context_dim(&self) -> usize {
        self.action_count * self.theta.len()
    }

    /// `μ_s(x; a) = x_aᵀθ_s` (plus the offset).
    #[inline]
    pub fn mean(&self, x: &[f64], a: usize) -> f64 {
        let q = self.theta.len();
        let block = &x[a * q..(a + 1) * q];
        block.iter().zip(&self.theta).map(|(x, t)| x * t).sum::<f64>() + self.reward_offset
    }

    pub fn sample_context<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = rng::uniform(rng, -1.0, 1.0);
        }
    }
}

/// Simulated source with its full potential-outcome table.
#[derive(Debug, Clone)]
pub struct SimulatedSource {
    pub observable: SourceData,
    /// Row-major `n_s × d`.
    pub potential_outcomes: Vec<f64>,
    /// Row-major `n_s × d`.
    pub true_mu: Vec<f64>,
}

impl SimulatedSource {
    pub fn action_count(&self) -> usize {
        self.true_mu.len() / self.observable.len()
    }
}

/// Independent Gaussian `θ_s ~ N(0, σ²I_q)` per source, noise variance 1.
pub fn sample_params(
    num_sources: usize,
    q: usize,
    d: usize,
    sigma_theta_sq: f64,
    seed: u64,
) -> Result<Vec<SourceGenParams>> {
    if num_sources == 0 || q == 0 || d < 2 {
        return Err(Error::invalid("need at least one source, q >= 1 and d >= 2"));
    }
    if !(sigma_theta_sq >= 0.0) {
        return Err(Error::invalid("parameter variance must be non-negative"));
    }
    let sd = sigma_theta_sq.sqrt();
    (0..num_sources)
        .map(|s| {
            let mut r = rng::stream(seed, s as u64, tag::THETA);
            let mut normal = Normal::new();
            let theta = (0..q).map(|_| sd * normal.sample(&mut r)).collect();
            SourceGenParams::new(theta, 1.0, d)
        })
        .collect()
}

/// Draw `n_s` observations from one source. The context, action and outcome
/// streams are derived from `seed` with disjoint tags.
pub fn generate_source(
    params: &SourceGenParams,
    source_id: &str,
    n_s: usize,
    seed: u64,
) -> Result<SimulatedSource> {
    if n_s == 0 {
        return Err(Error::invalid("source size must be positive"));
    }
    let p = params.context_dim();
    let d = params.action_count;
    let sd = params.sigma_sq.sqrt();
    let mut ctx_rng = rng::stream(seed, 0, tag::CONTEXT);
    let mut act_rng = rng::stream(seed, 0, tag::ACTION);
    let mut out_rng = rng::stream(seed, 0, tag::OUTCOME);
    let mut normal = Normal::new();

    let mut contexts = vec![0.0; n_s * p];
    let mut actions = Vec::with_capacity(n_s);
    let mut rewards = Vec::with_capacity(n_s);
    let mut potential = vec![0.0; n_s * d];
    let mut mu = vec![0.0; n_s * d];
    for i in 0..n_s {
        let x = &mut contexts[i * p..(i + 1) * p];
        params.sample_context(&mut ctx_rng, x);
        for a in 0..d {
            let m = params.mean(x, a);
            mu[i * d + a] = m;
            potential[i * d + a] = m + sd * normal.sample(&mut out_rng);
        }
        let a = act_rng.random_range(0..d);
        actions.push(a);
        rewards.push(potential[i * d + a]);
    }
    let observable = SourceData::new(
        source_id,
        contexts,
        p,
        actions,
        rewards,
        Some(vec![1.0 / d as f64; n_s]),
    )?;
    Ok(SimulatedSource {
        observable,
        potential_outcomes: potential,
        true_mu: mu,
    })
}

/// Equal split of `n_total` across sources; the remainder goes to the
/// lowest-indexed sources.
pub fn allocate_sizes(n_total: usize, num_sources: usize) -> Result<Vec<usize>> {
    if num_sources == 0 || n_total < num_sources {
        return Err(Error::invalid(format!(
            "cannot split {n_total} samples over {num_sources} sources"
        )));
    }
    let base = n_total / num_sources;
    let rem = n_total % num_sources;
    Ok((0..num_sources).map(|s| base + usize::from(s < rem)).collect())
}

pub fn source_name(s: usize) -> String {
    format!("s{}", s + 1)
}

/// All sources with per-source seeds derived from `master`.
pub fn generate_sources(
    params: &[SourceGenParams],
    sizes: &[usize],
    master: u64,
) -> Result<Vec<SimulatedSource>> {
    if params.len() != sizes.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            actual: sizes.len(),
        });
    }
    params
        .iter()
        .zip(sizes)
        .enumerate()
        .map(|(s, (p, &n))| generate_source(p, &source_name(s), n, rng::sub_seed(master, s as u64, 0)))
        .collect()
}

pub fn to_dataset(sources: &[SimulatedSource]) -> Result<ObservationalDataset> {
    let d = sources
        .first()
        .map(SimulatedSource::action_count)
        .ok_or_else(|| Error::invalid("no sources"))?;
    ObservationalDataset::new(sources.iter().map(|s| s.observable.clone()).collect(), d)
}

/// `n` draws from the mixture `Σ_s λ_s D_s`, pooled into one source.
pub fn generate_mixture(
    params: &[SourceGenParams],
    lambda: &MixtureWeights,
    n: usize,
    seed: u64,
) -> Result<SimulatedSource> {
    if lambda.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            actual: lambda.len(),
        });
    }
    let mut pick = rng::stream(seed, 0, tag::SOURCE_PICK);
    let mut counts = vec![0usize; params.len()];
    for _ in 0..n {
        counts[rng::categorical(&mut pick, lambda.as_slice())] += 1;
    }
    let parts: Vec<SimulatedSource> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| generate_source(&params[s], "mix", c, rng::sub_seed(seed, s as u64, 1)))
        .collect::<Result<_>>()?;
    let p = params[0].context_dim();
    let mut contexts = Vec::with_capacity(n * p);
    let mut actions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    let mut props = Vec::with_capacity(n);
    let mut potential = Vec::new();
    let mut mu = Vec::new();
    for part in parts {
        let o = &part.observable;
        contexts.extend_from_slice(o.contexts());
        actions.extend_from_slice(&o.actions);
        rewards.extend_from_slice(&o.rewards);
        props.extend(o.logged_propensities.as_deref().unwrap_or_default());
        potential.extend(part.potential_outcomes);
        mu.extend(part.true_mu);
    }
    Ok(SimulatedSource {
        observable: SourceData::new("mix", contexts, p, actions, rewards, Some(props))?,
        potential_outcomes: potential,
        true_mu: mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_deterministic_and_degenerate() {
        let a = sample_params(3, 4, 2, 5.0, 9).unwrap();
        let b = sample_params(3, 4, 2, 5.0, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].theta, a[1].theta);
        let z = sample_params(2, 4, 2, 0.0, 9).unwrap();
        assert!(z.iter().all(|p| p.theta.iter().all(|&t| t == 0.0)));
    }

    #[test]
    fn theta_variance_matches() {
        let ps = sample_params(2500, 4, 2, 5.0, 1).unwrap();
        let xs: Vec<f64> = ps.iter().flat_map(|p| p.theta.clone()).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((4.5..=5.5).contains(&var), "var {var}");
    }

    #[test]
    fn noiseless_rewards_are_means() {
        let mut p = SourceGenParams::new(vec![1.0, -2.0], 0.0, 2).unwrap();
        p.reward_offset = 0.0;
        let s = generate_source(&p, "a", 50, 4).unwrap();
        let o = &s.observable;
        for i in 0..o.len() {
            let x = o.context(i);
            let a = o.actions[i];
            assert_eq!(o.rewards[i], x[a * 2] - 2.0 * x[a * 2 + 1]);
            assert_eq!(s.potential_outcomes[i * 2 + a], o.rewards[i]);
        }
    }

    #[test]
    fn contexts_in_cube_and_actions_balanced() {
        let p = SourceGenParams::new(vec![0.3; 4], 1.0, 2).unwrap();
        let n = 10_000;
        let s = generate_source(&p, "a", n, 17).unwrap();
        assert!(s.observable.contexts().iter().all(|x| (-1.0..=1.0).contains(x)));
        let ones = s.observable.actions.iter().filter(|&&a| a == 1).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() <= 3.0 * (0.25f64 / n as f64).sqrt(), "{ones}");
        assert!(s
            .observable
            .logged_propensities
            .as_ref()
            .unwrap()
            .iter()
            .all(|&e| e == 0.5));
    }

    #[test]
    fn generation_is_reproducible() {
        let p = SourceGenParams::new(vec![0.3, 1.0], 1.0, 2).unwrap();
        let a = generate_source(&p, "a", 100, 5).unwrap();
        let b = generate_source(&p, "a", 100, 5).unwrap();
        assert_eq!(a.observable, b.observable);
        assert_eq!(a.potential_outcomes, b.potential_outcomes);
    }

    #[test]
    fn allocation() {
        assert_eq!(allocate_sizes(300, 3).unwrap(), vec![100, 100, 100]);
        assert_eq!(allocate_sizes(301, 3).unwrap(), vec![101, 100, 100]);
        assert!(allocate_sizes(2, 3).is_err());
    }

    #[test]
    fn mixture_draw_sizes() {
        let ps = sample_params(3, 2, 2, 5.0, 3).unwrap();
        let lam = MixtureWeights::new(vec![0.9, 0.05, 0.05]).unwrap();
        let m = generate_mixture(&ps, &lam, 2000, 8).unwrap();
        assert_eq!(m.observable.len(), 2000);
        assert_eq!(m.true_mu.len(), 4000);
    }
}
