//! Skewness diagnostics and simulator ground-truth policy evaluation.

use serde::{Deserialize, Serialize};

use crate::data::{MixtureWeights, TreePolicy};
use crate::error::{Error, Result};
use crate::rng::{self, tag, Normal};
use crate::simulator::SourceGenParams;
use crate::par;

fn check_pair(lambda: &[f64], n_bar: &[f64]) -> Result<()> {
    if lambda.len() != n_bar.len() {
        return Err(Error::DimensionMismatch {
            expected: n_bar.len(),
            actual: lambda.len(),
        });
    }
    if let Some(s) = n_bar.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::invalid(format!("source {s} has no samples (n̄_s = 0)")));
    }
    Ok(())
}

/// `𝔰(λ‖n̄) = 1 + χ²(λ‖n̄)`, evaluated as `Σ_s λ_s² / n̄_s`.
pub fn skewness(lambda: &MixtureWeights, n_bar: &MixtureWeights) -> Result<f64> {
    check_pair(lambda.as_slice(), n_bar.as_slice())?;
    Ok(lambda
        .as_slice()
        .iter()
        .zip(n_bar.as_slice())
        .map(|(l, n)| l * l / n)
        .sum())
}

/// Both forms of the skewness: `(Σ λ²/n̄, 1 + Σ (λ − n̄)²/n̄)`.
pub fn skewness_identity_check(lambda: &MixtureWeights, n_bar: &MixtureWeights) -> Result<(f64, f64)> {
    let direct = skewness(lambda, n_bar)?;
    let chi_sq: f64 = lambda
        .as_slice()
        .iter()
        .zip(n_bar.as_slice())
        .map(|(l, n)| (l - n) * (l - n) / n)
        .sum();
    Ok((direct, 1.0 + chi_sq))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewnessReport {
    pub per_lambda: Vec<(MixtureWeights, f64)>,
    pub mixture_agnostic: f64,
    pub sample_distribution: MixtureWeights,
}

pub fn skewness_report(points: &[MixtureWeights], n_bar: &MixtureWeights) -> Result<SkewnessReport> {
    if points.is_empty() {
        return Err(Error::invalid("no mixture weights given"));
    }
    let per_lambda = points
        .iter()
        .map(|l| Ok((l.clone(), skewness(l, n_bar)?)))
        .collect::<Result<Vec<_>>>()?;
    let mixture_agnostic = per_lambda.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    Ok(SkewnessReport {
        per_lambda,
        mixture_agnostic,
        sample_distribution: n_bar.clone(),
    })
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn estimate(&self) -> Estimate {
        let mean = self.sum / self.count;
        let var = ((self.sum_sq - self.count * mean * mean) / (self.count - 1.0)).max(0.0);
        Estimate {
            mean,
            se: (var / self.count).sqrt(),
        }
    }
}

/// Joint Monte Carlo over `(s, X, Y(·))` draws from `D_λ`.
///
/// Every draw consumes the same random numbers regardless of the policies,
/// so all statistics share common random numbers. `stat` maps the context and
/// the full potential-outcome vector to one value per output.
fn mc_stats<F>(
    dgp: &[SourceGenParams],
    lambda: &MixtureWeights,
    samples: usize,
    seed: u64,
    outputs: usize,
    stat: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&[f64], &[f64], &mut [f64]) + Sync + Send,
{
    if dgp.len() != lambda.len() {
        return Err(Error::DimensionMismatch {
            expected: dgp.len(),
            actual: lambda.len(),
        });
    }
    if samples < 2 {
        return Err(Error::invalid("need at least two Monte Carlo samples"));
    }
    let p = dgp[0].context_dim();
    let d = dgp[0].action_count;
    if dgp.iter().any(|g| g.context_dim() != p || g.action_count != d) {
        return Err(Error::invalid("sources disagree on context dimension or action count"));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial = par::map_range(chunks, |c| {
        let mut r = rng::stream(seed, c as u64, tag::CHUNK);
        let mut normal = Normal::new();
        let mut x = vec![0.0; p];
        let mut y = vec![0.0; d];
        let mut vals = vec![0.0; outputs];
        let mut acc = vec![Moments::default(); outputs];
        let count = MC_CHUNK.min(samples - c * MC_CHUNK);
        for _ in 0..count {
            let s = rng::categorical(&mut r, lambda.as_slice());
            let g = &dgp[s];
            g.sample_context(&mut r, &mut x);
            let sd = g.sigma_sq.sqrt();
            for (a, ya) in y.iter_mut().enumerate() {
                *ya = g.mean(&x, a) + sd * normal.sample(&mut r);
            }
            stat(&x, &y, &mut vals);
            for (m, &v) in acc.iter_mut().zip(&vals) {
                m.push(v);
            }
        }
        acc
    });
    let mut total = vec![Moments::default(); outputs];
    for chunk in &partial {
        for (t, m) in total.iter_mut().zip(chunk) {
            t.merge(m);
        }
    }
    Ok(total.iter().map(Moments::estimate).collect())
}

/// `Q_λ(π)` by sampling `s ~ λ`, then `(X, Y(·)) ~ D_s`, and reading `Y(π(X))`.
pub fn true_policy_value(
    policy: &TreePolicy,
    dgp: &[SourceGenParams],
    lambda: &MixtureWeights,
    mc_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if mc_samples < 1000 {
        return Err(Error::invalid("use at least 1000 Monte Carlo samples"));
    }
    Ok(mc_stats(dgp, lambda, mc_samples, seed, 1, |x, y, out| {
        out[0] = y[policy.act(x)];
    })?[0])
}

/// `Q_λ(reference) − Q_λ(π)` for each policy, paired on common draws.
pub fn true_regrets(
    policies: &[&TreePolicy],
    reference: &TreePolicy,
    dgp: &[SourceGenParams],
    lambda: &MixtureWeights,
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if mc_samples < 1000 {
        return Err(Error::invalid("use at least 1000 Monte Carlo samples"));
    }
    mc_stats(dgp, lambda, mc_samples, seed, policies.len(), |x, y, out| {
        let r = y[reference.act(x)];
        for (o, pi) in out.iter_mut().zip(policies) {
            *o = r - y[pi.act(x)];
        }
    })
}

pub fn true_regret(
    policy: &TreePolicy,
    dgp: &[SourceGenParams],
    lambda: &MixtureWeights,
    reference: &TreePolicy,
    mc_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(true_regrets(&[policy], reference, dgp, lambda, mc_samples, seed)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> MixtureWeights {
        MixtureWeights::new(v.to_vec()).unwrap()
    }

    #[test]
    fn skewness_cases() {
        let u = w(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(skewness(&u, &u).unwrap(), 1.0);
        let s = skewness(&w(&[1.0, 0.0, 0.0]), &u).unwrap();
        assert!((s - 3.0).abs() < 1e-15);
        let s = skewness(&w(&[0.5, 0.5, 0.0]), &u).unwrap();
        assert!((s - 1.5).abs() < 1e-15);
        for l in [u.clone(), w(&[1.0, 0.0, 0.0]), w(&[0.5, 0.5, 0.0])] {
            let (a, b) = skewness_identity_check(&l, &u).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_sample_source_rejected() {
        assert!(skewness(&w(&[0.5, 0.5]), &w(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn report_takes_max() {
        let u = w(&[0.5, 0.5]);
        let r = skewness_report(&[w(&[0.5, 0.5]), w(&[1.0, 0.0])], &u).unwrap();
        assert_eq!(r.mixture_agnostic, 2.0);
    }

    #[test]
    fn self_regret_is_zero() {
        let dgp = vec![SourceGenParams::new(vec![1.0, 2.0], 1.0, 2).unwrap()];
        let pi = TreePolicy::constant(1);
        let r = true_regret(&pi, &dgp, &w(&[1.0]), &pi, 2000, 3).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.se, 0.0);
    }
}
