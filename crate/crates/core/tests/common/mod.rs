//! Shared test helpers: a brute-force tree enumerator written independently of
//! the library search, plus small instance generators.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use robust_opo::aipw::{ScoreMatrix, ScoreProvenance, SourceScores};
use robust_opo::{MixtureWeights, TreeNode, TreePolicy};

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// All split thresholds worth trying for one feature: −∞ and the midpoints
/// between consecutive distinct values.
pub fn thresholds(contexts: &[f64], p: usize, j: usize) -> Vec<f64> {
    let mut v: Vec<f64> = contexts.chunks(p).map(|x| x[j]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let mut t = vec![f64::NEG_INFINITY];
    t.extend(v.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    t
}

/// Every complete depth-`depth` split structure, in level order, leaves set
/// to action 0.
pub fn structures(contexts: &[f64], p: usize, depth: usize) -> Vec<Vec<TreeNode>> {
    let splits: Vec<TreeNode> = (0..p)
        .flat_map(|j| {
            thresholds(contexts, p, j)
                .into_iter()
                .map(move |t| TreeNode::Split { feature: j, threshold: t })
        })
        .collect();
    let internal = (1usize << depth) - 1;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(internal);
    fn rec(splits: &[TreeNode], internal: usize, leaves: usize, cur: &mut Vec<TreeNode>, out: &mut Vec<Vec<TreeNode>>) {
        if cur.len() == internal {
            let mut nodes = cur.clone();
            nodes.extend(std::iter::repeat_n(TreeNode::Leaf { action: 0 }, leaves));
            out.push(nodes);
            return;
        }
        for s in splits {
            cur.push(s.clone());
            rec(splits, internal, leaves, cur, out);
            cur.pop();
        }
    }
    rec(&splits, internal, 1 << depth, &mut current, &mut out);
    out
}

/// Route `x` through a level-order node list; returns the leaf slot.
pub fn route(nodes: &[TreeNode], depth: usize, x: &[f64]) -> usize {
    let mut k = 0;
    for _ in 0..depth {
        match nodes[k] {
            TreeNode::Split { feature, threshold } => {
                k = if x[feature] <= threshold { 2 * k + 1 } else { 2 * k + 2 };
            }
            TreeNode::Leaf { .. } => unreachable!("complete tree"),
        }
    }
    k - ((1 << depth) - 1)
}

/// Every complete tree with every leaf labelling. Exponential; tiny inputs only.
pub fn all_trees(contexts: &[f64], p: usize, d: usize, depth: usize) -> Vec<TreePolicy> {
    let leaves = 1usize << depth;
    let first_leaf = leaves - 1;
    let mut out = Vec::new();
    for s in structures(contexts, p, depth) {
        let labellings = d.pow(leaves as u32);
        for mut code in 0..labellings {
            let mut nodes = s.clone();
            for l in 0..leaves {
                nodes[first_leaf + l] = TreeNode::Leaf { action: code % d };
                code /= d;
            }
            out.push(TreePolicy::new(depth, nodes).unwrap());
        }
    }
    out
}

/// `Σ_i w_i · s_i[π(x_i)]` in index order.
pub fn weighted_value(policy: &TreePolicy, contexts: &[f64], p: usize, scores: &[f64], d: usize, w: &[f64]) -> f64 {
    let mut v = 0.0;
    for (i, x) in contexts.chunks(p).enumerate() {
        v += w[i] * scores[i * d + policy.act(x)];
    }
    v
}

/// Max of the weighted objective over depth-`depth` trees, by structures with
/// per-leaf best labels. Exact when scores and weights are small dyadics.
pub fn brute_force_max(contexts: &[f64], p: usize, scores: &[f64], d: usize, w: &[f64], depth: usize) -> f64 {
    let leaves = 1usize << depth;
    let mut best = f64::NEG_INFINITY;
    for s in structures(contexts, p, depth) {
        let mut sums = vec![0.0; leaves * d];
        for (i, x) in contexts.chunks(p).enumerate() {
            let l = route(&s, depth, x);
            for a in 0..d {
                sums[l * d + a] += w[i] * scores[i * d + a];
            }
        }
        let v: f64 = sums
            .chunks(d)
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .sum();
        best = best.max(v);
    }
    best
}

/// `Q̂_λ(π) = Σ_s λ_s / n_s Σ_i Γ_i^s(π(x_i^s))`.
pub fn mixture_value(scores: &ScoreMatrix, lambda: &[f64], policy: &TreePolicy) -> f64 {
    let mut total = 0.0;
    for (s, &n) in scores.source_sizes().iter().enumerate() {
        let mut acc = 0.0;
        for i in 0..n {
            acc += scores.row(s, i)[policy.act(scores.context(s, i))];
        }
        total += lambda[s] / n as f64 * acc;
    }
    total
}

/// Contexts on a coarse grid so ties between values are common.
pub fn grid_contexts(rng: &mut impl Rng, n: usize, p: usize) -> Vec<f64> {
    (0..n * p).map(|_| rng.random_range(0..6) as f64 * 0.5).collect()
}

pub fn int_scores(rng: &mut impl Rng, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| rng.random_range(-4..=4) as f64).collect()
}

pub fn random_simplex(rng: &mut impl Rng, k: usize) -> MixtureWeights {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    let mut v: Vec<f64> = e.iter().map(|x| x / s).collect();
    let head: f64 = v[..k - 1].iter().sum();
    v[k - 1] = (1.0 - head).max(0.0);
    MixtureWeights::new(v).unwrap()
}

/// Score matrix with integer scores and grid contexts, `sizes[s]` rows per source.
pub fn tiny_scores(rng: &mut impl Rng, sizes: &[usize], p: usize, d: usize) -> ScoreMatrix {
    let sources = sizes
        .iter()
        .enumerate()
        .map(|(s, &n)| SourceScores {
            source_id: format!("s{}", s + 1),
            contexts: grid_contexts(rng, n, p),
            scores: int_scores(rng, n, d),
        })
        .collect();
    ScoreMatrix::new(sources, p, d, ScoreProvenance::Oracle).unwrap()
}

/// Random complete tree with thresholds drawn from `[lo, hi]`.
pub fn random_policy(rng: &mut impl Rng, depth: usize, p: usize, d: usize, lo: f64, hi: f64) -> TreePolicy {
    let internal = (1usize << depth) - 1;
    let mut nodes: Vec<TreeNode> = (0..internal)
        .map(|_| TreeNode::Split {
            feature: rng.random_range(0..p),
            threshold: rng.random_range(lo..hi),
        })
        .collect();
    nodes.extend((0..1usize << depth).map(|_| TreeNode::Leaf {
        action: rng.random_range(0..d),
    }));
    TreePolicy::new(depth, nodes).unwrap()
}

/// Distinct per-point action vectors realised by depth-`depth` trees on the
/// stacked contexts, found by brute force.
pub fn behaviors(contexts: &[f64], p: usize, d: usize, depth: usize) -> Vec<Vec<usize>> {
    let leaves = 1usize << depth;
    let mut out = std::collections::BTreeSet::new();
    for s in structures(contexts, p, depth) {
        let slots: Vec<usize> = contexts.chunks(p).map(|x| route(&s, depth, x)).collect();
        for mut code in 0..d.pow(leaves as u32) {
            let mut label = vec![0; leaves];
            for l in label.iter_mut() {
                *l = code % d;
                code /= d;
            }
            out.insert(slots.iter().map(|&k| label[k]).collect::<Vec<_>>());
        }
    }
    out.into_iter().collect()
}

/// `Q̂_λ` of a per-point action vector over the pooled rows of `scores`.
pub fn behavior_value(scores: &ScoreMatrix, lambda: &[f64], actions: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut k = 0;
    for (s, &n) in scores.source_sizes().iter().enumerate() {
        let mut acc = 0.0;
        for i in 0..n {
            acc += scores.row(s, i)[actions[k]];
            k += 1;
        }
        total += lambda[s] / n as f64 * acc;
    }
    total
}

pub struct AveragedIterateOutcome {
    /// Largest `mean_t R̂_λ'(π_t) − (minimax + 2B̂√(ln|Λ|/T))` over λ'.
    pub worst_excess: f64,
    pub minimax: f64,
    pub horizon: usize,
    pub cover_size: usize,
}

/// Runs EG-OPO with uniform averaging on a random tiny instance with a finite
/// weight set and checks the averaged regret against a brute-force minimax.
pub fn averaged_iterate_instance(seed: u64) -> AveragedIterateOutcome {
    use robust_opo::cover::{build_cover, WeightSetSpec};
    use robust_opo::egopo::{run_egopo, EgopoConfig, IterateMode};

    let mut r = rng(seed);
    let k = r.random_range(2..=3);
    let sizes: Vec<usize> = (0..k).map(|_| r.random_range(2..=4)).collect();
    let p = r.random_range(1..=2);
    let d = 2;
    let depth = r.random_range(1..=2);
    let scores = tiny_scores(&mut r, &sizes, p, d);
    let lambda_count = r.random_range(2..=5);
    let mut points: Vec<MixtureWeights> = (0..lambda_count).map(|_| random_simplex(&mut r, k)).collect();
    if r.random_bool(0.5) {
        points[0] = MixtureWeights::vertex(0, k);
    }
    let cover = build_cover(&WeightSetSpec::finite_list(points).unwrap(), 0.1).unwrap();
    let horizon = [5, 20, 60, 150][r.random_range(0..4)];
    let config = EgopoConfig {
        iterations: Some(horizon),
        depth,
        iterate_mode: IterateMode::UniformAverage,
        ..EgopoConfig::default()
    };
    let result = run_egopo(&scores, &cover, &config).unwrap();

    let mut stacked = Vec::new();
    for (s, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            stacked.extend_from_slice(scores.context(s, i));
        }
    }
    let all = behaviors(&stacked, p, d, depth);
    let values: Vec<Vec<f64>> = cover
        .points
        .iter()
        .map(|l| all.iter().map(|b| behavior_value(&scores, l.as_slice(), b)).collect())
        .collect();
    let maxima: Vec<f64> = values.iter().map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let minimax = (0..all.len())
        .map(|b| (0..cover.len()).map(|l| maxima[l] - values[l][b]).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);

    let size = cover.len();
    let slack = if size > 1 {
        2.0 * result.b_hat * ((size as f64).ln() / horizon as f64).sqrt()
    } else {
        0.0
    };
    let worst_excess = (0..size)
        .map(|l| {
            let lambda = cover.points[l].as_slice();
            let mean: f64 = result
                .iterates
                .iter()
                .map(|pi| maxima[l] - mixture_value(&scores, lambda, pi))
                .sum::<f64>()
                / horizon as f64;
            mean - (minimax + slack)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    AveragedIterateOutcome {
        worst_excess,
        minimax,
        horizon,
        cover_size: size,
    }
}

/// Exact `E[μ(X; π(X))]` for contexts uniform on `[−1, 1]^p` and a
/// block-linear mean: each leaf is a box, and a linear function averages to
/// its value at the box centre.
pub fn analytic_value(policy: &TreePolicy, params: &robust_opo::simulator::SourceGenParams) -> f64 {
    let p = params.context_dim();
    let q = params.theta.len();
    fn walk(
        nodes: &[TreeNode],
        k: usize,
        lo: &mut Vec<f64>,
        hi: &mut Vec<f64>,
        leaf: &mut dyn FnMut(usize, &[f64], &[f64]),
    ) {
        match nodes[k] {
            TreeNode::Leaf { action } => leaf(action, lo, hi),
            TreeNode::Split { feature, threshold } => {
                let (l0, h0) = (lo[feature], hi[feature]);
                hi[feature] = h0.min(threshold);
                walk(nodes, 2 * k + 1, lo, hi, leaf);
                hi[feature] = h0;
                lo[feature] = l0.max(threshold);
                walk(nodes, 2 * k + 2, lo, hi, leaf);
                lo[feature] = l0;
            }
        }
    }
    let mut total = 0.0;
    let mut leaf = |a: usize, lo: &[f64], hi: &[f64]| {
        let mut prob = 1.0;
        for j in 0..p {
            prob *= ((hi[j] - lo[j]) / 2.0).max(0.0);
        }
        if prob > 0.0 {
            let mean: f64 = (0..q).map(|j| params.theta[j] * 0.5 * (lo[a * q + j] + hi[a * q + j])).sum();
            total += prob * (mean + params.reward_offset);
        }
    };
    walk(policy.nodes(), 0, &mut vec![-1.0; p], &mut vec![1.0; p], &mut leaf);
    total
}

/// Mean and standard error of a sample.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// `(|mean − Q|, SE)` of cross-fitted AIPW scores of `policies` on one
/// simulated source with known uniform logging.
pub fn aipw_deviation(
    params: &robust_opo::simulator::SourceGenParams,
    policies: &[TreePolicy],
    n: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    use robust_opo::harness::score_dataset;
    use robust_opo::nuisance::{NuisanceConfig, NuisanceMode, Regressor};
    use robust_opo::simulator::{generate_source, to_dataset};

    let sim = generate_source(params, "s1", n, seed).unwrap();
    let ds = to_dataset(std::slice::from_ref(&sim)).unwrap();
    let cfg = NuisanceConfig {
        mode: NuisanceMode::KnownPropensity,
        regressor: Regressor::Ridge,
        ..NuisanceConfig::default()
    };
    let scores = score_dataset(&ds, &cfg, seed).unwrap();
    policies
        .iter()
        .map(|pi| {
            let v: Vec<f64> = (0..n).map(|i| scores.row(0, i)[pi.act(scores.context(0, i))]).collect();
            let (m, se) = mean_se(&v);
            ((m - analytic_value(pi, params)).abs(), se)
        })
        .collect()
}

/// Cross-fitted outcome-model MSE against the true means on one simulated source.
pub fn outcome_mse(n_s: usize, seed: u64) -> f64 {
    use robust_opo::nuisance::{assign_dataset_folds, fit_nuisance, predict_mu, NuisanceConfig};
    use robust_opo::simulator::{generate_source, sample_params, to_dataset};

    let params = sample_params(1, 4, 2, 5.0, seed).unwrap();
    let sim = generate_source(&params[0], "s1", n_s, seed ^ 0x5eed).unwrap();
    let ds = to_dataset(std::slice::from_ref(&sim)).unwrap();
    let cfg = NuisanceConfig::default();
    let folds = assign_dataset_folds(&ds, cfg.folds, seed).unwrap();
    let fits = fit_nuisance(&ds, &folds, &cfg).unwrap();
    let d = 2;
    let mut sq = 0.0;
    for i in 0..n_s {
        let mu = predict_mu(&fits, "s1", folds[0].fold_of[i], sim.observable.context(i)).unwrap();
        for a in 0..d {
            sq += (mu[a] - sim.true_mu[i * d + a]).powi(2);
        }
    }
    sq / (n_s * d) as f64
}
