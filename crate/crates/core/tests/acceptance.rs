//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
mod common;

use std::time::Instant;

use rand::Rng;

use common::*;
use robust_opo::cover::{build_cover, certify_radius, WeightSetSpec};
use robust_opo::harness::{run_experiment, ExperimentConfig, AGGREGATE, EGOPO, SOURCE};
use robust_opo::metrics::{skewness, skewness_identity_check};
use robust_opo::oracle::{solve_opo, WeightedExamples};
use robust_opo::simulator::sample_params;
use robust_opo::MixtureWeights;

struct Outcome {
    pass: bool,
    detail: String,
}

fn aipw_unbiasedness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for dgp in 0..3u64 {
        let params = sample_params(1, 4, 2, 5.0, 500 + dgp).unwrap().remove(0);
        let mut r = rng(600 + dgp);
        let policies: Vec<_> = (0..10).map(|_| random_policy(&mut r, 2, 8, 2, -0.8, 0.8)).collect();
        for (dev, se) in aipw_deviation(&params, &policies, 100_000, 700 + dgp) {
            worst = worst.max(dev / se);
            fails += usize::from(dev > 3.0 * se);
        }
    }
    Outcome {
        pass: fails == 0,
        detail: format!("30 policy values, max |mean - Q| / SE = {worst:.2}, {fails} above 3"),
    }
}

fn oracle_exactness() -> Outcome {
    let mut r = rng(2);
    let mut mismatches = 0;
    for _ in 0..200 {
        let k = r.random_range(1..=2);
        // power-of-two sizes and dyadic mixture weights keep every sum exact
        let sizes: Vec<usize> = (0..k).map(|_| [1, 2, 4, 8][r.random_range(0..4)]).collect();
        let lambda: Vec<f64> = if k == 1 {
            vec![1.0]
        } else {
            let a = r.random_range(0..=8) as f64 / 8.0;
            vec![a, 1.0 - a]
        };
        let n: usize = sizes.iter().sum();
        let p = r.random_range(1..=2);
        let d = r.random_range(1..=2);
        let depth = r.random_range(0..=2);
        let x = grid_contexts(&mut r, n, p);
        let g = int_scores(&mut r, n, d);
        let w: Vec<f64> = sizes
            .iter()
            .zip(&lambda)
            .flat_map(|(&ns, &l)| std::iter::repeat_n(l / ns as f64, ns))
            .collect();
        let ex = WeightedExamples::new(x.clone(), p, g.clone(), d, w.clone()).unwrap();
        let solved = solve_opo(&ex, depth).unwrap().objective;
        mismatches += usize::from(solved != brute_force_max(&x, p, &g, d, &w, depth));
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("200 instances, {mismatches} mismatches"),
    }
}

fn averaged_iterate_bound() -> Outcome {
    let outcomes: Vec<_> = (1..=20).map(averaged_iterate_instance).collect();
    let worst = outcomes.iter().map(|o| o.worst_excess).fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: worst <= 0.0,
        detail: format!("20 instances, largest excess over the bound = {worst:.3e}"),
    }
}

fn skewness_checks() -> Outcome {
    let nb = MixtureWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
    let uniform = MixtureWeights::uniform(3);
    let self_skew = skewness(&nb, &nb).unwrap();
    let vertex_skew = skewness(&MixtureWeights::vertex(0, 3), &uniform).unwrap();
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    while pairs < 1000 {
        let k = r.random_range(1..=6);
        let (l, n) = (random_simplex(&mut r, k), random_simplex(&mut r, k));
        if n.as_slice().iter().any(|&v| v < 1e-9) {
            continue;
        }
        let (a, b) = skewness_identity_check(&l, &n).unwrap();
        worst = worst.max((a - b).abs());
        pairs += 1;
    }
    Outcome {
        pass: self_skew == 1.0 && vertex_skew == 3.0 && worst <= 1e-12,
        detail: format!("s(n|n) = {self_skew}, s(e1|uniform) = {vertex_skew}, max form gap = {worst:.1e}"),
    }
}

fn cover_certification() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    let mut pass = true;
    for k in 2..=4 {
        for eps in [0.5, 0.25, 0.1] {
            let spec = WeightSetSpec::full_simplex(k);
            let mut cover = build_cover(&spec, eps).unwrap();
            let radius = certify_radius(&mut cover, &spec, 10_000, 5);
            pass &= radius <= eps;
            worst_ratio = worst_ratio.max(radius / eps);
        }
    }
    Outcome {
        pass,
        detail: format!("9 covers, max radius / epsilon = {worst_ratio:.3}"),
    }
}

fn experiment_ordering() -> Outcome {
    let cfg = ExperimentConfig {
        sample_sizes: vec![500],
        seeds: vec![1, 2, 3],
        plots: false,
        ..Default::default()
    };
    let curve = run_experiment(&cfg).unwrap();
    let failures = curve.failures().count();
    let mean = |policy, target| curve.mean_regret(500, policy, target).unwrap_or(f64::NAN);
    let (eg_m, agg_m, src_m) = (mean(EGOPO, "mixture"), mean(AGGREGATE, "mixture"), mean(SOURCE, "mixture"));
    let (eg_1, agg_1, src_1) = (mean(EGOPO, "e1"), mean(AGGREGATE, "e1"), mean(SOURCE, "e1"));
    let a = eg_m < agg_m && eg_m < src_m;
    let b = src_1 <= eg_1 && eg_1 <= agg_1;
    Outcome {
        pass: failures == 0 && a && b,
        detail: format!(
            "mixture: egopo {eg_m:.4}, aggregate {agg_m:.4}, source {src_m:.4} ({}); \
             e1: source {src_1:.4}, egopo {eg_1:.4}, aggregate {agg_1:.4} ({})",
            if a { "ok" } else { "ordering violated" },
            if b { "ok" } else { "ordering violated" },
        ),
    }
}

fn nuisance_decay() -> Outcome {
    let small: f64 = (0..20).map(|s| outcome_mse(200, s)).sum::<f64>() / 20.0;
    let large: f64 = (0..20).map(|s| outcome_mse(800, s)).sum::<f64>() / 20.0;
    Outcome {
        pass: large < small,
        detail: format!("mean MSE {small:.4} at n=200, {large:.4} at n=800"),
    }
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(usize, &str, Check); 7] = [
        (1, "AIPW unbiasedness", aipw_unbiasedness),
        (2, "oracle exactness", oracle_exactness),
        (3, "averaged iterate bound", averaged_iterate_bound),
        (4, "skewness", skewness_checks),
        (5, "cover certification", cover_certification),
        (6, "experiment ordering", experiment_ordering),
        (7, "nuisance decay", nuisance_decay),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, name, check) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        failed += usize::from(!out.pass);
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} {name}: {status} [{:.1}s] {}",
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
