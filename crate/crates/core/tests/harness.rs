mod common;

use robust_opo::aipw::compute_oracle_scores;
use robust_opo::cover::{build_cover, WeightSetSpec};
use robust_opo::egopo::{run_egopo, EgopoConfig};
use robust_opo::harness::{
    run_experiment, train_baselines, write_experiment_outputs, ExperimentConfig, AGGREGATE, EGOPO, SOURCE,
};
use robust_opo::metrics::true_regrets;
use robust_opo::simulator::{generate_source, generate_sources, sample_params};
use robust_opo::MixtureWeights;

fn tiny_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        sample_sizes: vec![60, 90],
        seeds: vec![1, 2],
        reference_training_n: 100,
        mc_samples: 1000,
        ..Default::default()
    };
    cfg.egopo.epsilon = 0.5;
    cfg.egopo.iterations = Some(5);
    cfg
}

#[test]
fn every_cell_reports_every_policy_and_target() {
    let cfg = tiny_config();
    let curve = run_experiment(&cfg).unwrap();
    assert_eq!(curve.rows.len(), 2 * 2 * 3 * 2);
    for &n in &cfg.sample_sizes {
        for &seed in &cfg.seeds {
            for target in &cfg.targets {
                for policy in [EGOPO, AGGREGATE, SOURCE] {
                    let hits: Vec<_> = curve
                        .rows
                        .iter()
                        .filter(|r| r.n == n && r.seed == seed && r.target == target.name && r.policy == policy)
                        .collect();
                    assert_eq!(hits.len(), 1);
                    assert!(hits[0].regret.is_finite() && hits[0].se.is_finite());
                    assert!(hits[0].error.is_none());
                }
            }
        }
    }
    assert_eq!(curve, run_experiment(&cfg).unwrap());

    let dir = tempfile::tempdir().unwrap();
    write_experiment_outputs(&cfg, &curve, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("regret.csv")).unwrap();
    assert!(csv.starts_with("n,seed,policy,target,regret,se,error\n"));
    assert_eq!(csv.lines().count(), 1 + curve.rows.len());
    for target in &cfg.targets {
        let svg = std::fs::read_to_string(dir.path().join(format!("regret_{}.svg", target.name))).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }
}

#[test]
fn failing_cells_are_reported_and_skipped() {
    let mut cfg = tiny_config();
    cfg.sample_sizes = vec![30, 60];
    let curve = run_experiment(&cfg).unwrap();
    let failures: Vec<_> = curve.failures().collect();
    assert!(!failures.is_empty());
    for row in &failures {
        assert_eq!(row.n, 30);
        assert!(row.regret.is_nan());
        assert!(row.error.as_deref().unwrap().contains("no training observations"));
    }
    assert!(curve.rows.iter().any(|r| r.n == 60 && r.error.is_none()));
}

#[test]
fn single_source_reductions_coincide() {
    let params = sample_params(1, 4, 2, 5.0, 3).unwrap();
    let sim = generate_source(&params[0], "s1", 120, 4).unwrap();
    let scores = compute_oracle_scores(std::slice::from_ref(&sim)).unwrap();
    let base = train_baselines(&scores, &scores, 2).unwrap();
    assert_eq!(base.aggregate, base.source);
    let cover = build_cover(&WeightSetSpec::full_simplex(1), 0.1).unwrap();
    let eg = run_egopo(&scores, &cover, &EgopoConfig::default()).unwrap();
    assert_eq!(eg.policy, base.aggregate);
}

#[test]
fn identical_sources_give_matching_baselines() {
    let one = sample_params(1, 4, 2, 5.0, 5).unwrap().remove(0);
    let params = vec![one.clone(), one.clone(), one];
    let lambda = MixtureWeights::vertex(0, 3);
    let reference = robust_opo::harness::train_reference(&params, &lambda, 2000, 2, 1).unwrap();
    let (mut agg, mut src) = (0.0, 0.0);
    let mut se2 = 0.0;
    for seed in 0..4 {
        let pooled = generate_sources(&params, &[200, 200, 200], seed).unwrap();
        let alone = generate_source(&params[0], "s1", 600, 100 + seed).unwrap();
        let base = train_baselines(
            &compute_oracle_scores(&pooled).unwrap(),
            &compute_oracle_scores(std::slice::from_ref(&alone)).unwrap(),
            2,
        )
        .unwrap();
        let est = true_regrets(&[&base.aggregate, &base.source], &reference, &params, &lambda, 20_000, seed).unwrap();
        agg += est[0].mean / 4.0;
        src += est[1].mean / 4.0;
        se2 += (est[0].se.powi(2) + est[1].se.powi(2)) / 16.0;
    }
    // both are trained on the same number of draws from one distribution
    assert!((agg - src).abs() <= 3.0 * se2.sqrt() + 0.05, "aggregate {agg} vs source {src}");
}
