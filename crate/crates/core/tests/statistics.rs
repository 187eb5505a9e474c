use mz_absorber::analysis::{
    discriminate, log_likelihood_ratio, wilson_interval, ExactBinomialTest, Verdict,
};
use mz_absorber::monte_carlo::run_trials;
use mz_absorber::scenario::{Model, ScenarioConfig};

fn config(model: Model) -> ScenarioConfig {
    match model {
        Model::CoherentFixed => ScenarioConfig::coherent_fixed(1.1),
        m => ScenarioConfig::new(m),
    }
}

#[test]
fn monte_carlo_converges_for_every_model() {
    const SEEDS: u64 = 100;
    const N: u64 = 100_000;
    for model in Model::ALL {
        let cfg = config(model);
        let expected = cfg.analytic().unwrap().probability;
        let within = (0..SEEDS)
            .filter(|&seed| {
                let s = run_trials(&cfg, N, 1_000 + seed).unwrap();
                (s.estimate_d - expected).abs() < 4.0 * s.std_err_d
            })
            .count();
        println!("{model}: {within}/{SEEDS} seeds within 4 standard errors of {expected}");
        assert!(within >= 99, "{model}: only {within} of {SEEDS}");
    }
}

#[test]
fn outcome_frequencies_match_closed_form() {
    // Beyond detector D: C and absorbed counts track the exact distribution too.
    for model in Model::ALL {
        let cfg = config(model);
        let s = run_trials(&cfg, 400_000, 7).unwrap();
        let n = s.n_trials as f64;
        let (c, a) = match model {
            Model::CollapsedMixture | Model::FineTunedMimic => (0.625, 0.25),
            Model::EntangledRandomPhase | Model::RandomLower => (0.375, 0.25),
            Model::CoherentFixed => (1.0 - 0.25 - cfg.analytic().unwrap().probability, 0.25),
            Model::BlockedBoth => (0.25, 0.5),
        };
        for (count, p) in [(s.clicks_c, c), (s.absorbed, a)] {
            let se = (p * (1.0 - p) / n).sqrt();
            assert!(
                (count as f64 / n - p).abs() < 5.0 * se,
                "{model}: {count} vs {p}"
            );
        }
    }
}

/// Closed-form Wilson bounds with z fixed by table lookup.
fn wilson_oracle(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = p + z * z / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    ((center - spread) / denom, (center + spread) / denom)
}

#[test]
fn wilson_matches_closed_form() {
    let cases = [(0.95, 1.959_963_984_540_054), (0.99, 2.575_829_303_548_901)];
    for (confidence, z) in cases {
        for (k, n) in [
            (0, 100),
            (1, 100),
            (50, 100),
            (125, 1000),
            (375, 1000),
            (2, 10),
            (10, 10),
        ] {
            let w = wilson_interval(k, n, confidence).unwrap();
            let (lo, hi) = wilson_oracle(k, n, z);
            assert!((w.lo - lo.max(0.0)).abs() < 1e-12, "{k}/{n}@{confidence}");
            assert!((w.hi - hi.min(1.0)).abs() < 1e-12, "{k}/{n}@{confidence}");
            let p = k as f64 / n as f64;
            assert!(w.lo <= p && p <= w.hi);
        }
    }
    let w = wilson_interval(0, 100, 0.95).unwrap();
    assert!(w.lo == 0.0 && w.hi < 0.05);
    assert!(wilson_interval(125, 1000, 0.99).unwrap().contains(0.125));
}

#[test]
fn llr_matches_direct_evaluation() {
    let direct = |k: f64, n: f64, p0: f64, p1: f64| {
        (p1.powf(k) * (1.0 - p1).powf(n - k) / (p0.powf(k) * (1.0 - p0).powf(n - k))).ln()
    };
    for (k, n) in [(3u64, 20u64), (10, 20), (0, 15), (15, 15)] {
        let got = log_likelihood_ratio(k, n, 0.125, 0.375).unwrap();
        assert!((got - direct(k as f64, n as f64, 0.125, 0.375)).abs() < 1e-9);
    }
    assert!(log_likelihood_ratio(375, 1000, 0.125, 0.375).unwrap() > 0.0);
    assert!(log_likelihood_ratio(125, 1000, 0.125, 0.375).unwrap() < 0.0);
}

#[test]
fn discrimination_examples() {
    assert_eq!(
        discriminate(375, 1000, 0.99).unwrap().verdict,
        Verdict::FavorsPersistence
    );
    assert_eq!(
        discriminate(125, 1000, 0.99).unwrap().verdict,
        Verdict::FavorsCollapse
    );
    assert_eq!(
        discriminate(2, 10, 0.99).unwrap().verdict,
        Verdict::Inconclusive
    );
    assert!(discriminate(11, 10, 0.99).is_err());
}

#[test]
fn every_report_discloses_the_phase_confound() {
    for (k, n) in [(0, 1), (5, 40), (125, 1000), (375, 1000), (999, 1000)] {
        let r = discriminate(k, n, 0.95).unwrap();
        assert!((r.confound.probability - 0.125).abs() < 1e-12);
        assert!((r.confound.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(!r.confound.caveat.is_empty());
    }
}

#[test]
fn simulated_experiments_reach_design_power() {
    let test = ExactBinomialTest::design(0.125, 0.375, 0.05, 0.95).unwrap();
    let cfg = ScenarioConfig::new(Model::EntangledRandomPhase);
    let reps = 4_000u64;
    let rejected = (0..reps)
        .filter(|&seed| test.rejects(run_trials(&cfg, test.n, seed).unwrap().clicks_d))
        .count();
    let rate = rejected as f64 / reps as f64;
    let se = (test.power * (1.0 - test.power) / reps as f64).sqrt();
    println!("power {rate} vs exact {}", test.power);
    assert!((rate - test.power).abs() < 4.0 * se);
}
