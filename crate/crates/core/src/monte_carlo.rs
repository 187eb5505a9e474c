//! Seeded trial runner.
//!
//! Every trial consumes exactly [`DRAWS_PER_TRIAL`] 64-bit words from a single
//! ChaCha8 stream, and trial `t` starts at word `t * DRAWS_PER_TRIAL`. A worker
//! that owns the range `[start, start + len)` seeks straight to its offset, so
//! any partition of a run merges back into the same counts as one sequential
//! pass.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::AbsorberBranch;
use crate::scenario::{Evolved, Outcome, Outcomes, Phases, ScenarioConfig};

/// Recorded in every output so runs can be audited.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64, stream 0)";

/// Uniforms per trial: first phase, second phase, absorber branch, outcome.
pub const DRAWS_PER_TRIAL: u64 = 4;

/// Trials per parallel work item.
pub const CHUNK_TRIALS: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub n_trials: u64,
    pub clicks_d: u64,
    pub clicks_c: u64,
    pub absorbed: u64,
    pub estimate_d: f64,
    pub std_err_d: f64,
    pub seed: u64,
    pub model: ScenarioConfig,
}

impl TrialSummary {
    fn from_counts(
        model: ScenarioConfig,
        seed: u64,
        clicks_d: u64,
        clicks_c: u64,
        absorbed: u64,
    ) -> Self {
        let n_trials = clicks_d + clicks_c + absorbed;
        let estimate_d = clicks_d as f64 / n_trials as f64;
        Self {
            n_trials,
            clicks_d,
            clicks_c,
            absorbed,
            estimate_d,
            std_err_d: (estimate_d * (1.0 - estimate_d) / n_trials as f64).sqrt(),
            seed,
            model,
        }
    }
}

/// 53 high bits of `x` mapped onto [0, 1).
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One run with the absorber re-prepared from scratch.
fn trial(config: &ScenarioConfig, u: [f64; 4]) -> Result<Outcome> {
    let phases = match config.model.random_phases() {
        0 => Phases::default(),
        1 => Phases::new(TAU * u[0], 0.0),
        _ => Phases::new(TAU * u[0], TAU * u[1]),
    };
    let dist = match config.evolve(phases)? {
        Evolved::Photon(p) => Outcomes::read(&p),
        Evolved::Joint(j) => {
            let branch = if u[2] < j.weight(AbsorberBranch::PosA).norm_sqr() {
                AbsorberBranch::PosA
            } else {
                AbsorberBranch::PosB
            };
            Outcomes::read(j.photon(branch))
        }
    };
    Ok(dist.sample(u[3]))
}

/// Trials `start .. start + len` of the run identified by `seed`.
pub fn run_range(config: &ScenarioConfig, seed: u64, start: u64, len: u64) -> Result<TrialSummary> {
    config.validate()?;
    if len == 0 {
        return Err(Error::config("n_trials", "at least one trial is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // word_pos counts 32-bit words.
    rng.set_word_pos(u128::from(start) * u128::from(DRAWS_PER_TRIAL) * 2);
    let (mut d, mut c, mut a) = (0u64, 0u64, 0u64);
    for _ in 0..len {
        let u = std::array::from_fn(|_| unit(rng.next_u64()));
        match trial(config, u)? {
            Outcome::DetectorD => d += 1,
            Outcome::DetectorC => c += 1,
            Outcome::Absorbed => a += 1,
        }
    }
    Ok(TrialSummary::from_counts(*config, seed, d, c, a))
}

/// `n_trials` runs, fanned out over the rayon pool in [`CHUNK_TRIALS`] ranges.
///
/// The result does not depend on the number of worker threads.
pub fn run_trials(config: &ScenarioConfig, n_trials: u64, seed: u64) -> Result<TrialSummary> {
    config.validate()?;
    if n_trials == 0 {
        return Err(Error::config("n_trials", "at least one trial is required"));
    }
    let chunks = n_trials.div_ceil(CHUNK_TRIALS);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let start = k * CHUNK_TRIALS;
            run_range(config, seed, start, CHUNK_TRIALS.min(n_trials - start))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut parts = parts.into_iter();
    let first = parts
        .next()
        .expect("n_trials >= 1 gives at least one chunk");
    parts.try_fold(first, |acc, p| merge(&acc, &p))
}

/// Pool two summaries of the same scenario and seed.
pub fn merge(a: &TrialSummary, b: &TrialSummary) -> Result<TrialSummary> {
    if a.model != b.model {
        return Err(Error::ModelMismatch);
    }
    if a.seed != b.seed {
        return Err(Error::SeedMismatch(a.seed, b.seed));
    }
    Ok(TrialSummary::from_counts(
        a.model,
        a.seed,
        a.clicks_d + b.clicks_d,
        a.clicks_c + b.clicks_c,
        a.absorbed + b.absorbed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Model;
    use proptest::prelude::*;

    #[test]
    fn unit_interval() {
        assert_eq!(unit(0), 0.0);
        assert!(unit(u64::MAX) < 1.0);
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = ScenarioConfig::new(Model::CollapsedMixture);
        assert!(run_trials(&cfg, 0, 1).unwrap_err().is_config());
        assert!(run_range(&cfg, 1, 5, 0).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = ScenarioConfig::new(Model::CoherentFixed);
        assert!(run_trials(&cfg, 10, 1).is_err());
    }

    #[test]
    fn clear_absorber_never_clicks() {
        let cfg = ScenarioConfig::new(Model::CollapsedMixture).with_weights(1.0, 0.0);
        let s = run_trials(&cfg, 200_000, 9).unwrap();
        assert_eq!(s.clicks_d, 0);
        assert_eq!(s.absorbed, 0);
        assert_eq!(s.clicks_c, 200_000);
    }

    #[test]
    fn deterministic() {
        for model in Model::ALL {
            let cfg = match model {
                Model::CoherentFixed => ScenarioConfig::coherent_fixed(0.3),
                m => ScenarioConfig::new(m),
            };
            let a = run_trials(&cfg, 150_000, 42).unwrap();
            let b = run_trials(&cfg, 150_000, 42).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.n_trials, a.clicks_d + a.clicks_c + a.absorbed);
            let c = run_trials(&cfg, 150_000, 43).unwrap();
            assert_ne!((a.clicks_d, a.clicks_c), (c.clicks_d, c.clicks_c));
        }
    }

    #[test]
    fn merge_checks_identity() {
        let cfg = ScenarioConfig::new(Model::CollapsedMixture);
        let a = run_range(&cfg, 1, 0, 100).unwrap();
        let other_seed = run_range(&cfg, 2, 100, 100).unwrap();
        assert!(matches!(
            merge(&a, &other_seed),
            Err(Error::SeedMismatch(1, 2))
        ));
        let other_model = run_range(&ScenarioConfig::new(Model::BlockedBoth), 1, 100, 100).unwrap();
        assert!(matches!(merge(&a, &other_model), Err(Error::ModelMismatch)));
    }

    #[test]
    fn summary_statistics() {
        let s = TrialSummary::from_counts(ScenarioConfig::new(Model::CollapsedMixture), 0, 1, 2, 1);
        assert_eq!(s.n_trials, 4);
        assert_eq!(s.estimate_d, 0.25);
        assert!((s.std_err_d - (0.25f64 * 0.75 / 4.0).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn any_split_merges_to_the_full_run(n in 2u64..3000, cut in 1u64..3000, seed: u64, m in 0usize..6) {
            let cut = 1 + cut % (n - 1);
            let cfg = match Model::ALL[m] {
                Model::CoherentFixed => ScenarioConfig::coherent_fixed(1.0),
                model => ScenarioConfig::new(model),
            };
            let whole = run_range(&cfg, seed, 0, n).unwrap();
            let left = run_range(&cfg, seed, 0, cut).unwrap();
            let right = run_range(&cfg, seed, cut, n - cut).unwrap();
            prop_assert_eq!(&merge(&left, &right).unwrap(), &whole);
            prop_assert_eq!(&merge(&right, &left).unwrap(), &whole);
        }

        #[test]
        fn merge_is_associative(seed: u64, a in 1u64..500, b in 1u64..500, c in 1u64..500) {
            let cfg = ScenarioConfig::new(Model::EntangledRandomPhase);
            let x = run_range(&cfg, seed, 0, a).unwrap();
            let y = run_range(&cfg, seed, a, b).unwrap();
            let z = run_range(&cfg, seed, a + b, c).unwrap();
            let left = merge(&merge(&x, &y).unwrap(), &z).unwrap();
            let right = merge(&x, &merge(&y, &z).unwrap()).unwrap();
            prop_assert_eq!(left.n_trials, a + b + c);
            prop_assert_eq!(left, right);
        }
    }
}
