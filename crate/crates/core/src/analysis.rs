//! Phase averaging and the statistics used to tell collapse (Pb = 1/8) from
//! persistent superposition (Pb = 3/8) given detector-D counts.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

use crate::error::{Error, Result};
use crate::scenario::{pb_coherent_fixed, ScenarioConfig, COLLAPSE_CONFOUND_THETA};

/// Click probability under state-vector collapse.
pub const P_COLLAPSE: f64 = 0.125;
/// Click probability under persistent superposition with random phases.
pub const P_PERSISTENCE: f64 = 0.375;

/// Largest experiment `required_trials` will search before giving up.
pub const MAX_DESIGN_TRIALS: u64 = 1_000_000;

/// Midpoint-rule mean of `kernel` over [0, 2π).
///
/// Exact (up to rounding) for trigonometric polynomials of degree below
/// `n_nodes`.
pub fn quadrature_average<F: FnMut(f64) -> f64>(mut kernel: F, n_nodes: usize) -> Result<f64> {
    if n_nodes < 2 {
        return Err(Error::config(
            "n_nodes",
            format!("need at least 2 nodes, got {n_nodes}"),
        ));
    }
    let h = TAU / n_nodes as f64;
    let sum: f64 = (0..n_nodes).map(|k| kernel((k as f64 + 0.5) * h)).sum();
    Ok(sum / n_nodes as f64)
}

/// Midpoint-rule mean over the torus [0, 2π)², `n_nodes` per axis.
pub fn quadrature_average_2d<F: FnMut(f64, f64) -> f64>(
    mut kernel: F,
    n_nodes: usize,
) -> Result<f64> {
    if n_nodes < 2 {
        return Err(Error::config(
            "n_nodes",
            format!("need at least 2 nodes, got {n_nodes}"),
        ));
    }
    let h = TAU / n_nodes as f64;
    let mut sum = 0.0;
    for i in 0..n_nodes {
        let a = (i as f64 + 0.5) * h;
        for j in 0..n_nodes {
            sum += kernel(a, (j as f64 + 0.5) * h);
        }
    }
    Ok(sum / (n_nodes * n_nodes) as f64)
}

fn check_probability(key: &str, p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("{p} is not strictly between 0 and 1"),
        ))
    }
}

fn check_counts(clicks: u64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::config("n", "at least one trial is required"));
    }
    if clicks > n {
        return Err(Error::config(
            "clicks",
            format!("{clicks} clicks exceed {n} trials"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval {
    pub lo: f64,
    pub hi: f64,
}

impl WilsonInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Two-sided Wilson score interval for a binomial proportion.
pub fn wilson_interval(clicks: u64, n: u64, confidence: f64) -> Result<WilsonInterval> {
    check_counts(clicks, n)?;
    check_probability("confidence", confidence)?;
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let n = n as f64;
    let p_hat = clicks as f64 / n;
    let z2n = z * z / n;
    let center = (p_hat + z2n / 2.0) / (1.0 + z2n);
    let half = z / (1.0 + z2n) * (p_hat * (1.0 - p_hat) / n + z2n / (4.0 * n)).sqrt();
    // Rounding can push the bounds a hair past the point estimate at 0 or n clicks.
    Ok(WilsonInterval {
        lo: (center - half).clamp(0.0, p_hat),
        hi: (center + half).clamp(p_hat, 1.0),
    })
}

/// ln L(p1) − ln L(p0) for `clicks` out of `n`, in nats.
pub fn log_likelihood_ratio(clicks: u64, n: u64, p0: f64, p1: f64) -> Result<f64> {
    check_probability("p0", p0)?;
    check_probability("p1", p1)?;
    if clicks > n {
        return Err(Error::config(
            "clicks",
            format!("{clicks} clicks exceed {n} trials"),
        ));
    }
    let misses = (n - clicks) as f64;
    Ok(clicks as f64 * (p1 / p0).ln() + misses * ((1.0 - p1) / (1.0 - p0)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    /// Reject when clicks ≥ critical.
    Upper,
    /// Reject when clicks ≤ critical.
    Lower,
}

/// One-sided exact binomial test of p0 against p1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactBinomialTest {
    pub n: u64,
    pub tail: Tail,
    /// `None` when no outcome is extreme enough to reject at this size.
    pub critical: Option<u64>,
    /// Exact rejection probability under p0.
    pub size: f64,
    /// Exact rejection probability under p1.
    pub power: f64,
}

fn upper_tail(b: &Binomial, k: u64) -> f64 {
    if k == 0 {
        1.0
    } else {
        b.sf(k - 1)
    }
}

impl ExactBinomialTest {
    /// Most powerful one-sided test with size ≤ `alpha` at `n` trials.
    pub fn at(n: u64, p0: f64, p1: f64, alpha: f64) -> Result<Self> {
        check_probability("p0", p0)?;
        check_probability("p1", p1)?;
        check_probability("alpha", alpha)?;
        if n == 0 {
            return Err(Error::config("n", "at least one trial is required"));
        }
        let null = Binomial::new(p0, n).map_err(|e| Error::config("p0", e.to_string()))?;
        let alt = Binomial::new(p1, n).map_err(|e| Error::config("p1", e.to_string()))?;
        let tail = if p1 > p0 { Tail::Upper } else { Tail::Lower };
        let test = match tail {
            Tail::Upper => {
                // Smallest k with P0(X ≥ k) ≤ alpha; tails decrease in k.
                let (mut lo, mut hi) = (0u64, n + 1);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if upper_tail(&null, mid) <= alpha {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                if lo > n {
                    Self {
                        n,
                        tail,
                        critical: None,
                        size: 0.0,
                        power: 0.0,
                    }
                } else {
                    Self {
                        n,
                        tail,
                        critical: Some(lo),
                        size: upper_tail(&null, lo),
                        power: upper_tail(&alt, lo),
                    }
                }
            }
            Tail::Lower => {
                // Largest k with P0(X ≤ k) ≤ alpha; count how many k qualify.
                let (mut lo, mut hi) = (0u64, n + 1);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if null.cdf(mid) <= alpha {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                match lo.checked_sub(1) {
                    None => Self {
                        n,
                        tail,
                        critical: None,
                        size: 0.0,
                        power: 0.0,
                    },
                    Some(k) => Self {
                        n,
                        tail,
                        critical: Some(k),
                        size: null.cdf(k),
                        power: alt.cdf(k),
                    },
                }
            }
        };
        Ok(test)
    }

    /// Smallest experiment whose exact test has size ≤ `alpha` and power ≥ `power`.
    pub fn design(p0: f64, p1: f64, alpha: f64, power: f64) -> Result<Self> {
        check_probability("p0", p0)?;
        check_probability("p1", p1)?;
        check_probability("alpha", alpha)?;
        check_probability("power", power)?;
        if p0 == p1 {
            return Err(Error::config("p1", "hypotheses are identical"));
        }
        for n in 1..=MAX_DESIGN_TRIALS {
            let test = Self::at(n, p0, p1, alpha)?;
            if test.critical.is_some() && test.power >= power {
                return Ok(test);
            }
        }
        Err(Error::config(
            "power",
            format!("not reachable within {MAX_DESIGN_TRIALS} trials"),
        ))
    }

    pub fn rejects(&self, clicks: u64) -> bool {
        match (self.tail, self.critical) {
            (_, None) => false,
            (Tail::Upper, Some(c)) => clicks >= c,
            (Tail::Lower, Some(c)) => clicks <= c,
        }
    }
}

pub fn required_trials(p0: f64, p1: f64, alpha: f64, power: f64) -> Result<u64> {
    Ok(ExactBinomialTest::design(p0, p1, alpha, power)?.n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    FavorsCollapse,
    FavorsPersistence,
    Inconclusive,
}

/// A coherent phase that makes the superposed absorber click exactly like collapse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confound {
    pub theta: f64,
    pub probability: f64,
    pub caveat: String,
}

impl Confound {
    fn coherent_fixed() -> Self {
        let probability = pb_coherent_fixed(COLLAPSE_CONFOUND_THETA).probability;
        Self {
            theta: COLLAPSE_CONFOUND_THETA,
            probability,
            caveat: format!(
                "a coherent fixed-phase coupling at theta = pi/4 gives Pb(D) = {probability:.12} \
                 which is indistinguishable from collapse; this test only compares the two point \
                 hypotheses and cannot exclude the fixed-phase family"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub clicks: u64,
    pub n: u64,
    pub p0: f64,
    pub p1: f64,
    /// Positive favors p1.
    pub log_likelihood_ratio: f64,
    pub wilson_interval: WilsonInterval,
    pub confidence: f64,
    pub verdict: Verdict,
    pub confound: Confound,
}

/// Collapse (1/8) against persistence (3/8).
pub fn discriminate(clicks: u64, n: u64, confidence: f64) -> Result<DiscriminationReport> {
    discriminate_between(clicks, n, confidence, P_COLLAPSE, P_PERSISTENCE)
}

/// A hypothesis is retained when the Wilson interval covers it. The verdict
/// names the hypothesis retained alone; retaining both or neither is
/// inconclusive.
pub fn discriminate_between(
    clicks: u64,
    n: u64,
    confidence: f64,
    p0: f64,
    p1: f64,
) -> Result<DiscriminationReport> {
    let interval = wilson_interval(clicks, n, confidence)?;
    let llr = log_likelihood_ratio(clicks, n, p0, p1)?;
    let verdict = match (interval.contains(p0), interval.contains(p1)) {
        (true, false) => Verdict::FavorsCollapse,
        (false, true) => Verdict::FavorsPersistence,
        _ => Verdict::Inconclusive,
    };
    Ok(DiscriminationReport {
        clicks,
        n,
        p0,
        p1,
        log_likelihood_ratio: llr,
        wilson_interval: interval,
        confidence,
        verdict,
        confound: Confound::coherent_fixed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub probability: f64,
}

/// Detector-D probability on the grid θ_k = 2πk/n, k = 0..n.
pub fn sweep_theta(model: &ScenarioConfig, n_points: usize) -> Result<Vec<SweepRow>> {
    if n_points < 2 {
        return Err(Error::config(
            "points",
            format!("need at least 2 points, got {n_points}"),
        ));
    }
    (0..n_points)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n_points as f64;
            Ok(SweepRow {
                theta,
                probability: model.probability_at(theta)?,
            })
        })
        .collect()
}
