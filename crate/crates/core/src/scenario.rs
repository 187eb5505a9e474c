//! The competing models of the absorber-photon system.
//!
//! Every model can be evaluated two ways: by brute-force evolution through
//! [`crate::interferometer`] (`engine_outcomes`) and by its closed form
//! (`closed_form_outcomes`). The two routes share no code.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{quadrature_average, quadrature_average_2d};
use crate::error::{Error, Result};
use crate::interferometer::{
    apply_phase, apply_superposed_absorber, evolve_device_with, evolve_joint, Arm, DeviceGeometry,
    JointState, PhotonState, Port, Readout, NORM_TOLERANCE,
};

/// |λ_A|² = |λ_B|² = 1/2 unless configured otherwise.
pub const DEFAULT_WEIGHT: f64 = 0.5;

/// Nodes per phase axis when averaging engine-only models.
const ENGINE_QUADRATURE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Absorber already in A or B when the photon passes.
    #[serde(rename = "collapsed")]
    CollapsedMixture,
    /// Superposed absorber, photon phase kicked uniformly at random each run.
    #[serde(rename = "entangled-random")]
    EntangledRandomPhase,
    /// Superposed absorber with one fixed, coherent phase.
    CoherentFixed,
    /// Lower photon split in two, one half sharing the upper photon's kick.
    FineTunedMimic,
    /// Independent random kicks on both arms.
    RandomLower,
    /// Absorber blocks the upper arm in A and the lower arm in B.
    BlockedBoth,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::CollapsedMixture,
        Model::EntangledRandomPhase,
        Model::CoherentFixed,
        Model::FineTunedMimic,
        Model::RandomLower,
        Model::BlockedBoth,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Model::CollapsedMixture => "collapsed",
            Model::EntangledRandomPhase => "entangled-random",
            Model::CoherentFixed => "coherent-fixed",
            Model::FineTunedMimic => "fine-tuned-mimic",
            Model::RandomLower => "random-lower",
            Model::BlockedBoth => "blocked-both",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Model::CollapsedMixture => {
                "absorber definitely in A (clear) or B (upper arm) before the photon arrives; Pb(D) = 1/8"
            }
            Model::EntangledRandomPhase => {
                "superposed absorber with the surviving upper photon given a uniform random phase each run; Pb(D) = 3/8"
            }
            Model::CoherentFixed => {
                "superposed absorber with a fixed phase theta; Pb(D) = |3 - 2*sqrt(2)*cos(theta)|/8"
            }
            Model::FineTunedMimic => {
                "lower photon split into an unperturbed half and a half sharing the upper kick; reproduces 1/8"
            }
            Model::RandomLower => "independent random kicks on upper and lower arms; averages to 3/8",
            Model::BlockedBoth => "absorber blocks the upper arm in A and the lower arm in B; no interference",
        }
    }

    /// Number of uniformly random phases drawn per run.
    pub fn random_phases(self) -> usize {
        match self {
            Model::CollapsedMixture | Model::CoherentFixed => 0,
            Model::EntangledRandomPhase | Model::FineTunedMimic => 1,
            Model::RandomLower | Model::BlockedBoth => 2,
        }
    }

    fn default_geometry(self) -> DeviceGeometry {
        match self {
            Model::BlockedBoth => DeviceGeometry::BLOCKED_BOTH,
            _ => DeviceGeometry::MAIN,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL.into_iter().find(|m| m.id() == s).ok_or_else(|| {
            let known: Vec<_> = Model::ALL.iter().map(|m| m.id()).collect();
            Error::config(
                "model",
                format!("unknown model `{s}` (expected one of {})", known.join(", ")),
            )
        })
    }
}

/// Per-run phases. Which ones a model reads:
///
/// * `EntangledRandomPhase`: `first` kicks the surviving upper photon.
/// * `FineTunedMimic`: `first` is the shared kick.
/// * `RandomLower`: `first` on the upper arm, `second` on the lower arm.
/// * `BlockedBoth`: `first` on the survivor in branch A, `second` in branch B.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Phases {
    pub first: f64,
    pub second: f64,
}

impl Phases {
    pub fn new(first: f64, second: f64) -> Self {
        Self { first, second }
    }
}

/// Exact three-point distribution of a single run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcomes {
    pub detector_d: f64,
    pub detector_c: f64,
    pub absorbed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    DetectorD,
    DetectorC,
    Absorbed,
}

impl Outcomes {
    pub fn read<S: Readout + ?Sized>(s: &S) -> Self {
        Self {
            detector_d: s.probability(Port::DETECTOR_D),
            detector_c: s.probability(Port::DETECTOR_C),
            absorbed: s.probability(Port::Absorbed),
        }
    }

    pub fn total(&self) -> f64 {
        self.detector_d + self.detector_c + self.absorbed
    }

    /// Inverse-CDF pick with `u` uniform on [0, 1).
    pub fn sample(&self, u: f64) -> Outcome {
        if u < self.detector_d {
            Outcome::DetectorD
        } else if u < self.detector_d + self.detector_c {
            Outcome::DetectorC
        } else {
            Outcome::Absorbed
        }
    }

    fn scaled(self, w: f64) -> Self {
        Self {
            detector_d: w * self.detector_d,
            detector_c: w * self.detector_c,
            absorbed: w * self.absorbed,
        }
    }

    fn plus(self, o: Self) -> Self {
        Self {
            detector_d: self.detector_d + o.detector_d,
            detector_c: self.detector_c + o.detector_c,
            absorbed: self.absorbed + o.absorbed,
        }
    }
}

/// Result of a brute-force evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evolved {
    Photon(PhotonState),
    Joint(JointState),
}

impl Readout for Evolved {
    fn probability(&self, port: Port) -> f64 {
        match self {
            Evolved::Photon(s) => s.probability(port),
            Evolved::Joint(j) => j.probability(port),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    JointEngine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticResult {
    pub probability: f64,
    pub model: ScenarioConfig,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub model: Model,
    /// |λ_A|², weight of the absorber-clear branch.
    pub weight_a2: f64,
    /// |λ_B|², weight of the absorber-in-path branch.
    pub weight_b2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_theta: Option<f64>,
    pub geometry: DeviceGeometry,
}

impl ScenarioConfig {
    /// Default weights and geometry. `CoherentFixed` still needs a theta.
    pub fn new(model: Model) -> Self {
        Self {
            model,
            weight_a2: DEFAULT_WEIGHT,
            weight_b2: DEFAULT_WEIGHT,
            fixed_theta: None,
            geometry: model.default_geometry(),
        }
    }

    pub fn coherent_fixed(theta: f64) -> Self {
        Self::new(Model::CoherentFixed).with_theta(theta)
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.fixed_theta = Some(theta);
        self
    }

    pub fn with_weights(mut self, weight_a2: f64, weight_b2: f64) -> Self {
        self.weight_a2 = weight_a2;
        self.weight_b2 = weight_b2;
        self
    }

    pub fn with_geometry(mut self, geometry: DeviceGeometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (key, w) in [("weight_a2", self.weight_a2), ("weight_b2", self.weight_b2)] {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(Error::config(key, format!("{w} is not a probability")));
            }
        }
        let sum = self.weight_a2 + self.weight_b2;
        if (sum - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::config(
                "weight_b2",
                format!("branch weights sum to {sum}, not 1"),
            ));
        }
        match (self.model, self.fixed_theta) {
            (Model::CoherentFixed, None) => {
                return Err(Error::config(
                    "fixed_theta",
                    "required by the coherent-fixed model",
                ));
            }
            (Model::CoherentFixed, Some(t)) if !t.is_finite() => {
                return Err(Error::config("fixed_theta", format!("{t} is not finite")));
            }
            (Model::CoherentFixed, Some(_)) => {}
            (m, Some(_)) => {
                return Err(Error::config(
                    "fixed_theta",
                    format!("only valid for coherent-fixed, not {m}"),
                ));
            }
            (_, None) => {}
        }
        let geometry_ok = match self.model {
            Model::CollapsedMixture | Model::FineTunedMimic => true,
            Model::BlockedBoth => self.geometry == DeviceGeometry::BLOCKED_BOTH,
            _ => self.geometry == DeviceGeometry::MAIN,
        };
        if !geometry_ok {
            return Err(Error::config(
                "geometry",
                format!("{:?} is not supported by {}", self.geometry, self.model),
            ));
        }
        Ok(())
    }

    fn joint_input(&self) -> Result<JointState> {
        let la = Complex64::new(self.weight_a2.sqrt(), 0.0);
        let lb = Complex64::new(self.weight_b2.sqrt(), 0.0);
        Ok(JointState::product(la, lb, PhotonState::mode_one())?)
    }

    fn superposed_kick(&self, upper: f64, lower: f64) -> Result<PhotonState> {
        let mut failure = None;
        let out = evolve_device_with(
            PhotonState::mode_one(),
            |s| match apply_superposed_absorber(s, Arm::Upper.mode(), self.weight_a2, upper) {
                Ok(s) => apply_phase(s, Arm::Lower.mode(), lower),
                Err(e) => {
                    failure = Some(e);
                    s
                }
            },
        );
        match failure {
            Some(e) => Err(e.into()),
            None => Ok(out),
        }
    }

    /// Brute-force evolution of one run through the interferometer engine.
    pub fn evolve(&self, phases: Phases) -> Result<Evolved> {
        self.validate()?;
        Ok(match self.model {
            Model::CollapsedMixture => {
                Evolved::Joint(evolve_joint(self.joint_input()?, self.geometry, 0.0, 0.0))
            }
            Model::EntangledRandomPhase => {
                Evolved::Photon(self.superposed_kick(phases.first, 0.0)?)
            }
            Model::CoherentFixed => {
                let theta = self.fixed_theta.unwrap_or_default();
                Evolved::Photon(self.superposed_kick(theta, 0.0)?)
            }
            Model::FineTunedMimic => Evolved::Joint(evolve_joint(
                self.joint_input()?,
                self.geometry,
                phases.first,
                0.0,
            )),
            Model::RandomLower => {
                Evolved::Photon(self.superposed_kick(phases.first, phases.second)?)
            }
            Model::BlockedBoth => Evolved::Joint(evolve_joint(
                self.joint_input()?,
                self.geometry,
                phases.first,
                phases.second,
            )),
        })
    }

    pub fn engine_outcomes(&self, phases: Phases) -> Result<Outcomes> {
        Ok(Outcomes::read(&self.evolve(phases)?))
    }

    /// Closed-form three-point distribution for one run.
    pub fn closed_form_outcomes(&self, phases: Phases) -> Result<Outcomes> {
        self.validate()?;
        let wa = self.weight_a2;
        Ok(match self.model {
            Model::CollapsedMixture | Model::FineTunedMimic | Model::BlockedBoth => {
                let branch = |blocked: Option<Arm>| match blocked {
                    Some(_) => Outcomes {
                        detector_d: 0.25,
                        detector_c: 0.25,
                        absorbed: 0.5,
                    },
                    None => Outcomes {
                        detector_d: 0.0,
                        detector_c: 1.0,
                        absorbed: 0.0,
                    },
                };
                branch(self.geometry.blocked_in_a)
                    .scaled(wa)
                    .plus(branch(self.geometry.blocked_in_b).scaled(self.weight_b2))
            }
            Model::EntangledRandomPhase => superposed_closed_form(wa, phases.first),
            Model::CoherentFixed => {
                superposed_closed_form(wa, self.fixed_theta.unwrap_or_default())
            }
            Model::RandomLower => superposed_closed_form(wa, phases.first - phases.second),
        })
    }

    /// Detector-D probability at a single phase, as tabulated by a sweep.
    ///
    /// Two-phase models hold the second phase at zero; `CoherentFixed` sweeps
    /// its fixed theta.
    pub fn probability_at(&self, theta: f64) -> Result<f64> {
        let cfg = match self.model {
            Model::CoherentFixed => self.with_theta(theta),
            _ => *self,
        };
        Ok(cfg.engine_outcomes(Phases::new(theta, 0.0))?.detector_d)
    }

    /// Ensemble detector-D probability with the model's phases averaged out.
    pub fn analytic(&self) -> Result<AnalyticResult> {
        self.validate()?;
        let (probability, method) = match self.model {
            Model::CollapsedMixture if self.geometry == DeviceGeometry::MAIN => (
                pb_collapsed(self.weight_a2, self.weight_b2)?.probability,
                Method::ClosedForm,
            ),
            Model::CollapsedMixture => (
                self.engine_outcomes(Phases::default())?.detector_d,
                Method::JointEngine,
            ),
            Model::EntangledRandomPhase | Model::RandomLower => {
                ((1.0 + self.weight_a2) / 4.0, Method::ClosedForm)
            }
            Model::CoherentFixed => {
                let theta = self.fixed_theta.unwrap_or_default();
                (
                    superposed_closed_form(self.weight_a2, theta).detector_d,
                    Method::ClosedForm,
                )
            }
            Model::FineTunedMimic => {
                let engine = |t| {
                    self.engine_outcomes(Phases::new(t, 0.0))
                        .map(|o| o.detector_d)
                };
                (try_quadrature(engine)?, Method::Quadrature)
            }
            Model::BlockedBoth => {
                let mut failure = None;
                let avg = quadrature_average_2d(
                    |a, b| match self.engine_outcomes(Phases::new(a, b)) {
                        Ok(o) => o.detector_d,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    ENGINE_QUADRATURE_NODES,
                )?;
                if let Some(e) = failure {
                    return Err(e);
                }
                (avg, Method::Quadrature)
            }
        };
        Ok(AnalyticResult {
            probability,
            model: *self,
            method,
        })
    }
}

fn try_quadrature<F: Fn(f64) -> Result<f64>>(kernel: F) -> Result<f64> {
    let mut failure = None;
    let avg = quadrature_average(
        |t| match kernel(t) {
            Ok(p) => p,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        ENGINE_QUADRATURE_NODES,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(avg),
    }
}

/// Upper arm partially absorbed (survival |λ_A|², phase `delta` relative to
/// the lower arm), then recombined.
fn superposed_closed_form(wa: f64, delta: f64) -> Outcomes {
    let cross = 2.0 * wa.sqrt() * delta.cos();
    Outcomes {
        detector_d: (1.0 + wa - cross) / 4.0,
        detector_c: (1.0 + wa + cross) / 4.0,
        absorbed: (1.0 - wa) / 2.0,
    }
}

/// Click probability when the absorber is already in a definite position.
pub fn pb_collapsed(weight_a2: f64, weight_b2: f64) -> Result<AnalyticResult> {
    let model = ScenarioConfig::new(Model::CollapsedMixture).with_weights(weight_a2, weight_b2);
    model.validate()?;
    // Clear in A: never clicks. Blocked in B: a quarter of the photons reach D.
    Ok(AnalyticResult {
        probability: weight_b2 * 0.25,
        model,
        method: Method::ClosedForm,
    })
}

/// (3 − 2√2 cos θ)/8, the superposed-absorber click probability at phase θ.
pub fn pb_random_phase_given_theta(theta: f64) -> f64 {
    (3.0 - 2.0 * SQRT_2 * theta.cos()) / 8.0
}

/// Uniform average of [`pb_random_phase_given_theta`]: the cosine term vanishes.
pub fn pb_random_phase_average() -> AnalyticResult {
    AnalyticResult {
        probability: 3.0 / 8.0,
        model: ScenarioConfig::new(Model::EntangledRandomPhase),
        method: Method::ClosedForm,
    }
}

pub fn pb_coherent_fixed(theta: f64) -> AnalyticResult {
    let arg = 3.0 - 2.0 * SQRT_2 * theta.cos();
    debug_assert!(arg > 0.0, "3 > 2√2, so the argument is always positive");
    AnalyticResult {
        probability: arg.abs() / 8.0,
        model: ScenarioConfig::coherent_fixed(theta),
        method: Method::ClosedForm,
    }
}

fn engine_detector_d(model: ScenarioConfig, phases: Phases) -> f64 {
    model
        .engine_outcomes(phases)
        .expect("default scenario configurations are valid")
        .detector_d
}

/// Fine-tuned lower-photon coupling, evolved through the joint engine.
pub fn pb_fine_tuned_mimic(theta: f64) -> AnalyticResult {
    let model = ScenarioConfig::new(Model::FineTunedMimic);
    AnalyticResult {
        probability: engine_detector_d(model, Phases::new(theta, 0.0)),
        model,
        method: Method::JointEngine,
    }
}

/// Independent kicks on the upper survivor and the lower arm.
pub fn pb_random_lower(theta_upper: f64, theta_lower: f64) -> f64 {
    engine_detector_d(
        ScenarioConfig::new(Model::RandomLower),
        Phases::new(theta_upper, theta_lower),
    )
}

pub fn pb_blocked_both(theta_a: f64, theta_b: f64) -> AnalyticResult {
    let model = ScenarioConfig::new(Model::BlockedBoth);
    AnalyticResult {
        probability: engine_detector_d(model, Phases::new(theta_a, theta_b)),
        model,
        method: Method::JointEngine,
    }
}

/// Phase at which a coherent coupling reproduces the collapse click rate.
pub const COLLAPSE_CONFOUND_THETA: f64 = PI / 4.0;
