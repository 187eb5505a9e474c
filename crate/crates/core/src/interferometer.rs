//! Single-photon state evolution through the two-splitter Mach-Zehnder device.
//!
//! The photon lives in a three-dimensional space: mode |1⟩ (travelling right),
//! mode |2⟩ (travelling up) and an `absorbed` bookkeeping component. Between the
//! mirrors and the second splitter the upper arm carries |1⟩ and the lower arm
//! carries |2⟩; that is where the absorber sits.
//!
//! Detector D watches the |2⟩ output port of the second splitter (dark when
//! both arms are open), detector C watches |1⟩.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

pub type Amplitude = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance used for every normalization check in this crate.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("amplitude `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("transmission {0} outside [0, 1]")]
    Transmission(f64),
}

/// A propagating photon mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::One => Mode::Two,
            Mode::Two => Mode::One,
        }
    }
}

/// Physical arm of the interferometer, as seen at the absorber plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Upper,
    Lower,
}

impl Arm {
    /// Mode carried by this arm after the mirrors.
    pub fn mode(self) -> Mode {
        match self {
            Arm::Upper => Mode::One,
            Arm::Lower => Mode::Two,
        }
    }
}

/// Readout port. `Two` is detector D, `One` is detector C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    One,
    Two,
    Absorbed,
}

impl Port {
    pub const DETECTOR_D: Port = Port::Two;
    pub const DETECTOR_C: Port = Port::One;
    pub const ALL: [Port; 3] = [Port::One, Port::Two, Port::Absorbed];
}

impl From<Mode> for Port {
    fn from(m: Mode) -> Port {
        match m {
            Mode::One => Port::One,
            Mode::Two => Port::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonState {
    a1: Amplitude,
    a2: Amplitude,
    absorbed: Amplitude,
}

impl PhotonState {
    pub fn new(a1: Amplitude, a2: Amplitude, absorbed: Amplitude) -> Result<Self, StateError> {
        for (name, a) in [("a1", a1), ("a2", a2), ("absorbed", absorbed)] {
            if !a.is_finite() {
                return Err(StateError::NonFinite(name));
            }
        }
        Ok(Self { a1, a2, absorbed })
    }

    /// |1⟩, the photon as emitted by the source.
    pub fn mode_one() -> Self {
        Self {
            a1: ONE,
            a2: ZERO,
            absorbed: ZERO,
        }
    }

    /// |2⟩
    pub fn mode_two() -> Self {
        Self {
            a1: ZERO,
            a2: ONE,
            absorbed: ZERO,
        }
    }

    pub fn amplitude(&self, port: Port) -> Amplitude {
        match port {
            Port::One => self.a1,
            Port::Two => self.a2,
            Port::Absorbed => self.absorbed,
        }
    }

    fn mode_mut(&mut self, mode: Mode) -> &mut Amplitude {
        match mode {
            Mode::One => &mut self.a1,
            Mode::Two => &mut self.a2,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr() + self.absorbed.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Move the probability `weight` into the absorbed component.
    ///
    /// Absorbed contributions carry no observable relative phase, so the
    /// component is stored as a non-negative real magnitude.
    fn absorb(&mut self, weight: f64) {
        let total = self.absorbed.norm_sqr() + weight;
        self.absorbed = Complex64::new(total.sqrt(), 0.0);
    }
}

/// Balanced beam splitter: |1⟩ → (|1⟩ + i|2⟩)/√2, |2⟩ → (|2⟩ + i|1⟩)/√2.
pub fn apply_beam_splitter(s: PhotonState) -> PhotonState {
    PhotonState {
        a1: (s.a1 + I * s.a2) * FRAC_1_SQRT_2,
        a2: (s.a2 + I * s.a1) * FRAC_1_SQRT_2,
        absorbed: s.absorbed,
    }
}

/// Mirror pair: |1⟩ → i|2⟩, |2⟩ → i|1⟩.
pub fn apply_mirrors(s: PhotonState) -> PhotonState {
    PhotonState {
        a1: I * s.a2,
        a2: I * s.a1,
        absorbed: s.absorbed,
    }
}

/// Multiply one propagating mode by e^{iθ}.
pub fn apply_phase(mut s: PhotonState, mode: Mode, theta: f64) -> PhotonState {
    *s.mode_mut(mode) *= Complex64::cis(theta);
    s
}

/// Absorber with a definite position.
///
/// With `blocked = Some(m)` the whole amplitude of `m` moves to `absorbed` and
/// the surviving mode picks up `survivor_phase`. With `blocked = None` nothing
/// is absorbed and `survivor_phase` multiplies both propagating modes.
pub fn apply_absorber(
    mut s: PhotonState,
    blocked: Option<Mode>,
    survivor_phase: f64,
) -> PhotonState {
    let kick = Complex64::cis(survivor_phase);
    match blocked {
        Some(m) => {
            let lost = std::mem::replace(s.mode_mut(m), ZERO);
            s.absorb(lost.norm_sqr());
            *s.mode_mut(m.other()) *= kick;
        }
        None => {
            s.a1 *= kick;
            s.a2 *= kick;
        }
    }
    s
}

/// Absorber held in a superposition of in-path and out-of-path positions.
///
/// The amplitude on `mode` survives with factor √transmission · e^{iθ}; the
/// remaining `1 - transmission` of its probability is absorbed.
pub fn apply_superposed_absorber(
    mut s: PhotonState,
    mode: Mode,
    transmission: f64,
    theta: f64,
) -> Result<PhotonState, StateError> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(StateError::Transmission(transmission));
    }
    let amp = s.mode_mut(mode);
    let lost = amp.norm_sqr() * (1.0 - transmission);
    *amp *= Complex64::cis(theta) * transmission.sqrt();
    s.absorb(lost);
    Ok(s)
}

/// Splitter, mirrors, an arbitrary absorber-plane step, splitter.
pub fn evolve_device_with<F>(input: PhotonState, absorber_plane: F) -> PhotonState
where
    F: FnOnce(PhotonState) -> PhotonState,
{
    let s = apply_beam_splitter(input);
    let s = apply_mirrors(s);
    let s = absorber_plane(s);
    apply_beam_splitter(s)
}

pub fn evolve_device(
    input: PhotonState,
    blocked: Option<Mode>,
    survivor_phase: f64,
) -> PhotonState {
    evolve_device_with(input, |s| apply_absorber(s, blocked, survivor_phase))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbsorberBranch {
    PosA,
    PosB,
}

/// Which arm (if any) the absorber blocks in each of its two positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceGeometry {
    pub blocked_in_a: Option<Arm>,
    pub blocked_in_b: Option<Arm>,
}

impl DeviceGeometry {
    /// Absorber clear of the beam in A, on the upper arm in B.
    pub const MAIN: DeviceGeometry = DeviceGeometry {
        blocked_in_a: None,
        blocked_in_b: Some(Arm::Upper),
    };

    /// Absorber on the upper arm in A and on the lower arm in B.
    pub const BLOCKED_BOTH: DeviceGeometry = DeviceGeometry {
        blocked_in_a: Some(Arm::Upper),
        blocked_in_b: Some(Arm::Lower),
    };

    pub fn blocked(&self, branch: AbsorberBranch) -> Option<Arm> {
        match branch {
            AbsorberBranch::PosA => self.blocked_in_a,
            AbsorberBranch::PosB => self.blocked_in_b,
        }
    }
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        Self::MAIN
    }
}

/// Photon ⊗ absorber state, kept as one photon state per absorber branch.
///
/// The absorber branches are orthogonal, so readout is the incoherent
/// branch-weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    weight_a: Amplitude,
    weight_b: Amplitude,
    photon_a: PhotonState,
    photon_b: PhotonState,
}

impl JointState {
    pub fn new(
        weight_a: Amplitude,
        weight_b: Amplitude,
        photon_a: PhotonState,
        photon_b: PhotonState,
    ) -> Result<Self, StateError> {
        if !weight_a.is_finite() {
            return Err(StateError::NonFinite("weight_a"));
        }
        if !weight_b.is_finite() {
            return Err(StateError::NonFinite("weight_b"));
        }
        let w = weight_a.norm_sqr() + weight_b.norm_sqr();
        if (w - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized(w));
        }
        Ok(Self {
            weight_a,
            weight_b,
            photon_a,
            photon_b,
        })
    }

    /// λ_A|SA⟩ + λ_B|SB⟩ with the same photon in both branches.
    pub fn product(
        weight_a: Amplitude,
        weight_b: Amplitude,
        photon: PhotonState,
    ) -> Result<Self, StateError> {
        Self::new(weight_a, weight_b, photon, photon)
    }

    pub fn weight(&self, branch: AbsorberBranch) -> Amplitude {
        match branch {
            AbsorberBranch::PosA => self.weight_a,
            AbsorberBranch::PosB => self.weight_b,
        }
    }

    pub fn photon(&self, branch: AbsorberBranch) -> &PhotonState {
        match branch {
            AbsorberBranch::PosA => &self.photon_a,
            AbsorberBranch::PosB => &self.photon_b,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weight_a.norm_sqr() * self.photon_a.norm_sqr()
            + self.weight_b.norm_sqr() * self.photon_b.norm_sqr()
    }
}

pub fn evolve_joint(
    j: JointState,
    geometry: DeviceGeometry,
    phase_a: f64,
    phase_b: f64,
) -> JointState {
    let blocked = |branch| geometry.blocked(branch).map(Arm::mode);
    JointState {
        photon_a: evolve_device(j.photon_a, blocked(AbsorberBranch::PosA), phase_a),
        photon_b: evolve_device(j.photon_b, blocked(AbsorberBranch::PosB), phase_b),
        ..j
    }
}

/// Born-rule readout.
pub trait Readout {
    fn probability(&self, port: Port) -> f64;
}

impl Readout for PhotonState {
    fn probability(&self, port: Port) -> f64 {
        self.amplitude(port).norm_sqr()
    }
}

impl Readout for JointState {
    fn probability(&self, port: Port) -> f64 {
        self.weight_a.norm_sqr() * self.photon_a.probability(port)
            + self.weight_b.norm_sqr() * self.photon_b.probability(port)
    }
}

pub fn detection_probability<S: Readout + ?Sized>(s: &S, port: Port) -> f64 {
    s.probability(port)
}
