use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;

/// Which of the two optical modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::A, Mode::B];

    pub fn index(self) -> usize {
        match self {
            Mode::A => 0,
            Mode::B => 1,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::A => "A",
            Mode::B => "B",
        })
    }
}

/// Mean occupation of a bosonic mode at angular frequency `omega` and
/// temperature `temperature` (K).
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

/// The membrane mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalParams {
    /// Resonance frequency (rad/s).
    pub omega_m: f64,
    /// Energy damping rate (rad/s).
    pub gamma_m: f64,
    /// Thermal occupation of the bath.
    pub n_th: f64,
    /// Effective mass (kg), only used for displacement calibration.
    pub m_eff: Option<f64>,
}

impl MechanicalParams {
    pub fn new(omega_m: f64, gamma_m: f64, n_th: f64) -> Result<Self> {
        let p = Self {
            omega_m,
            gamma_m,
            n_th,
            m_eff: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mass(mut self, m_eff: f64) -> Result<Self> {
        if !(m_eff > 0.0 && m_eff.is_finite()) {
            return Err(Error::param("m_eff", "must be positive"));
        }
        self.m_eff = Some(m_eff);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_m > 0.0 && self.omega_m.is_finite()) {
            return Err(Error::param("omega_m", "must be positive"));
        }
        if !(self.gamma_m > 0.0 && self.gamma_m.is_finite()) {
            return Err(Error::param("gamma_m", "must be positive"));
        }
        if !(self.n_th >= 0.0 && self.n_th.is_finite()) {
            return Err(Error::param("n_th", "must be non-negative"));
        }
        Ok(())
    }

    pub fn quality_factor(&self) -> f64 {
        self.omega_m / self.gamma_m
    }

    /// Thermal decoherence rate Γ_m(n_th + 1/2) (rad/s).
    pub fn thermal_decoherence_rate(&self) -> f64 {
        self.gamma_m * (self.n_th + 0.5)
    }

    /// Zero-point displacement sqrt(ħ/(2 m ω)) (m), if a mass is known.
    pub fn x_zpf(&self) -> Option<f64> {
        self.m_eff.map(|m| (HBAR / (2.0 * m * self.omega_m)).sqrt())
    }
}

/// One optical cavity mode and its detection chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalModeParams {
    pub label: Mode,
    /// Field-enhanced coupling rate (rad/s).
    pub g: f64,
    /// Total cavity linewidth (rad/s).
    pub kappa: f64,
    /// Laser-cavity detuning (rad/s).
    pub delta: f64,
    /// Fraction of the linewidth due to the output port.
    pub eta_c: f64,
    /// Detection efficiency after the cavity.
    pub eta: f64,
    /// Vacuum wavelength (m), informational.
    pub wavelength: Option<f64>,
}

impl OpticalModeParams {
    pub fn new(label: Mode, g: f64, kappa: f64, delta: f64, eta_c: f64, eta: f64) -> Result<Self> {
        let p = Self {
            label,
            g,
            kappa,
            delta,
            eta_c,
            eta,
            wavelength: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let name = |f: &str| format!("mode_{}.{}", self.label.to_string().to_lowercase(), f);
        // g = 0 is allowed: it switches the mode off and gives the vacuum limits.
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::param(name("g"), "must be non-negative"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param(name("kappa"), "must be positive"));
        }
        if !self.delta.is_finite() {
            return Err(Error::param(name("delta"), "must be finite"));
        }
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0) {
            return Err(Error::param(name("eta_c"), "must lie in (0, 1]"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param(name("eta"), "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Output-port decay rate η_c κ.
    pub fn kappa_r(&self) -> f64 {
        self.eta_c * self.kappa
    }

    /// Loss-port decay rate (1 − η_c) κ.
    pub fn kappa_l(&self) -> f64 {
        self.kappa - self.kappa_r()
    }

    /// Backaction rate 4g²/κ in the resonant, unresolved-sideband limit.
    pub fn qba_rate_resonant(&self) -> f64 {
        4.0 * self.g * self.g / self.kappa
    }

    /// Measurement rate η η_c 4g²/κ.
    pub fn measurement_rate(&self) -> f64 {
        self.eta * self.eta_c * self.qba_rate_resonant()
    }
}

/// Membrane plus both optical modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub mech: MechanicalParams,
    pub mode_a: OpticalModeParams,
    pub mode_b: OpticalModeParams,
}

impl SystemParams {
    pub fn new(
        mech: MechanicalParams,
        mode_a: OpticalModeParams,
        mode_b: OpticalModeParams,
    ) -> Result<Self> {
        let p = Self {
            mech,
            mode_a,
            mode_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.mech.validate()?;
        self.mode_a.validate()?;
        self.mode_b.validate()?;
        if self.mode_a.label != Mode::A || self.mode_b.label != Mode::B {
            return Err(Error::param(
                "mode label",
                "mode_a must be labelled A and mode_b B",
            ));
        }
        Ok(())
    }

    pub fn mode(&self, m: Mode) -> &OpticalModeParams {
        match m {
            Mode::A => &self.mode_a,
            Mode::B => &self.mode_b,
        }
    }

    pub fn mode_mut(&mut self, m: Mode) -> &mut OpticalModeParams {
        match m {
            Mode::A => &mut self.mode_a,
            Mode::B => &mut self.mode_b,
        }
    }

    /// Γ_A^qba + Γ_B^qba + γ, with the resonant backaction rates.
    pub fn decoherence_rate(&self) -> f64 {
        self.mode_a.qba_rate_resonant()
            + self.mode_b.qba_rate_resonant()
            + self.mech.thermal_decoherence_rate()
    }

    /// Total measurement efficiency (Γ_A^meas + Γ_B^meas)/Γ_dec.
    pub fn measurement_efficiency(&self) -> f64 {
        (self.mode_a.measurement_rate() + self.mode_b.measurement_rate()) / self.decoherence_rate()
    }

    /// Copy with both detunings set to zero.
    pub fn resonant(&self) -> Self {
        let mut p = *self;
        p.mode_a.delta = 0.0;
        p.mode_b.delta = 0.0;
        p
    }

    /// Copy with both couplings set to zero (pure shot noise).
    pub fn uncoupled(&self) -> Self {
        let mut p = *self;
        p.mode_a.g = 0.0;
        p.mode_b.g = 0.0;
        p
    }
}

/// Local-oscillator phases of the two homodyne detectors.
///
/// Angles are stored reduced to [0, 2π). The joint angle Θ is always
/// derived from the stored pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "AnglePairRepr", from = "AnglePairRepr")]
pub struct HomodyneAngles {
    theta_a: f64,
    theta_b: f64,
}

#[derive(Serialize, Deserialize)]
struct AnglePairRepr {
    theta_a: f64,
    theta_b: f64,
}

impl From<HomodyneAngles> for AnglePairRepr {
    fn from(a: HomodyneAngles) -> Self {
        Self {
            theta_a: a.theta_a,
            theta_b: a.theta_b,
        }
    }
}

impl From<AnglePairRepr> for HomodyneAngles {
    fn from(r: AnglePairRepr) -> Self {
        HomodyneAngles::new(r.theta_a, r.theta_b)
    }
}

pub(crate) fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl HomodyneAngles {
    pub fn new(theta_a: f64, theta_b: f64) -> Self {
        Self {
            theta_a: reduce_angle(theta_a),
            theta_b: reduce_angle(theta_b),
        }
    }

    /// Both detectors at the same angle.
    pub fn joint(theta: f64) -> Self {
        Self::new(theta, theta)
    }

    pub fn theta_a(&self) -> f64 {
        self.theta_a
    }

    pub fn theta_b(&self) -> f64 {
        self.theta_b
    }

    pub fn theta(&self, m: Mode) -> f64 {
        match m {
            Mode::A => self.theta_a,
            Mode::B => self.theta_b,
        }
    }

    /// Θ = (θ_A + θ_B)/2.
    pub fn big_theta(&self) -> f64 {
        0.5 * (self.theta_a + self.theta_b)
    }

    /// Both angles advanced by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        Self::new(self.theta_a + phi, self.theta_b + phi)
    }

    /// The conjugate setting, both angles advanced by π/2.
    pub fn conjugate(&self) -> Self {
        self.rotated(PI / 2.0)
    }
}
