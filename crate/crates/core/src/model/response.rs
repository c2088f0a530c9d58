//! Linear response of the three-mode system and the detected output spectra.
//!
//! Spectra are symmetrized and two-sided, normalized so that the shot-noise
//! floor of a single homodyne detector is 1/2.

use num_complex::Complex64;
use serde::Serialize;

use super::params::{HomodyneAngles, MechanicalParams, Mode, OpticalModeParams, SystemParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Cavity quadrature response of one optical mode at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityResponse {
    pub u: Complex64,
    pub v: Complex64,
    pub chi_c: Complex64,
}

/// All susceptibilities at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Susceptibilities {
    pub omega: f64,
    pub chi_m: Complex64,
    pub chi_eff: Complex64,
    pub a: CavityResponse,
    pub b: CavityResponse,
}

impl Susceptibilities {
    pub fn at(omega: f64, params: &SystemParams) -> Self {
        let a = cavity_susceptibilities(omega, &params.mode_a);
        let b = cavity_susceptibilities(omega, &params.mode_b);
        let chi_m = mech_susceptibility(omega, &params.mech);
        Self {
            omega,
            chi_m,
            chi_eff: effective_from(chi_m, &[(params.mode_a.g, a.v), (params.mode_b.g, b.v)]),
            a,
            b,
        }
    }

    pub fn cavity(&self, m: Mode) -> &CavityResponse {
        match m {
            Mode::A => &self.a,
            Mode::B => &self.b,
        }
    }
}

/// Bare mechanical susceptibility Ω_m/(Ω_m² − Ω² − iΓ_mΩ).
pub fn mech_susceptibility(omega: f64, mech: &MechanicalParams) -> Complex64 {
    let om = mech.omega_m;
    Complex64::new(om, 0.0) / Complex64::new(om * om - omega * omega, -mech.gamma_m * omega)
}

/// Cavity susceptibilities u, v and χ_c = u − iv.
pub fn cavity_susceptibilities(omega: f64, mode: &OpticalModeParams) -> CavityResponse {
    let d = Complex64::new(0.5 * mode.kappa, -omega);
    let den = d * d + mode.delta * mode.delta;
    let u = d / den;
    let v = Complex64::new(-mode.delta, 0.0) / den;
    CavityResponse {
        u,
        v,
        chi_c: u - I * v,
    }
}

fn effective_from(chi_m: Complex64, couplings: &[(f64, Complex64)]) -> Complex64 {
    let shift: Complex64 = couplings.iter().map(|&(g, v)| 4.0 * g * g * v).sum();
    if shift == Complex64::new(0.0, 0.0) {
        return chi_m;
    }
    (chi_m.inv() - shift).inv()
}

/// Mechanical susceptibility dressed by the dynamical backaction of both modes.
pub fn effective_susceptibility(omega: f64, params: &SystemParams) -> Complex64 {
    Susceptibilities::at(omega, params).chi_eff
}

/// Mechanical resonance shifted by the optical spring: the zero of
/// Re χ_eff⁻¹ nearest Ω_m, located by bisection.
pub fn dressed_resonance(params: &SystemParams) -> f64 {
    let om = params.mech.omega_m;
    let f = |w: f64| effective_susceptibility(w, params).inv().re;
    let mut span = 1e-4 * om;
    let (mut lo, mut hi) = (om - span, om + span);
    while f(lo) * f(hi) > 0.0 {
        span *= 2.0;
        if span > 0.5 * om {
            return om;
        }
        lo = om - span;
        hi = om + span;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * om {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Frequency-dependent backaction rate g²κ(|u|² + |v|²).
pub fn qba_rate(omega: f64, mode: &OpticalModeParams) -> f64 {
    let c = cavity_susceptibilities(omega, mode);
    mode.g * mode.g * mode.kappa * (c.u.norm_sqr() + c.v.norm_sqr())
}

fn force_psd(omega: f64, params: &SystemParams) -> f64 {
    2.0 * qba_rate(omega, &params.mode_a)
        + 2.0 * qba_rate(omega, &params.mode_b)
        + 2.0 * params.mech.thermal_decoherence_rate()
}

/// Displacement spectrum of the dimensionless mechanical coordinate, driven by
/// both backaction forces and the thermal bath.
pub fn displacement_psd(omega: f64, params: &SystemParams) -> f64 {
    effective_susceptibility(omega, params).norm_sqr() * force_psd(omega, params)
}

/// Cavity coefficients α, β and c for a pair of modes at ±Ω.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairCoefficients {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub c: Complex64,
}

pub(crate) fn pair_coefficients(
    omega: f64,
    mj: &OpticalModeParams,
    mk: &OpticalModeParams,
) -> PairCoefficients {
    let jp = cavity_susceptibilities(omega, mj).chi_c;
    let jm = cavity_susceptibilities(-omega, mj).chi_c;
    let kp = cavity_susceptibilities(omega, mk).chi_c;
    let km = cavity_susceptibilities(-omega, mk).chi_c;
    let kk = mj.kappa * mk.kappa;
    let pos = jp * kp.conj();
    let neg = jm * km.conj();
    PairCoefficients {
        alpha: kk * (jp * km + kp * jm),
        beta: kk * (pos - neg),
        c: kk * (pos + neg),
    }
}

/// The three pieces of a detected spectrum: shot noise, imprecision-weighted
/// motion, and the shot-noise/motion correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdTerms {
    pub shot: f64,
    pub transduction: f64,
    pub displacement: f64,
    pub correlation: f64,
}

impl PsdTerms {
    pub fn total(&self) -> f64 {
        self.shot + self.transduction * self.displacement + self.correlation
    }
}

/// Term-by-term decomposition of [`output_psd`].
pub fn output_psd_terms(
    omega: f64,
    j: Mode,
    k: Mode,
    angles: &HomodyneAngles,
    params: &SystemParams,
) -> PsdTerms {
    terms_at(omega, j, angles.theta(j), k, angles.theta(k), params)
}

fn terms_at(omega: f64, j: Mode, tj: f64, k: Mode, tk: f64, params: &SystemParams) -> PsdTerms {
    let mj = params.mode(j);
    let mk = params.mode(k);
    let coef = pair_coefficients(omega, mj, mk);
    let pre = (mj.measurement_rate() * mk.measurement_rate()).sqrt() / 4.0;
    let diff = Complex64::from_polar(1.0, -(tj - tk));
    let sum = Complex64::from_polar(1.0, -(tj + tk));
    let transduction = pre * (diff * coef.c - sum * coef.alpha).re;
    let chi_eff = effective_susceptibility(omega, params);
    let correlation =
        -pre * (chi_eff.re * (sum * coef.alpha).im + chi_eff.im * (diff * coef.beta).re);
    // Same-mode entries at two different angles see the vacuum projected
    // onto both angles; for θ_j = θ_k this is the usual 1/2.
    let shot = if j == k { 0.5 * (tj - tk).cos() } else { 0.0 };
    PsdTerms {
        shot,
        transduction,
        displacement: displacement_psd(omega, params),
        correlation,
    }
}

/// Symmetrized (cross-)spectrum of the detected quadratures of modes `j` and
/// `k` at their angles in `angles`.
pub fn output_psd(
    omega: f64,
    j: Mode,
    k: Mode,
    angles: &HomodyneAngles,
    params: &SystemParams,
) -> f64 {
    output_psd_terms(omega, j, k, angles, params).total()
}

/// Symmetrized covariance spectrum of quadrature `theta_j` of mode `j` and
/// quadrature `theta_k` of mode `k`. Unlike [`output_psd`] the two angles
/// may differ even when `j == k`.
pub fn quadrature_covariance(
    omega: f64,
    j: Mode,
    theta_j: f64,
    k: Mode,
    theta_k: f64,
    params: &SystemParams,
) -> f64 {
    terms_at(omega, j, theta_j, k, theta_k, params).total()
}

/// DGCZ inseparability spectrum at joint angle Θ, with the EPR pair built
/// from the sum quadrature at (Θ, Θ) and the difference quadrature at
/// (Θ + π/2, Θ + π/2). Vacuum gives 1.
pub fn inseparability_spectrum(omega: f64, big_theta: f64, params: &SystemParams) -> f64 {
    let ma = &params.mode_a;
    let mb = &params.mode_b;
    let ga = ma.measurement_rate();
    let gb = mb.measurement_rate();
    let aa = pair_coefficients(omega, ma, ma);
    let bb = pair_coefficients(omega, mb, mb);
    let ab = pair_coefficients(omega, ma, mb);
    let rot = Complex64::from_polar(1.0, -2.0 * big_theta);
    let cross = (ga * gb).sqrt() * ab.alpha * rot;
    let f_q = 0.25 * (ga * aa.c + gb * bb.c - 2.0 * cross).re;
    let chi_eff = effective_susceptibility(omega, params);
    let corr =
        -chi_eff.im * (0.25 * (ga * aa.beta + gb * bb.beta)).re - chi_eff.re * (0.5 * cross).im;
    1.0 + f_q * displacement_psd(omega, params) + corr
}

/// Sum-quadrature variance V(X_A + X_B) at (Θ, Θ) and difference-quadrature
/// variance V(Y_A − Y_B) at (Θ + π/2, Θ + π/2), each with vacuum 1.
pub fn epr_variances(omega: f64, big_theta: f64, params: &SystemParams) -> (f64, f64) {
    let x = HomodyneAngles::joint(big_theta);
    let y = x.conjugate();
    let s = |j, k, a: &HomodyneAngles| output_psd(omega, j, k, a, params);
    let vx = s(Mode::A, Mode::A, &x) + s(Mode::B, Mode::B, &x) + 2.0 * s(Mode::A, Mode::B, &x);
    let vy = s(Mode::A, Mode::A, &y) + s(Mode::B, Mode::B, &y) - 2.0 * s(Mode::A, Mode::B, &y);
    (vx, vy)
}
