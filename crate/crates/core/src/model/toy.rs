//! Toy limit: resonant lasers, unresolved-sideband cavities and equal
//! measurement rates. Unequal rates are replaced by their mean, which keeps
//! the total measurement efficiency unchanged.

use super::params::SystemParams;
use super::response::mech_susceptibility;
use crate::entanglement::CovarianceMatrix4;

fn toy_rates(params: &SystemParams) -> (f64, f64) {
    let meas = 0.5 * (params.mode_a.measurement_rate() + params.mode_b.measurement_rate());
    (meas, params.decoherence_rate())
}

/// Toy inseparability 1 + 8Γ|χ_m|²Γ_dec(1 − cos 2Θ) + 4Γ Re χ_m sin 2Θ,
/// with Θ measured in the same convention as the full model (Θ = 0 reads the
/// amplitude quadratures in the sum mode).
pub fn toy_inseparability(omega: f64, big_theta: f64, params: &SystemParams) -> f64 {
    let (meas, dec) = toy_rates(params);
    let chi = mech_susceptibility(omega, &params.mech);
    let t = 2.0 * big_theta;
    1.0 + 8.0 * meas * chi.norm_sqr() * dec * (1.0 - t.cos()) + 4.0 * meas * chi.re * t.sin()
}

/// Toy covariance matrix at detector angles (0, 0).
pub fn toy_covariance(omega: f64, params: &SystemParams) -> CovarianceMatrix4 {
    let (meas, dec) = toy_rates(params);
    let chi = mech_susceptibility(omega, &params.mech);
    let c = 2.0 * meas * chi.re;
    let m = 8.0 * meas * chi.norm_sqr() * dec;
    CovarianceMatrix4::symmetrized([
        [0.5, c, 0.0, c],
        [c, 0.5 + m, c, m],
        [0.0, c, 0.5, c],
        [c, m, c, 0.5 + m],
    ])
}

/// Closed-form 2ν̃_− of [`toy_covariance`].
pub fn toy_nu_min(omega: f64, params: &SystemParams) -> f64 {
    let (meas, dec) = toy_rates(params);
    let chi = mech_susceptibility(omega, &params.mech);
    let a2 = chi.norm_sqr();
    let ratio = chi.re * chi.re / (4.0 * a2 * a2 * dec * dec);
    // 1 − sqrt(1 + x) loses precision for small x.
    let one_minus = -ratio / (1.0 + (1.0 + ratio).sqrt());
    (1.0 + 16.0 * meas * a2 * dec * one_minus).max(0.0).sqrt()
}
