//! Analytic three-mode model: one mechanical mode read out by two detuned,
//! lossy cavities and two homodyne detectors, plus its toy limit.

mod covariance;
mod params;
mod response;
mod search;
mod toy;

pub use covariance::model_covariance_matrix;
pub(crate) use params::reduce_angle;
pub use params::{
    bose_occupation, HomodyneAngles, MechanicalParams, Mode, OpticalModeParams, SystemParams, HBAR,
    K_B,
};
pub use response::{
    cavity_susceptibilities, displacement_psd, dressed_resonance, effective_susceptibility,
    epr_variances, inseparability_spectrum, mech_susceptibility, output_psd, output_psd_terms,
    qba_rate, quadrature_covariance, CavityResponse, PsdTerms, Susceptibilities,
};
pub use search::{
    golden_section, inseparability, min_inseparability, min_nu2, min_over_theta, minimize_2d, nu2,
    Engine, Grid, InseparabilityMinimum, Minimum2,
};
pub use toy::{toy_covariance, toy_inseparability, toy_nu_min};

use crate::hz;

/// The canonical parameter set of the 796 nm experiment.
///
/// The damping rate follows from Q = 1.03×10⁹ and the occupation from a 10 K
/// bath, rather than from the rounded linewidth and occupation.
pub fn table_s1() -> SystemParams {
    let omega_m = hz(1.139e6);
    let mech = MechanicalParams {
        omega_m,
        gamma_m: omega_m / 1.03e9,
        n_th: bose_occupation(omega_m, 10.0),
        m_eff: Some(2.3e-12),
    };
    let mode =
        |label, g: f64, kappa: f64, detuning: f64, eta: f64, lambda: f64| OpticalModeParams {
            label,
            g: hz(g),
            kappa: hz(kappa),
            delta: detuning * hz(kappa),
            eta_c: 0.95,
            eta,
            wavelength: Some(lambda),
        };
    SystemParams {
        mech,
        mode_a: mode(Mode::A, 67.0e3, 13.3e6, -0.22, 0.60, 796.154e-9),
        mode_b: mode(Mode::B, 53.1e3, 12.6e6, -0.20, 0.77, 796.750e-9),
    }
}
