use std::f64::consts::FRAC_PI_2;

use super::params::{HomodyneAngles, Mode, SystemParams};
use super::response::quadrature_covariance;
use crate::entanglement::CovarianceMatrix4;

/// Quadrature slots of the covariance matrix: mode and phase offset from
/// that mode's detector angle.
const SLOTS: [(Mode, f64); 4] = [
    (Mode::A, 0.0),
    (Mode::A, FRAC_PI_2),
    (Mode::B, 0.0),
    (Mode::B, FRAC_PI_2),
];

/// Model covariance matrix of (X_A, Y_A, X_B, Y_B), with X_j read at θ_j and
/// Y_j at θ_j + π/2.
pub fn model_covariance_matrix(
    omega: f64,
    angles: &HomodyneAngles,
    params: &SystemParams,
) -> CovarianceMatrix4 {
    let mut m = [[0.0; 4]; 4];
    for (i, &(mi, oi)) in SLOTS.iter().enumerate() {
        for (j, &(mj, oj)) in SLOTS.iter().enumerate().skip(i) {
            let v = quadrature_covariance(
                omega,
                mi,
                angles.theta(mi) + oi,
                mj,
                angles.theta(mj) + oj,
                params,
            );
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    CovarianceMatrix4::symmetrized(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::{is_physical, symplectic_nu_min};
    use crate::model::{output_psd, table_s1};
    use std::f64::consts::TAU;

    #[test]
    fn vacuum_limit() {
        let p = table_s1().uncoupled();
        let m = model_covariance_matrix(p.mech.omega_m, &HomodyneAngles::new(0.3, 1.0), &p);
        let v = CovarianceMatrix4::vacuum();
        for i in 0..4 {
            for j in 0..4 {
                assert!((m.get(i, j) - v.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn diagonal_and_physicality() {
        let p = table_s1();
        for df in [-10e3, -1e3, 0.0, 2.6e3, 9e3] {
            let w = p.mech.omega_m + TAU * df;
            let a = HomodyneAngles::new(0.0, 0.0);
            let m = model_covariance_matrix(w, &a, &p);
            // Single-mode ponderomotive squeezing can push a diagonal entry
            // below 1/2; the uncertainty principle is the real constraint.
            assert!(is_physical(&m).physical, "{df}");
            assert_eq!(m.get(0, 0), output_psd(w, Mode::A, Mode::A, &a, &p));
        }
    }

    #[test]
    fn quarter_angle_identity() {
        // V(X^{π/4}) = (V(X) + V(Y))/2 + Cov(X, Y) within one mode.
        let p = table_s1();
        let w = TAU * 1.1416e6;
        let a = HomodyneAngles::new(0.2, 0.9);
        let m = model_covariance_matrix(w, &a, &p);
        let q = output_psd(
            w,
            Mode::A,
            Mode::A,
            &a.rotated(std::f64::consts::FRAC_PI_4),
            &p,
        );
        assert!((q - (0.5 * (m.get(0, 0) + m.get(1, 1)) + m.get(0, 1))).abs() < 1e-10);
    }

    #[test]
    fn frozen_headline_values() {
        let p = table_s1();
        let m = model_covariance_matrix(TAU * 1.1416e6, &HomodyneAngles::joint(0.0), &p);
        let nu2 = 2.0 * symplectic_nu_min(&m).unwrap();
        assert!((nu2 - 0.7790892558).abs() < 1e-6, "{nu2}");
        assert!((m.get(1, 3) - 0.3086).abs() < 1e-3);
        assert!((m.get(0, 2) + 0.0924).abs() < 1e-3);
    }
}
