//! Fourier-domain solution of the Langevin equations as a linear map from
//! white input noises to the two detected photocurrents.

use num_complex::Complex64;

use crate::model::{
    cavity_susceptibilities, effective_susceptibility, HomodyneAngles, Mode, SystemParams,
};

/// Number of independent white inputs, each with symmetrized PSD 1/2.
pub const N_INPUTS: usize = 13;

/// Input noise labels, in column order.
pub const INPUT_LABELS: [&str; N_INPUTS] = [
    "A.X_L", "A.Y_L", "A.X_R", "A.Y_R", "B.X_L", "B.Y_L", "B.X_R", "B.Y_R", "thermal", "A.loss_X",
    "A.loss_Y", "B.loss_X", "B.loss_Y",
];

const THERMAL: usize = 8;

fn loss_columns(m: Mode) -> (usize, usize) {
    match m {
        Mode::A => (9, 10),
        Mode::B => (11, 12),
    }
}

pub type Row = [Complex64; N_INPUTS];

/// Detector rows [A, B] at angular frequency `omega`.
pub fn transfer_rows(omega: f64, angles: &HomodyneAngles, params: &SystemParams) -> [Row; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let chi_eff = effective_susceptibility(omega, params);
    let mut q = [zero; N_INPUTS];
    let mut nx = [[zero; N_INPUTS]; 2];
    let mut ny = [[zero; N_INPUTS]; 2];
    let mut resp = [cavity_susceptibilities(omega, &params.mode_a); 2];
    for m in Mode::BOTH {
        let i = m.index();
        let p = params.mode(m);
        resp[i] = cavity_susceptibilities(omega, p);
        let (kl, kr) = (p.kappa_l().sqrt(), p.kappa_r().sqrt());
        nx[i][4 * i] = Complex64::new(kl, 0.0);
        nx[i][4 * i + 2] = Complex64::new(kr, 0.0);
        ny[i][4 * i + 1] = Complex64::new(kl, 0.0);
        ny[i][4 * i + 3] = Complex64::new(kr, 0.0);
        let (u, v) = (resp[i].u, resp[i].v);
        for c in 0..N_INPUTS {
            q[c] += 2.0 * p.g * (u * nx[i][c] + v * ny[i][c]);
        }
    }
    let mech = &params.mech;
    q[THERMAL] = Complex64::new(
        (2.0 * mech.gamma_m).sqrt() * (2.0 * mech.n_th + 1.0).sqrt(),
        0.0,
    );
    for x in q.iter_mut() {
        *x *= chi_eff;
    }

    let mut rows = [[zero; N_INPUTS]; 2];
    for m in Mode::BOTH {
        let i = m.index();
        let p = params.mode(m);
        let (u, v) = (resp[i].u, resp[i].v);
        let kr = p.kappa_r().sqrt();
        let (s, c) = angles.theta(m).sin_cos();
        let se = p.eta.sqrt();
        for col in 0..N_INPUTS {
            let drive = ny[i][col] + 2.0 * p.g * q[col];
            let xc = u * nx[i][col] + v * drive;
            let yc = u * drive - v * nx[i][col];
            let mut xo = -kr * xc;
            let mut yo = -kr * yc;
            if col == 4 * i + 2 {
                xo += 1.0;
            }
            if col == 4 * i + 3 {
                yo += 1.0;
            }
            rows[i][col] = se * (xo * c + yo * s);
        }
        let (lx, ly) = loss_columns(m);
        let sl = (1.0 - p.eta).sqrt();
        rows[i][lx] = Complex64::new(sl * c, 0.0);
        rows[i][ly] = Complex64::new(sl * s, 0.0);
    }
    rows
}

/// Symmetrized cross-spectrum Re[½ Σ T_j T_k*] of two rows.
pub fn row_psd(a: &Row, b: &Row) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>()
}

/// Transfer matrices on a grid of angular frequencies.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub omegas: Vec<f64>,
    pub angles: HomodyneAngles,
    pub rows: Vec<[Row; 2]>,
}

impl TransferMatrix {
    /// Symmetrized cross-spectrum of detectors `j` and `k` at grid point `i`.
    pub fn psd(&self, i: usize, j: Mode, k: Mode) -> f64 {
        row_psd(&self.rows[i][j.index()], &self.rows[i][k.index()])
    }
}

pub fn build_transfer_matrix(
    omegas: &[f64],
    angles: &HomodyneAngles,
    params: &SystemParams,
) -> TransferMatrix {
    TransferMatrix {
        omegas: omegas.to_vec(),
        angles: *angles,
        rows: omegas
            .iter()
            .map(|&w| transfer_rows(w, angles, params))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{output_psd, table_s1};
    use std::f64::consts::TAU;

    fn grid(p: &SystemParams) -> Vec<f64> {
        (0..=400)
            .map(|i| p.mech.omega_m + TAU * (-10e3 + 50.0 * i as f64))
            .collect()
    }

    #[test]
    fn reproduces_model_spectra() {
        let p = table_s1();
        for a in [
            HomodyneAngles::joint(0.0),
            HomodyneAngles::new(0.3, 1.1),
            HomodyneAngles::new(1.7, 4.0),
        ] {
            let t = build_transfer_matrix(&grid(&p), &a, &p);
            for (i, &w) in t.omegas.iter().enumerate() {
                for (j, k) in [(Mode::A, Mode::A), (Mode::B, Mode::B), (Mode::A, Mode::B)] {
                    let want = output_psd(w, j, k, &a, &p);
                    let got = t.psd(i, j, k);
                    let scale = want.abs().max(1e-3);
                    assert!(
                        (got - want).abs() < 1e-9 * scale.max(want.abs()),
                        "{j}{k} {got} {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn uncoupled_rows_are_shot_noise() {
        let p = table_s1().uncoupled();
        let t = build_transfer_matrix(&grid(&p), &HomodyneAngles::new(0.4, 2.0), &p);
        for i in 0..t.omegas.len() {
            assert!((t.psd(i, Mode::A, Mode::A) - 0.5).abs() < 1e-14);
            assert!((t.psd(i, Mode::B, Mode::B) - 0.5).abs() < 1e-14);
            assert!(t.psd(i, Mode::A, Mode::B).abs() < 1e-14);
        }
    }

    #[test]
    fn total_loss_leaves_only_vacuum() {
        let mut p = table_s1();
        p.mode_a.eta = 1e-300;
        let rows = transfer_rows(p.mech.omega_m, &HomodyneAngles::joint(0.7), &p);
        let (lx, ly) = loss_columns(Mode::A);
        for (c, x) in rows[0].iter().enumerate() {
            if c != lx && c != ly {
                assert!(x.norm() < 1e-140);
            }
        }
        assert!((row_psd(&rows[0], &rows[0]) - 0.5).abs() < 1e-14);
    }
}
