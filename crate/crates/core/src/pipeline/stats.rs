//! Variance statistics of quadrature ensembles.

use serde::{Deserialize, Serialize};

use crate::entanglement::EprVariances;
use crate::model::{reduce_angle, Mode};
use crate::synth::QuadratureEnsemble;
use crate::{Error, Result};

/// Minimum ensemble size for variance estimates.
pub const MIN_SAMPLES: usize = 100;

/// A second-moment estimate with its 1σ statistical error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl VarianceEstimate {
    /// Estimate of a Gaussian variance from `n` samples.
    pub fn of_variance(value: f64, n: usize) -> Self {
        Self {
            value,
            std_error: value.abs() * (2.0 / (n as f64 - 1.0)).sqrt(),
            n,
        }
    }

    /// Exact value, no uncertainty.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            n: usize::MAX,
        }
    }

    pub fn relative_error(&self) -> f64 {
        self.std_error / self.value.abs()
    }
}

/// Variances of both detectors and their covariance, in units where vacuum
/// is 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub var_a: VarianceEstimate,
    pub var_b: VarianceEstimate,
    pub cov_ab: VarianceEstimate,
}

impl EnsembleStats {
    pub fn var(&self, m: Mode) -> VarianceEstimate {
        match m {
            Mode::A => self.var_a,
            Mode::B => self.var_b,
        }
    }
}

fn raw_moments(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        saa += dx * dx;
        sbb += dy * dy;
        sab += dx * dy;
    }
    let d = n - 1.0;
    (saa / d, sbb / d, sab / d)
}

fn check_len(e: &QuadratureEnsemble) -> Result<()> {
    if e.a.len() != e.b.len() {
        return Err(Error::input("ensemble channels differ in length"));
    }
    if e.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: e.len(),
        });
    }
    Ok(())
}

/// Unbiased, shot-normalized second moments of an ensemble.
pub fn variance_stats(ensemble: &QuadratureEnsemble) -> Result<EnsembleStats> {
    check_len(ensemble)?;
    let n = ensemble.len();
    let (saa, sbb, sab) = raw_moments(&ensemble.a, &ensemble.b);
    let [ra, rb] = ensemble.shot_reference;
    let (vaa, vbb) = (0.5 * saa / ra, 0.5 * sbb / rb);
    let cab = 0.5 * sab / (ra * rb).sqrt();
    Ok(EnsembleStats {
        var_a: VarianceEstimate::of_variance(vaa, n),
        var_b: VarianceEstimate::of_variance(vbb, n),
        cov_ab: VarianceEstimate {
            value: cab,
            std_error: ((vaa * vbb + cab * cab) / (n as f64 - 1.0)).sqrt(),
            n,
        },
    })
}

/// Inseparability from an {X_A, X_B} run, a {Y_A, Y_B} run and a vacuum run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DgczEstimate {
    /// (V(X+) + V(Y−))/2 in units where vacuum is 1.
    pub inseparability: VarianceEstimate,
    pub variances: EprVariances,
    /// Contribution of the shot-reference uncertainty to the error.
    pub shot_error: f64,
    /// Contribution of the finite X and Y ensembles to the error.
    pub statistical_error: f64,
}

const ANGLE_TOLERANCE: f64 = 1e-9;

fn angle_close(a: f64, b: f64) -> bool {
    let d = reduce_angle(a - b);
    d < ANGLE_TOLERANCE || std::f64::consts::TAU - d < ANGLE_TOLERANCE
}

/// Combined estimate of I from the three measurement stages. The vacuum run
/// provides the shot reference for both signal runs; its finite size enters
/// the error budget alongside the X and Y statistics.
pub fn dgcz_from_runs(
    x_run: &QuadratureEnsemble,
    y_run: &QuadratureEnsemble,
    shot: &QuadratureEnsemble,
) -> Result<DgczEstimate> {
    for m in Mode::BOTH {
        let want = x_run.angles.theta(m) + std::f64::consts::FRAC_PI_2;
        if !angle_close(y_run.angles.theta(m), want) {
            return Err(Error::input(format!(
                "Y run angle of detector {m} is {} rad, expected the X run angle + π/2 = {} rad",
                y_run.angles.theta(m),
                reduce_angle(want)
            )));
        }
    }
    if x_run.kernel != y_run.kernel
        || x_run.kernel != shot.kernel
        || x_run.demod_frequency_hz != y_run.demod_frequency_hz
        || x_run.bandwidth_hz != y_run.bandwidth_hz
    {
        return Err(Error::input(
            "runs were reduced with different temporal modes",
        ));
    }
    for e in [x_run, y_run, shot] {
        check_len(e)?;
    }
    let (sa, sb, _) = raw_moments(&shot.a, &shot.b);
    // Raw ensembles share the vacuum reference measured on the shot run.
    let scale_x = [
        x_run.shot_reference[0] / shot.shot_reference[0],
        x_run.shot_reference[1] / shot.shot_reference[1],
    ];
    let scale_y = [
        y_run.shot_reference[0] / shot.shot_reference[0],
        y_run.shot_reference[1] / shot.shot_reference[1],
    ];
    let ref_x = [sa * scale_x[0], sb * scale_x[1]];
    let ref_y = [sa * scale_y[0], sb * scale_y[1]];
    let x = variance_stats(&x_run.clone().with_shot_reference(ref_x)?)?;
    let y = variance_stats(&y_run.clone().with_shot_reference(ref_y)?)?;

    // Variances of X_A ± X_B read 1 for vacuum.
    let v_x_plus = x.var_a.value + x.var_b.value + 2.0 * x.cov_ab.value;
    let v_y_minus = y.var_a.value + y.var_b.value - 2.0 * y.cov_ab.value;
    let v_x_minus = x.var_a.value + x.var_b.value - 2.0 * x.cov_ab.value;
    let v_y_plus = y.var_a.value + y.var_b.value + 2.0 * y.cov_ab.value;
    let value = 0.5 * (v_x_plus + v_y_minus);

    // A sum quadrature of a Gaussian state is itself Gaussian.
    let se_x = v_x_plus * (2.0 / (x_run.len() as f64 - 1.0)).sqrt();
    let se_y = v_y_minus * (2.0 / (y_run.len() as f64 - 1.0)).sqrt();
    let statistical_error = 0.5 * (se_x * se_x + se_y * se_y).sqrt();

    // d I / d ln(reference) for each detector.
    let rel_shot = (2.0 / (shot.len() as f64 - 1.0)).sqrt();
    let d_ln_a = -0.5 * (x.var_a.value + x.cov_ab.value + y.var_a.value - y.cov_ab.value);
    let d_ln_b = -0.5 * (x.var_b.value + x.cov_ab.value + y.var_b.value - y.cov_ab.value);
    let shot_error = rel_shot * (d_ln_a * d_ln_a + d_ln_b * d_ln_b).sqrt();

    Ok(DgczEstimate {
        inseparability: VarianceEstimate {
            value,
            std_error: statistical_error.hypot(shot_error),
            n: x_run.len().min(y_run.len()),
        },
        variances: EprVariances {
            v_x_plus,
            v_y_minus,
            v_x_minus,
            v_y_plus,
        },
        shot_error,
        statistical_error,
    })
}
