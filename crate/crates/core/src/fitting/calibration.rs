//! Balanced-detector systematics: how the shot-noise reference moves with
//! the DC imbalance of the photocurrents.
//!
//! The amplified differential photocurrent has spectral density
//! S_VV = g₊g₋α² + (g₊ − g₋)V + 4 S_nn V², so a gain mismatch shifts the
//! reference linearly with the DC voltage V and classical amplitude noise
//! adds a quadratic term.

use serde::{Deserialize, Serialize};

use super::lm::{lm_fit, FitReport, LmOptions, Parameter};
use crate::synth::gaussian_noise;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub gain_plus: f64,
    pub gain_minus: f64,
    /// Classical relative-intensity noise PSD (1/Hz).
    pub s_nn: f64,
    /// Local-oscillator amplitude (√W).
    pub alpha_lo: f64,
    /// DC voltage of the operating point (V).
    pub v_dc: f64,
}

impl CalibrationModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gain_plus", self.gain_plus),
            ("gain_minus", self.gain_minus),
            ("alpha_lo", self.alpha_lo),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if !(self.s_nn >= 0.0 && self.s_nn.is_finite()) {
            return Err(Error::param("s_nn", "must be non-negative"));
        }
        Ok(())
    }

    /// Model with the given relative linear and quadratic coefficients
    /// (per V and per V²), mean gain `gain` and LO amplitude `alpha_lo`.
    pub fn from_coefficients(
        linear: f64,
        quadratic: f64,
        gain: f64,
        alpha_lo: f64,
    ) -> Result<Self> {
        // c1 = (g₊ − g₋)/(g₊g₋α²) with g± = g ± d/2, solved for d.
        let a2 = alpha_lo * alpha_lo;
        let d = if linear == 0.0 {
            0.0
        } else {
            let k = linear * a2;
            2.0 * k * gain * gain / (1.0 + (1.0 + k * k * gain * gain).sqrt())
        };
        let gp = gain + 0.5 * d;
        let gm = gain - 0.5 * d;
        let m = Self {
            gain_plus: gp,
            gain_minus: gm,
            s_nn: quadratic * gp * gm * a2 / 4.0,
            alpha_lo,
            v_dc: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    /// Relative linear and quadratic coefficients of the deviation.
    pub fn coefficients(&self) -> (f64, f64) {
        let v0 = self.reference();
        (
            (self.gain_plus - self.gain_minus) / v0,
            4.0 * self.s_nn / v0,
        )
    }

    /// S_VV at zero imbalance.
    pub fn reference(&self) -> f64 {
        self.gain_plus * self.gain_minus * self.alpha_lo * self.alpha_lo
    }

    pub fn s_vv(&self, v_dc: f64) -> f64 {
        self.reference() + (self.gain_plus - self.gain_minus) * v_dc + 4.0 * self.s_nn * v_dc * v_dc
    }
}

/// Relative deviation (S_VV(V) − S_VV(0))/S_VV(0) at each DC voltage.
pub fn predict_shot_systematics(cal: &CalibrationModel, v_dc_grid: &[f64]) -> Vec<f64> {
    let v0 = cal.reference();
    v_dc_grid.iter().map(|&v| (cal.s_vv(v) - v0) / v0).collect()
}

/// One measured relative deviation of the vacuum variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotDeviation {
    pub v_dc: f64,
    pub deviation: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationFit {
    pub model: CalibrationModel,
    pub offset: f64,
    pub linear: f64,
    pub linear_error: f64,
    pub quadratic: f64,
    pub quadratic_error: f64,
    pub report: FitReport,
}

/// Fits offset + linear·V + quadratic·V² and maps the coefficients onto a
/// detector model with mean gain `gain` and LO amplitude `alpha_lo`.
pub fn fit_shot_systematics(
    measured: &[ShotDeviation],
    gain: f64,
    alpha_lo: f64,
) -> Result<CalibrationFit> {
    if measured.len() < 4 {
        return Err(Error::InsufficientSamples {
            needed: 4,
            got: measured.len(),
        });
    }
    let lo = measured
        .iter()
        .map(|m| m.v_dc)
        .fold(f64::INFINITY, f64::min);
    let hi = measured
        .iter()
        .map(|m| m.v_dc)
        .fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1e-300) {
        return Err(Error::RankDeficient {
            directions: vec!["linear".into(), "quadratic".into()],
        });
    }
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::input("DC voltages must span both signs"));
    }
    if measured.iter().any(|m| !(m.std_error > 0.0)) {
        return Err(Error::input("deviation errors must be positive"));
    }
    let residuals = |c: &[f64]| {
        Ok(measured
            .iter()
            .map(|m| (c[0] + c[1] * m.v_dc + c[2] * m.v_dc * m.v_dc - m.deviation) / m.std_error)
            .collect())
    };
    let scale = measured
        .iter()
        .map(|m| m.deviation.abs())
        .fold(1e-6, f64::max);
    let report = lm_fit(
        residuals,
        &[
            Parameter::new("offset", 0.0).with_scale(scale),
            Parameter::new("linear", 0.0).with_scale(scale),
            Parameter::new("quadratic", 0.0).with_scale(scale),
        ],
        &LmOptions {
            scale_covariance: false,
            ..LmOptions::default()
        },
    )?;
    let (offset, linear, quadratic) = (report.values[0], report.values[1], report.values[2]);
    let model = CalibrationModel::from_coefficients(linear, quadratic.max(0.0), gain, alpha_lo)?;
    Ok(CalibrationFit {
        model,
        offset,
        linear,
        linear_error: report.uncertainties[1],
        quadratic,
        quadratic_error: report.uncertainties[2],
        report,
    })
}

/// Model deviations on `grid` with Gaussian scatter `noise`.
pub fn synthetic_shot_systematics(
    cal: &CalibrationModel,
    grid: &[f64],
    noise: f64,
    seed: u64,
) -> Vec<ShotDeviation> {
    predict_shot_systematics(cal, grid)
        .into_iter()
        .zip(gaussian_noise(grid.len(), seed))
        .zip(grid)
        .map(|((d, z), &v)| ShotDeviation {
            v_dc: v,
            deviation: d + noise * z,
            std_error: noise,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..21).map(|i| -1.0 + 0.1 * i as f64).collect()
    }

    #[test]
    fn balanced_detector_has_no_deviation() {
        let cal = CalibrationModel::from_coefficients(0.0, 0.0, 2.0, 1.5).unwrap();
        assert!(predict_shot_systematics(&cal, &grid())
            .iter()
            .all(|&d| d == 0.0));
    }

    #[test]
    fn gain_mismatch_is_linear() {
        let cal = CalibrationModel::from_coefficients(3e-3, 0.0, 1.0, 1.0).unwrap();
        let d = predict_shot_systematics(&cal, &grid());
        for (v, x) in grid().iter().zip(&d) {
            assert!((x - 3e-3 * v).abs() < 1e-14);
        }
        let (c1, c2) = cal.coefficients();
        assert!((c1 - 3e-3).abs() < 1e-15 && c2 == 0.0);
    }

    #[test]
    fn coefficients_round_trip() {
        let cal = CalibrationModel::from_coefficients(1e-3, 4e-3, 1.0, 1.0).unwrap();
        let clean = synthetic_shot_systematics(&cal, &grid(), 1e-12, 0);
        let fit = fit_shot_systematics(&clean, 1.0, 1.0).unwrap();
        assert!((fit.linear - 1e-3).abs() < 1e-9);
        assert!((fit.quadratic - 4e-3).abs() < 1e-9);
        assert!((fit.model.s_nn - cal.s_nn).abs() < 1e-9 * cal.s_nn);
    }

    #[test]
    fn linear_only_data_has_no_curvature() {
        let cal = CalibrationModel::from_coefficients(3e-3, 0.0, 1.0, 1.0).unwrap();
        let data = synthetic_shot_systematics(&cal, &grid(), 3e-4, 5);
        let fit = fit_shot_systematics(&data, 1.0, 1.0).unwrap();
        assert!(fit.quadratic.abs() < 3.0 * fit.quadratic_error);
    }

    #[test]
    fn zero_deviations_give_zero_coefficients() {
        let data: Vec<ShotDeviation> = grid()
            .iter()
            .map(|&v| ShotDeviation {
                v_dc: v,
                deviation: 0.0,
                std_error: 1e-3,
            })
            .collect();
        let fit = fit_shot_systematics(&data, 1.0, 1.0).unwrap();
        assert_eq!((fit.linear, fit.quadratic), (0.0, 0.0));
    }

    #[test]
    fn identical_voltages_are_ill_conditioned() {
        let data = vec![
            ShotDeviation {
                v_dc: 0.5,
                deviation: 1e-3,
                std_error: 1e-4
            };
            5
        ];
        assert!(matches!(
            fit_shot_systematics(&data, 1.0, 1.0),
            Err(Error::RankDeficient { .. })
        ));
    }
}
