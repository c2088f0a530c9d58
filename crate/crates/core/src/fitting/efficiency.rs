//! Detection efficiency from displacement imprecision at several homodyne
//! angles.

use serde::{Deserialize, Serialize};

use super::lm::{lm_fit, FitReport, LmOptions, Parameter};
use crate::model::{output_psd_terms, HomodyneAngles, Mode, SystemParams};
use crate::synth::gaussian_noise;
use crate::{Error, Result};

/// Displacement imprecision (m²/Hz) measured at homodyne angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprecisionPoint {
    pub theta: f64,
    pub value: f64,
    pub std_error: f64,
}

/// Imprecision 2 x_zpf²/f_imp of detector `mode` at angle `theta`. Infinite
/// where the angle carries no displacement information.
pub fn imprecision_psd(omega: f64, mode: Mode, theta: f64, params: &SystemParams) -> Result<f64> {
    let x_zpf = params.mech.x_zpf().ok_or_else(|| {
        Error::param(
            "m_eff_kg",
            "effective mass is needed to express imprecision in m²/Hz",
        )
    })?;
    let f = output_psd_terms(omega, mode, mode, &HomodyneAngles::joint(theta), params).transduction;
    Ok(if f > 0.0 {
        2.0 * x_zpf * x_zpf / f
    } else {
        f64::INFINITY
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyFit {
    pub mode: Mode,
    pub eta: f64,
    pub eta_error: f64,
    pub report: FitReport,
}

/// Fits the detection efficiency η of `mode`, holding everything else in
/// `params`. The imprecision scales as 1/η at every angle.
pub fn fit_efficiency(
    points: &[ImprecisionPoint],
    mode: Mode,
    omega: f64,
    params: &SystemParams,
) -> Result<EfficiencyFit> {
    params.validate()?;
    let mut distinct: Vec<f64> = points
        .iter()
        .map(|p| p.theta.rem_euclid(std::f64::consts::PI))
        .collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    if distinct.len() < 3 {
        return Err(Error::RankDeficient {
            directions: vec![format!(
                "theta (only {} distinct angles, need 3)",
                distinct.len()
            )],
        });
    }
    // Imprecision at unit efficiency, so that S(θ) = s1(θ)/η.
    let mut unit = *params;
    unit.mode_mut(mode).eta = 1.0;
    let s1: Vec<f64> = points
        .iter()
        .map(|p| imprecision_psd(omega, mode, p.theta, &unit))
        .collect::<Result<_>>()?;
    if let Some(i) = s1.iter().position(|s| !s.is_finite()) {
        return Err(Error::input(format!(
            "angle {} rad carries no displacement signal for detector {mode}",
            points[i].theta
        )));
    }
    for p in points {
        if !(p.value > 0.0 && p.std_error > 0.0) {
            return Err(Error::input(
                "imprecision values and errors must be positive",
            ));
        }
    }
    let start = params.mode(mode).eta;
    let residuals = |v: &[f64]| {
        Ok(points
            .iter()
            .zip(&s1)
            .map(|(p, s)| (s / v[0] - p.value) / p.std_error)
            .collect())
    };
    let report = lm_fit(
        residuals,
        &[Parameter::new("eta", start).bounded(1e-6, f64::INFINITY)],
        &LmOptions {
            scale_covariance: false,
            ..LmOptions::default()
        },
    )?;
    Ok(EfficiencyFit {
        mode,
        eta: report.values[0],
        eta_error: report.uncertainties[0],
        report,
    })
}

/// Imprecision values from the model with multiplicative Gaussian scatter of
/// relative size `rel_noise`, with matching error bars.
pub fn synthetic_imprecision(
    omega: f64,
    mode: Mode,
    thetas: &[f64],
    params: &SystemParams,
    rel_noise: f64,
    seed: u64,
) -> Result<Vec<ImprecisionPoint>> {
    let noise = gaussian_noise(thetas.len(), seed);
    thetas
        .iter()
        .zip(noise)
        .map(|(&theta, z)| {
            let s = imprecision_psd(omega, mode, theta, params)?;
            Ok(ImprecisionPoint {
                theta,
                value: s * (1.0 + rel_noise * z),
                std_error: s * rel_noise,
            })
        })
        .collect()
}
