use std::path::PathBuf;

use serde::Serialize;

use super::simulate::{Manifest, MANIFEST_FILE};
use super::Outputs;
use crate::config::RunConfig;
use crate::entanglement::{log_negativity, symplectic_nu_min, CovarianceMatrix4};
use crate::model::{inseparability, nu2, Engine, HomodyneAngles};
use crate::pipeline::{
    demod_tomography, epr_spectra, estimate_spectra, mode_covariance, nu_spectrum, AnglePair,
    DgczEstimate, ModeResponse, ModeTomography, WelchOptions,
};
use crate::plot::{LinePlot, Series};
use crate::synth::Kernel;
use crate::{hz, to_hz, Result};

#[derive(Debug, Serialize)]
struct ModeComparison {
    /// `model` or `vacuum` (for shot-noise-only run sets).
    reference: &'static str,
    covariance: CovarianceMatrix4,
    nu2: f64,
    /// (estimate − reference)/σ for every entry.
    z_scores: [[f64; 4]; 4],
    max_abs_z: f64,
    nu2_relative_deviation: f64,
}

#[derive(Debug, Serialize)]
struct TomographyOutput<'a> {
    normalization: &'static str,
    estimate: &'a ModeTomography,
    log_negativity: Option<f64>,
    comparison: Option<ModeComparison>,
}

#[derive(Debug, Serialize)]
struct Extremum {
    freq_hz: f64,
    value: f64,
    std_error: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    vacuum: bool,
    band_hz: [f64; 2],
    min_inseparability: Option<Extremum>,
    /// Among bins whose 2ν̃_− error is at most 3% of the value; single
    /// noisy bins near the thermal peak would otherwise win.
    min_nu2: Option<Extremum>,
    demod_freq_hz: f64,
    demod_bandwidth_hz: f64,
    demod_nu2: f64,
    demod_nu2_error: f64,
    dgcz: DgczEstimate,
}

const NU2_MAX_RELATIVE_ERROR: f64 = 0.03;

fn minimum(
    freqs: &[f64],
    values: &[f64],
    errors: &[f64],
    max_relative_error: f64,
) -> Option<Extremum> {
    (0..freqs.len())
        .filter(|&i| values[i].is_finite() && errors[i] <= max_relative_error * values[i].abs())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .map(|i| Extremum {
            freq_hz: freqs[i],
            value: values[i],
            std_error: errors[i],
        })
}

fn compare(
    est: &ModeTomography,
    reference: CovarianceMatrix4,
    label: &'static str,
) -> Result<ModeComparison> {
    let mut z = [[0.0; 4]; 4];
    let mut max_abs_z: f64 = 0.0;
    for (i, row) in z.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let se = est.reconstruction.std_errors[i][j];
            *v = if se > 0.0 {
                (est.reconstruction.cm.get(i, j) - reference.get(i, j)) / se
            } else {
                0.0
            };
            max_abs_z = max_abs_z.max(v.abs());
        }
    }
    let nu2 = 2.0 * symplectic_nu_min(&reference)?;
    Ok(ModeComparison {
        reference: label,
        covariance: reference,
        nu2,
        z_scores: z,
        max_abs_z,
        nu2_relative_deviation: est.nu2 / nu2 - 1.0,
    })
}

/// Analysis of a simulated (or recorded) run set: Welch spectra of the
/// {0, 0} and {π/2, π/2} runs, EPR variances and inseparability per bin,
/// boxcar tomography per bin, and Butterworth-mode tomography with the DGCZ
/// estimate at the demodulation frequency.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let ac = &cfg.analyze;
    let mut manifest_path = match &ac.records {
        Some(p) => cfg.resolve(p),
        None => cfg.output.dir.join(MANIFEST_FILE),
    };
    if manifest_path.is_dir() {
        manifest_path = manifest_path.join(MANIFEST_FILE);
    }
    let manifest = Manifest::load(&manifest_path)?;
    let record_dir = manifest_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_default();
    let (runs, shot) = manifest.load_records(&record_dir)?;
    let p = &cfg.params;
    let fm = to_hz(p.mech.omega_m);
    let band = [fm - ac.span_hz, fm + ac.span_hz];
    let mut out = Outputs::new(cfg)?;

    // Spectra of the X = {0, 0} and Y = {π/2, π/2} stages.
    let opts = WelchOptions::new(ac.segment_duration_s)
        .with_band(band[0], band[1])
        .with_window(ac.window, ac.overlap);
    let set = estimate_spectra(
        &runs[&AnglePair::ZeroZero],
        &runs[&AnglePair::HalfHalf],
        &shot,
        &opts,
    )?;
    let (headers, cols) = set.table_columns();
    out.table("spectra", &set.table_meta(), &headers, &cols)?;

    let epr = epr_spectra(&set);
    let n = epr.frequencies_hz.len();
    let model_i: Vec<f64> = if manifest.vacuum {
        vec![1.0; n]
    } else {
        let big_theta = set.angles.big_theta();
        epr.frequencies_hz
            .iter()
            .map(|&f| inseparability(Engine::Full, hz(f), big_theta, p))
            .collect()
    };
    out.table(
        "epr_spectra",
        &[("normalization", "vacuum_one".to_string())],
        &[
            "freq_hz",
            "x_plus",
            "y_minus",
            "inseparability",
            "inseparability_err",
            "inseparability_model",
        ],
        &[
            &epr.frequencies_hz,
            &epr.x_plus,
            &epr.y_minus,
            &epr.inseparability,
            &epr.inseparability_error,
            &model_i,
        ],
    )?;
    out.line_plot(
        "epr_spectra",
        &LinePlot::new("Inseparability spectrum", "frequency (Hz)", "I")
            .with(Series::new(
                "estimate",
                &epr.frequencies_hz,
                &epr.inseparability,
            ))
            .with(Series::new("model", &epr.frequencies_hz, &model_i))
            .with(Series::new(
                "separable bound",
                &[band[0], band[1]],
                &[1.0, 1.0],
            )),
    )?;

    // Per-bin tomography with the same segments.
    let nu = nu_spectrum(
        &runs,
        &shot,
        ac.segment_duration_s,
        Some((band[0], band[1])),
    )?;
    let model_nu: Vec<f64> = if manifest.vacuum {
        vec![1.0; nu.frequencies_hz.len()]
    } else {
        nu.frequencies_hz
            .iter()
            .map(|&f| nu2(Engine::Full, hz(f), p).unwrap_or(f64::NAN))
            .collect()
    };
    let physical: Vec<f64> = nu
        .physical
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();
    out.table(
        "nu_spectrum",
        &[
            ("normalization", "vacuum_one".to_string()),
            ("segment_duration_s", nu.segment_duration.to_string()),
            ("samples_per_bin", nu.samples_per_bin.to_string()),
        ],
        &["freq_hz", "nu2", "nu2_err", "physical", "nu2_model"],
        &[
            &nu.frequencies_hz,
            &nu.nu2,
            &nu.nu2_error,
            &physical,
            &model_nu,
        ],
    )?;
    out.line_plot(
        "nu_spectrum",
        &LinePlot::new("Smallest symplectic eigenvalue", "frequency (Hz)", "2ν̃_−")
            .with(Series::new("estimate", &nu.frequencies_hz, &nu.nu2))
            .with(Series::new("model", &nu.frequencies_hz, &model_nu))
            .with(Series::new(
                "separable bound",
                &[band[0], band[1]],
                &[1.0, 1.0],
            )),
    )?;

    // One demodulated mode.
    let tomo = demod_tomography(&runs, &shot, ac.demod_freq_hz, ac.bandwidth_hz)?;
    let comparison = if !ac.compare_model {
        None
    } else if manifest.vacuum {
        Some(compare(&tomo, CovarianceMatrix4::vacuum(), "vacuum")?)
    } else {
        let base = HomodyneAngles::new(manifest.base_theta_a, manifest.base_theta_b);
        let response = ModeResponse::new(Kernel::Butterworth4, ac.bandwidth_hz)?;
        Some(compare(
            &tomo,
            mode_covariance(ac.demod_freq_hz, &base, p, &response),
            "model",
        )?)
    };
    out.json(
        "tomography",
        &TomographyOutput {
            normalization: "vacuum_half",
            estimate: &tomo,
            log_negativity: if tomo.nu2.is_finite() {
                log_negativity(0.5 * tomo.nu2).ok()
            } else {
                None
            },
            comparison,
        },
    )?;

    out.json(
        "summary",
        &Summary {
            vacuum: manifest.vacuum,
            band_hz: band,
            min_inseparability: minimum(
                &epr.frequencies_hz,
                &epr.inseparability,
                &epr.inseparability_error,
                f64::INFINITY,
            ),
            min_nu2: minimum(
                &nu.frequencies_hz,
                &nu.nu2,
                &nu.nu2_error,
                NU2_MAX_RELATIVE_ERROR,
            ),
            demod_freq_hz: ac.demod_freq_hz,
            demod_bandwidth_hz: ac.bandwidth_hz,
            demod_nu2: tomo.nu2,
            demod_nu2_error: tomo.nu2_error,
            dgcz: tomo.dgcz,
        },
    )?;
    Ok(out.finish())
}
