use std::path::{Path, PathBuf};

use serde::Serialize;

use super::Outputs;
use crate::config::{OutputFormat, RunConfig};
use crate::fitting::{
    expected_spectra, fit_efficiency, fit_spectra_joint, fitted_params, EfficiencyFit, FitReport,
    ImprecisionPoint, JointInit, SpectralFitOptions, WindowKernel,
};
use crate::io::read_table_file;
use crate::model::Mode;
use crate::pipeline::SpectrumSet;
use crate::plot::{LinePlot, Series};
use crate::{hz, to_hz, Error, Result};

#[derive(Debug, Serialize)]
struct SpectralFitOutput<'a> {
    source: String,
    init: JointInit,
    band_hz: [f64; 2],
    exclude_hz: &'a [[f64; 2]],
    fitted: JointInit,
    eta_meas: f64,
    report: &'a FitReport,
}

#[derive(Debug, Serialize)]
struct EfficiencyOutput<'a> {
    source: String,
    freq_hz: f64,
    fit: &'a EfficiencyFit,
}

fn default_path(cfg: &RunConfig, configured: &Option<PathBuf>, stem: &str) -> PathBuf {
    match configured {
        Some(p) => cfg.resolve(p),
        None => {
            let ext = match cfg.output.format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            };
            cfg.output.dir.join(format!("{stem}.{ext}"))
        }
    }
}

fn read_imprecision(path: &Path) -> Result<Vec<ImprecisionPoint>> {
    let t = read_table_file(path)?;
    let col = |k: &str| {
        t.column(k)
            .ok_or_else(|| Error::Format(format!("{}: missing column `{k}`", path.display())))
    };
    let (theta, value, err) = (col("theta")?, col("imprecision")?, col("imprecision_err")?);
    Ok((0..theta.len())
        .map(|i| ImprecisionPoint {
            theta: theta[i],
            value: value[i],
            std_error: err[i],
        })
        .collect())
}

/// Joint spectral fit of g_A, g_B, Δ_A, Δ_B to the analyzed spectra, then
/// per-detector efficiency fits to imprecision data when present.
///
/// Reports are written before a non-converged fit is turned into an error,
/// so the diagnostics survive the failure.
pub fn cmd_fit(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let fc = &cfg.fit;
    let p = &cfg.params;
    let spectra_path = default_path(cfg, &fc.spectra, "spectra");
    let set = SpectrumSet::from_table(&read_table_file(&spectra_path)?)?;
    let fm = to_hz(p.mech.omega_m);
    let band = [fm - fc.span_hz, fm + fc.span_hz];
    let opts = SpectralFitOptions {
        band_hz: Some((band[0], band[1])),
        exclude_hz: fc.exclude_hz.iter().map(|r| (r[0], r[1])).collect(),
        ..SpectralFitOptions::default()
    };
    let init = JointInit::from_params(p).scaled(fc.init_scale);
    let mut out = Outputs::new(cfg)?;

    let report = fit_spectra_joint(&set, p, &init, &opts)?;
    let fitted = fitted_params(&report, p)?;
    out.json(
        "fit_spectra",
        &SpectralFitOutput {
            source: spectra_path.display().to_string(),
            init,
            band_hz: band,
            exclude_hz: &fc.exclude_hz,
            fitted: JointInit::from_params(&fitted),
            eta_meas: fitted.measurement_efficiency(),
            report: &report,
        },
    )?;

    // Residuals and model on the bins that entered the fit.
    let keep = opts.selected_bins(&set, p);
    let freqs: Vec<f64> = keep.iter().map(|&i| set.frequencies_hz[i]).collect();
    let mut headers = vec!["freq_hz".to_string()];
    let mut cols: Vec<Vec<f64>> = vec![freqs.clone()];
    if let (Some(&first), Some(&last)) = (keep.first(), keep.last()) {
        let grid = &set.frequencies_hz[first..=last];
        let kernel = WindowKernel::new(
            set.window,
            (last - first + 1).max(32),
            opts.kernel_oversampling,
        );
        let model = expected_spectra(&fitted, &set.angles, grid, &kernel)?;
        for (c, name) in SpectrumSet::COLUMNS.iter().enumerate() {
            let data = set.column(name).expect("known column");
            headers.push((*name).to_string());
            cols.push(keep.iter().map(|&i| data[i]).collect());
            headers.push(format!("{name}_model"));
            cols.push(keep.iter().map(|&i| model[c][i - first]).collect());
            headers.push(format!("{name}_residual"));
            cols.push(report.traces[c].residuals.clone());
        }
        let mut plot = LinePlot::new(
            "Joint spectral fit",
            "frequency (Hz)",
            "spectrum (vacuum 1)",
        );
        for (k, name) in ["x_aa", "x_bb"].iter().enumerate() {
            plot = plot
                .with(Series::new(
                    format!("{name} data"),
                    &freqs,
                    &cols[1 + 3 * k],
                ))
                .with(Series::new(
                    format!("{name} model"),
                    &freqs,
                    &cols[2 + 3 * k],
                ));
        }
        out.line_plot("fit_spectra", &plot)?;
    }
    let col_refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    out.table(
        "fit_residuals",
        &[
            ("normalization", "vacuum_one".to_string()),
            ("converged", report.converged.to_string()),
        ],
        &headers.iter().map(String::as_str).collect::<Vec<_>>(),
        &col_refs,
    )?;

    let mut failures = Vec::new();
    if !report.converged {
        failures.push(format!("spectral fit: {}", report.message));
    }
    for (mode, configured, stem, name) in [
        (
            Mode::A,
            &fc.imprecision_a,
            "imprecision_a",
            "fit_efficiency_a",
        ),
        (
            Mode::B,
            &fc.imprecision_b,
            "imprecision_b",
            "fit_efficiency_b",
        ),
    ] {
        let path = default_path(cfg, configured, stem);
        if configured.is_none() && !path.exists() {
            continue;
        }
        let points = read_imprecision(&path)?;
        let fit = fit_efficiency(&points, mode, hz(fc.imprecision_freq_hz), p)?;
        if !fit.report.converged {
            failures.push(format!("efficiency fit {mode}: {}", fit.report.message));
        }
        out.json(
            name,
            &EfficiencyOutput {
                source: path.display().to_string(),
                freq_hz: fc.imprecision_freq_hz,
                fit: &fit,
            },
        )?;
    }
    if !failures.is_empty() {
        return Err(Error::NotConverged(failures.join("; ")));
    }
    Ok(out.finish())
}
