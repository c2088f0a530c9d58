use std::path::PathBuf;

use serde::Serialize;

use super::Outputs;
use crate::config::RunConfig;
use crate::fitting::{
    fit_shot_systematics, predict_shot_systematics, synthetic_shot_systematics, CalibrationFit,
    CalibrationModel, ShotDeviation,
};
use crate::io::read_table_file;
use crate::model::Grid;
use crate::plot::{LinePlot, Series};
use crate::{Error, Result};

#[derive(Debug, Serialize)]
struct CalibrationOutput<'a> {
    /// Input file, or `synthetic` for data drawn from the configured model.
    source: String,
    fit: &'a CalibrationFit,
    /// Largest |fitted deviation| over the measured DC range.
    max_abs_deviation: f64,
}

/// Reads `v_dc, deviation, deviation_err` columns.
fn read_deviations(path: &std::path::Path) -> Result<Vec<ShotDeviation>> {
    let t = read_table_file(path)?;
    let col = |k: &str| {
        t.column(k)
            .ok_or_else(|| Error::Format(format!("{}: missing column `{k}`", path.display())))
    };
    let (v, d, e) = (col("v_dc")?, col("deviation")?, col("deviation_err")?);
    Ok((0..v.len())
        .map(|i| ShotDeviation {
            v_dc: v[i],
            deviation: d[i],
            std_error: e[i],
        })
        .collect())
}

/// Fits the shot-noise deviation versus DC voltage of the balanced
/// detector. Without a data file, deviations are synthesized from the
/// configured coefficients with the run seed.
pub fn cmd_calibrate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let cc = &cfg.calibrate;
    let (source, data) = match &cc.data {
        Some(p) => {
            let path = cfg.resolve(p);
            (path.display().to_string(), read_deviations(&path)?)
        }
        None => {
            let truth =
                CalibrationModel::from_coefficients(cc.linear, cc.quadratic, cc.gain, cc.alpha_lo)?;
            let grid = Grid::new(cc.v_dc_min, cc.v_dc_max, cc.points).values();
            let data = synthetic_shot_systematics(&truth, &grid, cc.noise, cfg.simulate.seed);
            ("synthetic".to_string(), data)
        }
    };
    let fit = fit_shot_systematics(&data, cc.gain, cc.alpha_lo)?;
    let mut out = Outputs::new(cfg)?;

    let v: Vec<f64> = data.iter().map(|d| d.v_dc).collect();
    let measured: Vec<f64> = data.iter().map(|d| d.deviation).collect();
    let err: Vec<f64> = data.iter().map(|d| d.std_error).collect();
    let model = predict_shot_systematics(&fit.model, &v);
    let fitted: Vec<f64> = v
        .iter()
        .map(|&x| fit.offset + fit.linear * x + fit.quadratic * x * x)
        .collect();
    let max_abs_deviation = fitted.iter().fold(0.0_f64, |m, d| m.max(d.abs()));

    out.table(
        "shot_systematics",
        &[("source", source.clone())],
        &[
            "v_dc",
            "deviation",
            "deviation_err",
            "fitted",
            "detector_model",
        ],
        &[&v, &measured, &err, &fitted, &model],
    )?;
    out.line_plot(
        "shot_systematics",
        &LinePlot::new("Shot-noise deviation", "V_DC (V)", "ΔS/S")
            .with(Series::new("measured", &v, &measured))
            .with(Series::new("fit", &v, &fitted)),
    )?;
    out.json(
        "calibration",
        &CalibrationOutput {
            source,
            fit: &fit,
            max_abs_deviation,
        },
    )?;
    if !fit.report.converged {
        return Err(Error::NotConverged(format!(
            "calibration fit: {}",
            fit.report.message
        )));
    }
    Ok(out.finish())
}
