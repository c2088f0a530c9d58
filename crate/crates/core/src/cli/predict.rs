use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::{rel, Outputs};
use crate::config::RunConfig;
use crate::entanglement::{is_physical, log_negativity, symplectic_nu_min, CovarianceMatrix4};
use crate::model::{
    inseparability, min_inseparability, min_nu2, min_over_theta, model_covariance_matrix, nu2,
    Engine, Grid, HomodyneAngles, SystemParams,
};
use crate::plot::{Heatmap, LinePlot, Series};
use crate::{hz, to_hz, Result};

#[derive(Debug, Serialize)]
struct Rates {
    gamma_qba_a_hz: f64,
    gamma_qba_b_hz: f64,
    gamma_meas_a_hz: f64,
    gamma_meas_b_hz: f64,
    gamma_thermal_hz: f64,
    gamma_dec_hz: f64,
    eta_meas: f64,
}

impl Rates {
    fn of(p: &SystemParams) -> Self {
        Self {
            gamma_qba_a_hz: to_hz(p.mode_a.qba_rate_resonant()),
            gamma_qba_b_hz: to_hz(p.mode_b.qba_rate_resonant()),
            gamma_meas_a_hz: to_hz(p.mode_a.measurement_rate()),
            gamma_meas_b_hz: to_hz(p.mode_b.measurement_rate()),
            gamma_thermal_hz: to_hz(p.mech.thermal_decoherence_rate()),
            gamma_dec_hz: to_hz(p.decoherence_rate()),
            eta_meas: p.measurement_efficiency(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Check {
    quantity: &'static str,
    computed: f64,
    expected: f64,
    relative_deviation: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct EngineMetrics {
    /// Minimum of I over the (Θ, Ω) box.
    min_inseparability: f64,
    min_inseparability_freq_hz: f64,
    min_inseparability_theta: f64,
    /// Minimum over Θ at the operating frequency.
    operating_inseparability: f64,
    operating_theta: f64,
    min_nu2: f64,
    min_nu2_freq_hz: f64,
    /// Logarithmic negativity (bits) at the 2ν̃_− minimum.
    log_negativity: f64,
    operating_nu2: f64,
    operating_log_negativity: f64,
}

#[derive(Debug, Serialize)]
struct Metrics {
    rates: Rates,
    checks: Vec<Check>,
    checks_pass: bool,
    operating_freq_hz: f64,
    band_hz: [f64; 2],
    full: EngineMetrics,
    toy: Option<EngineMetrics>,
}

#[derive(Debug, Serialize)]
struct CovarianceOutput<'a> {
    freq_hz: f64,
    theta_a: f64,
    theta_b: f64,
    normalization: &'static str,
    matrix: &'a CovarianceMatrix4,
    nu2: f64,
    log_negativity: f64,
    physical: bool,
}

fn engine_metrics(
    engine: Engine,
    p: &SystemParams,
    omegas: Grid,
    theta_points: usize,
    operating: f64,
) -> Result<EngineMetrics> {
    let m = min_inseparability(engine, p, omegas, theta_points);
    let (op_theta, op_i) = min_over_theta(engine, hz(operating), p, theta_points);
    let (w_nu, v_nu) = min_nu2(engine, p, omegas)?;
    let op_nu = nu2(engine, hz(operating), p)?;
    Ok(EngineMetrics {
        min_inseparability: m.value,
        min_inseparability_freq_hz: to_hz(m.omega),
        min_inseparability_theta: m.big_theta,
        operating_inseparability: op_i,
        operating_theta: op_theta,
        min_nu2: v_nu,
        min_nu2_freq_hz: to_hz(w_nu),
        log_negativity: log_negativity(0.5 * v_nu)?,
        operating_nu2: op_nu,
        operating_log_negativity: log_negativity(0.5 * op_nu)?,
    })
}

fn checks(cfg: &RunConfig, rates: &Rates) -> Vec<Check> {
    let Some(c) = cfg.checks else {
        return Vec::new();
    };
    [
        ("gamma_qba_a_hz", rates.gamma_qba_a_hz, c.gamma_qba_a_hz),
        ("gamma_qba_b_hz", rates.gamma_qba_b_hz, c.gamma_qba_b_hz),
        ("gamma_meas_a_hz", rates.gamma_meas_a_hz, c.gamma_meas_a_hz),
        ("gamma_meas_b_hz", rates.gamma_meas_b_hz, c.gamma_meas_b_hz),
        (
            "gamma_thermal_hz",
            rates.gamma_thermal_hz,
            c.gamma_thermal_hz,
        ),
        ("gamma_dec_hz", rates.gamma_dec_hz, c.gamma_dec_hz),
        ("eta_meas", rates.eta_meas, c.eta_meas),
    ]
    .into_iter()
    .filter_map(|(q, got, want)| {
        want.map(|w| {
            let d = rel(got, w);
            Check {
                quantity: q,
                computed: got,
                expected: w,
                relative_deviation: d,
                pass: d.abs() <= c.tolerance,
            }
        })
    })
    .collect()
}

/// Analytic predictions: metrics, the Θ scan at the operating frequency,
/// the frequency spectrum of min-over-Θ I and 2ν̃_−, the (Θ, Ω) surface and
/// the covariance matrix at the operating point.
pub fn cmd_predict(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = &cfg.params;
    let pc = &cfg.predict;
    let fm = to_hz(p.mech.omega_m);
    let band = [fm - pc.span_hz, fm + pc.span_hz];
    let omegas = Grid::new(hz(band[0]), hz(band[1]), pc.freq_points);
    let mut out = Outputs::new(cfg)?;

    let rates = Rates::of(p);
    let checks = checks(cfg, &rates);
    let full = engine_metrics(
        Engine::Full,
        p,
        omegas,
        pc.theta_points,
        pc.operating_freq_hz,
    )?;
    let toy = if pc.toy {
        Some(engine_metrics(
            Engine::Toy,
            p,
            omegas,
            pc.theta_points,
            pc.operating_freq_hz,
        )?)
    } else {
        None
    };
    let engines: Vec<(Engine, &str)> = if pc.toy {
        vec![(Engine::Full, "full"), (Engine::Toy, "toy")]
    } else {
        vec![(Engine::Full, "full")]
    };

    // Θ scan at the operating frequency.
    let thetas = Grid::new(-FRAC_PI_2, FRAC_PI_2, pc.theta_points).values();
    let scan: Vec<Vec<f64>> = engines
        .iter()
        .map(|&(e, _)| {
            thetas
                .iter()
                .map(|&t| inseparability(e, hz(pc.operating_freq_hz), t, p))
                .collect()
        })
        .collect();
    let mut headers = vec!["theta".to_string()];
    headers.extend(engines.iter().map(|(_, n)| format!("inseparability_{n}")));
    let mut cols: Vec<&[f64]> = vec![&thetas];
    cols.extend(scan.iter().map(Vec::as_slice));
    let meta = [
        ("freq_hz", pc.operating_freq_hz.to_string()),
        ("normalization", "vacuum_one".to_string()),
    ];
    out.table(
        "theta_scan",
        &meta,
        &headers.iter().map(String::as_str).collect::<Vec<_>>(),
        &cols,
    )?;
    let mut plot = LinePlot::new(
        format!("I(Θ) at {} Hz", pc.operating_freq_hz),
        "Θ (rad)",
        "I",
    );
    for (s, (_, n)) in scan.iter().zip(&engines) {
        plot = plot.with(Series::new(*n, &thetas, s));
    }
    out.line_plot("theta_scan", &plot)?;

    // Spectrum: best I over Θ and 2ν̃_− at every frequency.
    let freqs: Vec<f64> = omegas.values().into_iter().map(to_hz).collect();
    let mut spec_cols: Vec<Vec<f64>> = Vec::new();
    let mut spec_headers = vec!["freq_hz".to_string()];
    for &(e, n) in &engines {
        let rows: Vec<(f64, f64, f64)> = freqs
            .par_iter()
            .map(|&f| {
                let (t, i) = min_over_theta(e, hz(f), p, pc.theta_points);
                (i, t, nu2(e, hz(f), p).unwrap_or(f64::NAN))
            })
            .collect();
        spec_cols.push(rows.iter().map(|r| r.0).collect());
        spec_cols.push(rows.iter().map(|r| r.1).collect());
        spec_cols.push(rows.iter().map(|r| r.2).collect());
        spec_headers.extend([
            format!("min_inseparability_{n}"),
            format!("best_theta_{n}"),
            format!("nu2_{n}"),
        ]);
    }
    let mut cols: Vec<&[f64]> = vec![&freqs];
    cols.extend(spec_cols.iter().map(Vec::as_slice));
    out.table(
        "spectrum",
        &[("normalization", "vacuum_one".to_string())],
        &spec_headers.iter().map(String::as_str).collect::<Vec<_>>(),
        &cols,
    )?;
    let mut plot = LinePlot::new(
        "Inseparability and 2ν̃_− spectra",
        "frequency (Hz)",
        "vacuum units",
    );
    for (k, (_, n)) in engines.iter().enumerate() {
        plot = plot
            .with(Series::new(
                format!("min I ({n})"),
                &freqs,
                &spec_cols[3 * k],
            ))
            .with(Series::new(
                format!("2ν̃_− ({n})"),
                &freqs,
                &spec_cols[3 * k + 2],
            ));
    }
    out.line_plot("spectrum", &plot)?;

    // (Θ, Ω) surface of the full model.
    let sf = Grid::new(band[0], band[1], pc.surface_freq_points).values();
    let st = Grid::new(-FRAC_PI_2, FRAC_PI_2, pc.surface_theta_points).values();
    let z: Vec<Vec<f64>> = st
        .par_iter()
        .map(|&t| {
            sf.iter()
                .map(|&f| inseparability(Engine::Full, hz(f), t, p))
                .collect()
        })
        .collect();
    let (mut lf, mut lt, mut lz) = (Vec::new(), Vec::new(), Vec::new());
    for (row, &t) in z.iter().zip(&st) {
        for (&v, &f) in row.iter().zip(&sf) {
            lf.push(f);
            lt.push(t);
            lz.push(v);
        }
    }
    out.table(
        "surface",
        &[
            ("normalization", "vacuum_one".to_string()),
            ("engine", "full".to_string()),
        ],
        &["freq_hz", "theta", "inseparability"],
        &[&lf, &lt, &lz],
    )?;
    out.heatmap(
        "surface",
        &Heatmap {
            title: "I(Θ, Ω)".into(),
            x_label: "frequency (Hz)".into(),
            y_label: "Θ (rad)".into(),
            x: sf,
            y: st,
            z,
        },
    )?;

    // Covariance matrix at the operating point.
    let angles = HomodyneAngles::joint(pc.theta);
    let cm = model_covariance_matrix(hz(pc.operating_freq_hz), &angles, p);
    let nu = symplectic_nu_min(&cm)?;
    out.json(
        "covariance",
        &CovarianceOutput {
            freq_hz: pc.operating_freq_hz,
            theta_a: angles.theta_a(),
            theta_b: angles.theta_b(),
            normalization: "vacuum_half",
            matrix: &cm,
            nu2: 2.0 * nu,
            log_negativity: log_negativity(nu)?,
            physical: is_physical(&cm).physical,
        },
    )?;

    out.json(
        "metrics",
        &Metrics {
            checks_pass: checks.iter().all(|c| c.pass),
            rates,
            checks,
            operating_freq_hz: pc.operating_freq_hz,
            band_hz: band,
            full,
            toy,
        },
    )?;
    Ok(out.finish())
}
