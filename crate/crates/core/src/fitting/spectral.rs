//! Simultaneous fit of the six detected spectra for the optomechanical
//! couplings and detunings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lm::{lm_fit, FitReport, LmOptions, Parameter};
use crate::model::{output_psd, HomodyneAngles, Mode, SystemParams};
use crate::pipeline::{SpectrumSet, Window};
use crate::{hz, to_hz, Error, Result};

/// Expectation kernel of a segment-averaged periodogram: the estimate at a bin
/// is the true spectrum convolved with |W(f)|² of the segment window.
/// Offsets are in units of the bin spacing 1/T.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowKernel {
    pub oversampling: usize,
    pub half_width_bins: usize,
    /// Weights at offsets −half_width … +half_width in steps of 1/oversampling;
    /// the leakage beyond the table is split between the two end points.
    pub weights: Vec<f64>,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

impl WindowKernel {
    pub fn new(window: Window, half_width_bins: usize, oversampling: usize) -> Self {
        let os = oversampling.max(1);
        let m = (half_width_bins * os) as i64;
        let density = |x: f64| match window {
            Window::Rectangular => sinc(x).powi(2),
            Window::Hann => {
                let w = 0.5 * sinc(x) + 0.25 * sinc(x - 1.0) + 0.25 * sinc(x + 1.0);
                w * w / 0.375
            }
        };
        let mut weights: Vec<f64> = (-m..=m)
            .map(|j| density(j as f64 / os as f64) / os as f64)
            .collect();
        let tail = 1.0 - weights.iter().sum::<f64>();
        if m > 0 {
            let last = weights.len() - 1;
            weights[0] += 0.5 * tail;
            weights[last] += 0.5 * tail;
        } else {
            weights[0] = 1.0;
        }
        Self {
            oversampling: os,
            half_width_bins,
            weights,
        }
    }

    /// No smoothing: the model is evaluated at the bin centres.
    pub fn identity() -> Self {
        Self {
            oversampling: 1,
            half_width_bins: 0,
            weights: vec![1.0],
        }
    }
}

/// The six model spectra with vacuum 1, in the column order of
/// [`SpectrumSet::COLUMNS`], as seen through `kernel`.
pub fn expected_spectra(
    params: &SystemParams,
    angles: &HomodyneAngles,
    frequencies_hz: &[f64],
    kernel: &WindowKernel,
) -> Result<[Vec<f64>; 6]> {
    let k = frequencies_hz.len();
    if k == 0 {
        return Err(Error::input("empty frequency grid"));
    }
    let df = if k > 1 {
        frequencies_hz[1] - frequencies_hz[0]
    } else {
        1.0
    };
    if k > 1 {
        for w in frequencies_hz.windows(2) {
            if ((w[1] - w[0]) - df).abs() > 1e-6 * df {
                return Err(Error::input("frequency grid is not uniform"));
            }
        }
    }
    let os = kernel.oversampling;
    let m = kernel.half_width_bins * os;
    let n_fine = (k - 1) * os + 2 * m + 1;
    let f0 = frequencies_hz[0] - kernel.half_width_bins as f64 * df;
    let y = angles.conjugate();
    let fine: Vec<[f64; 6]> = (0..n_fine)
        .into_par_iter()
        .map(|i| {
            let w = hz(f0 + i as f64 * df / os as f64);
            let s = |j, kk, a: &HomodyneAngles| 2.0 * output_psd(w, j, kk, a, params);
            [
                s(Mode::A, Mode::A, angles),
                s(Mode::B, Mode::B, angles),
                s(Mode::A, Mode::B, angles),
                s(Mode::A, Mode::A, &y),
                s(Mode::B, Mode::B, &y),
                s(Mode::A, Mode::B, &y),
            ]
        })
        .collect();
    let mut out: [Vec<f64>; 6] = Default::default();
    for (c, col) in out.iter_mut().enumerate() {
        *col = (0..k)
            .map(|b| {
                let start = b * os;
                kernel
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(j, wt)| wt * fine[start + j][c])
                    .sum()
            })
            .collect();
    }
    Ok(out)
}

/// Starting point of the joint fit, in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointInit {
    pub g_a_hz: f64,
    pub g_b_hz: f64,
    pub delta_a_hz: f64,
    pub delta_b_hz: f64,
}

impl JointInit {
    pub fn from_params(p: &SystemParams) -> Self {
        Self {
            g_a_hz: to_hz(p.mode_a.g),
            g_b_hz: to_hz(p.mode_b.g),
            delta_a_hz: to_hz(p.mode_a.delta),
            delta_b_hz: to_hz(p.mode_b.delta),
        }
    }

    /// Every value multiplied by the matching factor.
    pub fn scaled(&self, factors: [f64; 4]) -> Self {
        Self {
            g_a_hz: self.g_a_hz * factors[0],
            g_b_hz: self.g_b_hz * factors[1],
            delta_a_hz: self.delta_a_hz * factors[2],
            delta_b_hz: self.delta_b_hz * factors[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFitOptions {
    /// Physical frequency window (Hz); Ω_m/2π ± 10 kHz if `None`.
    pub band_hz: Option<(f64, f64)>,
    /// Frequency ranges to leave out, e.g. calibration tones.
    pub exclude_hz: Vec<(f64, f64)>,
    /// Model the leakage of the segment window.
    pub window_kernel: bool,
    /// Kernel half width; by default the width of the fit window, so that
    /// leakage from the resonance reaches every bin.
    pub kernel_half_width_bins: Option<usize>,
    pub kernel_oversampling: usize,
    /// Fits with weights recomputed from the previous model.
    pub reweight_passes: usize,
    pub lm: LmOptions,
}

impl Default for SpectralFitOptions {
    fn default() -> Self {
        Self {
            band_hz: None,
            exclude_hz: Vec::new(),
            window_kernel: true,
            kernel_half_width_bins: None,
            kernel_oversampling: 8,
            reweight_passes: 2,
            lm: LmOptions {
                // Model spectra are smooth to ~1e-12, so tighter cost or step
                // tolerances only chase finite-difference noise.
                cost_tolerance: 1e-10,
                step_tolerance: 1e-9,
                ..LmOptions::default()
            },
        }
    }
}

impl SpectralFitOptions {
    /// Indices of the bins of `set` that enter the fit, in order; the
    /// residual traces of a report follow the same order.
    pub fn selected_bins(&self, set: &SpectrumSet, fixed: &SystemParams) -> Vec<usize> {
        let fm = to_hz(fixed.mech.omega_m);
        let (lo, hi) = self.band_hz.unwrap_or((fm - 10e3, fm + 10e3));
        (0..set.len())
            .filter(|&i| {
                let f = set.frequencies_hz[i];
                f >= lo && f <= hi && !self.exclude_hz.iter().any(|&(a, b)| f >= a && f <= b)
            })
            .collect()
    }
}

pub const JOINT_PARAMETERS: [&str; 4] = ["g_a_hz", "g_b_hz", "delta_a_hz", "delta_b_hz"];

/// `fixed` with the fitted couplings and detunings substituted.
pub fn fitted_params(report: &FitReport, fixed: &SystemParams) -> Result<SystemParams> {
    let get = |n: &str| {
        report
            .value(n)
            .ok_or_else(|| Error::input(format!("report has no parameter `{n}`")))
    };
    let mut p = *fixed;
    p.mode_a.g = hz(get("g_a_hz")?);
    p.mode_b.g = hz(get("g_b_hz")?);
    p.mode_a.delta = hz(get("delta_a_hz")?);
    p.mode_b.delta = hz(get("delta_b_hz")?);
    Ok(p)
}

fn with_values(fixed: &SystemParams, v: &[f64]) -> SystemParams {
    let mut p = *fixed;
    p.mode_a.g = hz(v[0]);
    p.mode_b.g = hz(v[1]);
    p.mode_a.delta = hz(v[2]);
    p.mode_b.delta = hz(v[3]);
    p
}

/// Fits g_A, g_B, Δ_A, Δ_B to all six spectra at once, holding everything
/// else in `fixed`. Residuals are weighted by the periodogram variance
/// S²/n (autos) and (S_AA S_BB + S_AB²)/2n (crosses).
pub fn fit_spectra_joint(
    set: &SpectrumSet,
    fixed: &SystemParams,
    init: &JointInit,
    opts: &SpectralFitOptions,
) -> Result<FitReport> {
    fixed.validate()?;
    if set.is_empty() {
        return Err(Error::input("spectrum set is empty"));
    }
    let ka = to_hz(fixed.mode_a.kappa);
    let kb = to_hz(fixed.mode_b.kappa);
    for (name, v, k) in [
        ("delta_a_hz", init.delta_a_hz, ka),
        ("delta_b_hz", init.delta_b_hz, kb),
    ] {
        if !(v.abs() < 0.5 * k) {
            return Err(Error::param(
                name,
                format!("initial detuning {v} Hz outside ±κ/2 = ±{} Hz", 0.5 * k),
            ));
        }
    }
    for (name, v) in [("g_a_hz", init.g_a_hz), ("g_b_hz", init.g_b_hz)] {
        if !(v > 0.0) {
            return Err(Error::param(name, "initial coupling must be positive"));
        }
    }
    let keep = opts.selected_bins(set, fixed);
    if keep.len() < 8 {
        return Err(Error::InsufficientSamples {
            needed: 8,
            got: keep.len(),
        });
    }
    // The model is evaluated on the contiguous grid spanning the kept bins.
    let first = keep[0];
    let last = *keep.last().expect("non-empty");
    let grid = &set.frequencies_hz[first..=last];
    let kernel = if opts.window_kernel {
        let width = opts
            .kernel_half_width_bins
            .unwrap_or((last - first + 1).max(32));
        WindowKernel::new(set.window, width, opts.kernel_oversampling)
    } else {
        WindowKernel::identity()
    };
    let data: Vec<&[f64]> = SpectrumSet::COLUMNS
        .iter()
        .map(|c| set.column(c).expect("known column"))
        .collect();
    let n = set.effective_segments.max(1.0);
    let sigmas = |s: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let at = |c: usize, i: usize| s[c][i];
        (0..6)
            .map(|c| {
                keep.iter()
                    .map(|&i| {
                        let i = i - first;
                        let var = match c {
                            2 => (at(0, i) * at(1, i) + at(2, i).powi(2)) / (2.0 * n),
                            5 => (at(3, i) * at(4, i) + at(5, i).powi(2)) / (2.0 * n),
                            _ => at(c, i).powi(2) / n,
                        };
                        var.sqrt()
                    })
                    .collect()
            })
            .collect()
    };
    let data_grid: Vec<Vec<f64>> = data.iter().map(|d| d[first..=last].to_vec()).collect();
    let mut weights = sigmas(&data_grid);

    let mut params = vec![
        Parameter::new("g_a_hz", init.g_a_hz).bounded(0.0, f64::INFINITY),
        Parameter::new("g_b_hz", init.g_b_hz).bounded(0.0, f64::INFINITY),
        Parameter::new("delta_a_hz", init.delta_a_hz)
            .bounded(-0.5 * ka, 0.5 * ka)
            .with_scale(0.1 * ka),
        Parameter::new("delta_b_hz", init.delta_b_hz)
            .bounded(-0.5 * kb, 0.5 * kb)
            .with_scale(0.1 * kb),
    ];
    let mut report = None;
    for pass in 0..opts.reweight_passes.max(1) {
        let w = &weights;
        let residuals = |v: &[f64]| -> Result<Vec<f64>> {
            let p = with_values(fixed, v);
            let model = expected_spectra(&p, &set.angles, grid, &kernel)?;
            let mut r = Vec::with_capacity(6 * keep.len());
            for c in 0..6 {
                for (j, &i) in keep.iter().enumerate() {
                    r.push((model[c][i - first] - data[c][i]) / w[c][j]);
                }
            }
            Ok(r)
        };
        let rep = lm_fit(residuals, &params, &opts.lm)?;
        // g = 0 sits behind a wall of undamped thermal motion that a local
        // search cannot cross, so the boundary is checked explicitly. If
        // switching a mode off fits as well, its detuning has no effect.
        let mut dead = Vec::new();
        for (g, d) in [(0, 2), (1, 3)] {
            let mut v = rep.values.clone();
            v[g] = 0.0;
            let c: f64 = residuals(&v)?.iter().map(|x| x * x).sum();
            if c <= rep.cost * (1.0 + 1e-12) {
                dead.push(JOINT_PARAMETERS[g].to_string());
                dead.push(JOINT_PARAMETERS[d].to_string());
            }
        }
        if !dead.is_empty() {
            return Err(Error::RankDeficient { directions: dead });
        }
        if pass + 1 < opts.reweight_passes {
            let model =
                expected_spectra(&with_values(fixed, &rep.values), &set.angles, grid, &kernel)?;
            weights = sigmas(&model);
            for (q, v) in params.iter_mut().zip(&rep.values) {
                q.value = *v;
            }
        }
        report = Some(rep);
    }
    let mut report = report.expect("at least one pass");
    let pieces: Vec<(String, usize)> = SpectrumSet::COLUMNS
        .iter()
        .map(|c| (c.to_string(), keep.len()))
        .collect();
    report.split_traces(&pieces)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::table_s1;
    use crate::pipeline::Normalization;

    fn noiseless_set(p: &SystemParams, angles: HomodyneAngles, window: Window) -> SpectrumSet {
        let df = 1.0 / 9e-3;
        let fm = to_hz(p.mech.omega_m);
        let freqs: Vec<f64> = (0..200)
            .map(|i| (fm - 11e3 + i as f64 * df).round())
            .collect();
        let freqs: Vec<f64> = (0..200).map(|i| freqs[0] + i as f64 * df).collect();
        let s = expected_spectra(p, &angles, &freqs, &WindowKernel::new(window, 16, 8)).unwrap();
        let [x_aa, x_bb, x_ab, y_aa, y_bb, y_ab] = s;
        SpectrumSet {
            frequencies_hz: freqs,
            x_aa,
            x_bb,
            x_ab,
            y_aa,
            y_bb,
            y_ab,
            n_segments: 200,
            effective_segments: 200.0,
            angles,
            segment_duration: 9e-3,
            window,
            normalization: Normalization::VacuumOne,
        }
    }

    #[test]
    fn kernels_are_normalized() {
        for w in [Window::Rectangular, Window::Hann] {
            let k = WindowKernel::new(w, 16, 8);
            assert!((k.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(k.weights.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn flat_spectrum_is_unchanged_by_kernel() {
        let p = table_s1().uncoupled();
        let freqs: Vec<f64> = (0..50).map(|i| 1.13e6 + i as f64 * 111.0).collect();
        let s = expected_spectra(
            &p,
            &HomodyneAngles::joint(0.2),
            &freqs,
            &WindowKernel::new(Window::Rectangular, 8, 4),
        )
        .unwrap();
        assert!(s[0].iter().all(|x| (x - 1.0).abs() < 1e-12));
        assert!(s[2].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn noiseless_spectra_are_recovered_exactly() {
        let p = table_s1();
        let set = noiseless_set(&p, HomodyneAngles::new(0.1, -0.2), Window::Rectangular);
        let truth = JointInit::from_params(&p);
        let init = truth.scaled([1.2, 0.8, 0.8, 1.2]);
        let opts = SpectralFitOptions {
            kernel_half_width_bins: Some(16),
            ..SpectralFitOptions::default()
        };
        let rep = fit_spectra_joint(&set, &p, &init, &opts).unwrap();
        assert!(rep.converged, "{}", rep.message);
        assert!(rep.cost < 1e-12, "{}", rep.cost);
        for (name, want) in JOINT_PARAMETERS.iter().zip([
            truth.g_a_hz,
            truth.g_b_hz,
            truth.delta_a_hz,
            truth.delta_b_hz,
        ]) {
            let got = rep.value(name).unwrap();
            assert!((got / want - 1.0).abs() < 1e-6, "{name}: {got} vs {want}");
        }
        assert_eq!(rep.traces.len(), 6);
    }

    #[test]
    fn no_signal_is_rank_deficient() {
        let p = table_s1();
        let set = noiseless_set(
            &p.uncoupled(),
            HomodyneAngles::joint(0.0),
            Window::Rectangular,
        );
        let init = JointInit::from_params(&p);
        match fit_spectra_joint(&set, &p, &init, &SpectralFitOptions::default()) {
            Err(Error::RankDeficient { directions }) => {
                assert!(
                    directions.contains(&"delta_a_hz".to_string()),
                    "{directions:?}"
                );
                assert!(
                    directions.contains(&"delta_b_hz".to_string()),
                    "{directions:?}"
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_bounds_init() {
        let p = table_s1();
        let set = noiseless_set(&p, HomodyneAngles::joint(0.0), Window::Rectangular);
        let mut init = JointInit::from_params(&p);
        init.delta_a_hz = to_hz(p.mode_a.kappa);
        assert!(fit_spectra_joint(&set, &p, &init, &SpectralFitOptions::default()).is_err());
    }
}
