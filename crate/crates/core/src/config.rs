//! Run configuration files (TOML).
//!
//! Physical parameters use the names of the canonical parameter table with
//! unit suffixes; frequencies are ordinary Hz and are converted to rad/s
//! here. Unknown keys are rejected, and every error carries the line of the
//! offending key when it can be located.
//!
//! ```toml
//! [mechanics]
//! omega_m_hz = 1.139e6
//! q = 1.03e9            # or gamma_m_hz
//! temperature_k = 10.0  # or n_th
//! m_eff_kg = 2.3e-12    # optional
//!
//! [cavity_a]
//! g_hz = 67.0e3
//! kappa_hz = 13.3e6
//! delta_over_kappa = -0.22   # or delta_hz
//! eta_c = 0.95
//! eta = 0.60
//! lambda_nm = 796.154        # optional
//! ```
//!
//! `[cavity_b]` mirrors `[cavity_a]`. The optional workflow sections
//! `[predict]`, `[simulate]`, `[analyze]`, `[fit]`, `[calibrate]` and
//! `[output]`, and the optional `[checks]` table of expected derived rates,
//! are described on their structs. `crates/core/examples/tableS1.toml` is a
//! complete instance.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{
    bose_occupation, HomodyneAngles, MechanicalParams, Mode, OpticalModeParams, SystemParams,
};
use crate::pipeline::Window;
use crate::{hz, Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mechanics: RawMechanics,
    cavity_a: RawCavity,
    cavity_b: RawCavity,
    checks: Option<TableChecks>,
    #[serde(default)]
    predict: PredictConfig,
    #[serde(default)]
    simulate: SimulateConfig,
    #[serde(default)]
    analyze: AnalyzeConfig,
    #[serde(default)]
    fit: FitConfig,
    #[serde(default)]
    calibrate: CalibrateConfig,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMechanics {
    omega_m_hz: f64,
    q: Option<f64>,
    gamma_m_hz: Option<f64>,
    temperature_k: Option<f64>,
    n_th: Option<f64>,
    m_eff_kg: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    g_hz: f64,
    kappa_hz: f64,
    delta_hz: Option<f64>,
    delta_over_kappa: Option<f64>,
    eta_c: f64,
    eta: f64,
    lambda_nm: Option<f64>,
}

/// Expected values of the derived rates (Hz) and efficiency, checked by
/// `predict` with a relative tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableChecks {
    pub gamma_qba_a_hz: Option<f64>,
    pub gamma_qba_b_hz: Option<f64>,
    pub gamma_meas_a_hz: Option<f64>,
    pub gamma_meas_b_hz: Option<f64>,
    pub gamma_thermal_hz: Option<f64>,
    pub gamma_dec_hz: Option<f64>,
    pub eta_meas: Option<f64>,
    #[serde(default = "default_check_tolerance")]
    pub tolerance: f64,
}

fn default_check_tolerance() -> f64 {
    0.015
}

/// `[predict]`: analytic grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictConfig {
    /// Half-width of the frequency band around ω_m (Hz).
    pub span_hz: f64,
    pub freq_points: usize,
    pub theta_points: usize,
    /// Frequency of the Θ scan and the covariance matrix (Hz).
    pub operating_freq_hz: f64,
    /// Θ at which the covariance matrix is reported (rad).
    pub theta: f64,
    /// Points of the coarser (Θ, Ω) surface.
    pub surface_freq_points: usize,
    pub surface_theta_points: usize,
    /// Also evaluate the toy model on the same grids.
    pub toy: bool,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            span_hz: 10e3,
            freq_points: 2001,
            theta_points: 721,
            operating_freq_hz: 1.1416e6,
            theta: 0.0,
            surface_freq_points: 201,
            surface_theta_points: 91,
            toy: false,
        }
    }
}

/// `[simulate]`: the five-angle-pair protocol plus a shot run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Physical frequency of record bin 0 (Hz). Defaults to ω_m/2π minus a
    /// quarter of the sample rate, which centres the resonance in the band.
    pub band_offset_hz: Option<f64>,
    pub theta_a: f64,
    pub theta_b: f64,
    pub seed: u64,
    /// Replace every signal run by vacuum noise.
    pub vacuum: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 65536.0,
            duration_s: 32.0,
            band_offset_hz: None,
            theta_a: 0.0,
            theta_b: 0.0,
            seed: 1,
            vacuum: false,
        }
    }
}

impl SimulateConfig {
    pub fn angles(&self) -> HomodyneAngles {
        HomodyneAngles::new(self.theta_a, self.theta_b)
    }
}

/// `[analyze]`: Welch spectra, boxcar tomography and the demodulated mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    /// Directory holding `manifest.json`; defaults to the output directory.
    pub records: Option<PathBuf>,
    pub segment_duration_s: f64,
    pub window: Window,
    pub overlap: f64,
    /// Half-width of the analysis band around ω_m (Hz).
    pub span_hz: f64,
    pub demod_freq_hz: f64,
    pub bandwidth_hz: f64,
    /// Compare the estimates with the model in the same file.
    pub compare_model: bool,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            records: None,
            segment_duration_s: 9e-3,
            window: Window::Rectangular,
            overlap: 0.0,
            span_hz: 10e3,
            demod_freq_hz: 1.1416e6,
            bandwidth_hz: 200.0,
            compare_model: true,
        }
    }
}

/// `[fit]`: joint spectral fit and detection-efficiency fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Spectrum CSV written by `analyze`; defaults to `spectra.csv` in the
    /// output directory.
    pub spectra: Option<PathBuf>,
    /// Start values as multiples of the configured g_A, g_B, Δ_A, Δ_B.
    pub init_scale: [f64; 4],
    pub span_hz: f64,
    /// Bands (Hz) left out of the fit.
    pub exclude_hz: Vec<[f64; 2]>,
    /// Imprecision CSVs (columns theta, value, std_error) per detector.
    pub imprecision_a: Option<PathBuf>,
    pub imprecision_b: Option<PathBuf>,
    /// Frequency at which the imprecision was read (Hz).
    pub imprecision_freq_hz: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            spectra: None,
            init_scale: [1.0; 4],
            span_hz: 10e3,
            exclude_hz: Vec::new(),
            imprecision_a: None,
            imprecision_b: None,
            imprecision_freq_hz: 1.141e6,
        }
    }
}

/// `[calibrate]`: balanced-detector systematics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    /// Measured deviations (columns v_dc, deviation, std_error). Without it,
    /// synthetic data are drawn from the coefficients below.
    pub data: Option<PathBuf>,
    /// Relative deviation per volt and per volt².
    pub linear: f64,
    pub quadratic: f64,
    pub gain: f64,
    pub alpha_lo: f64,
    pub v_dc_min: f64,
    pub v_dc_max: f64,
    pub points: usize,
    /// Scatter of the synthetic data.
    pub noise: f64,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            data: None,
            linear: 3e-3,
            quadratic: 0.0,
            gain: 1.0,
            alpha_lo: 1.0,
            v_dc_min: -1.0,
            v_dc_max: 1.0,
            points: 21,
            noise: 3e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// `[output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
    /// Also render SVG line plots and heatmaps.
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            svg: true,
        }
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: SystemParams,
    pub checks: Option<TableChecks>,
    pub predict: PredictConfig,
    pub simulate: SimulateConfig,
    pub analyze: AnalyzeConfig,
    pub fit: FitConfig,
    pub calibrate: CalibrateConfig,
    pub output: OutputConfig,
    /// Directory that relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| line_at(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        let v = Validator { text };
        let params = v.params(&raw)?;
        v.workflow(&raw)?;
        Ok(Self {
            params,
            checks: raw.checks,
            predict: raw.predict,
            simulate: raw.simulate,
            analyze: raw.analyze,
            fit: raw.fit,
            calibrate: raw.calibrate,
            output: raw.output,
            base_dir: PathBuf::new(),
        })
    }

    /// `p` relative to the config file's directory, unless absolute.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Band offset of synthetic records (Hz).
    pub fn band_offset_hz(&self) -> f64 {
        self.simulate.band_offset_hz.unwrap_or_else(|| {
            (crate::to_hz(self.params.mech.omega_m) - 0.25 * self.simulate.sample_rate_hz).round()
        })
    }
}

/// 1-based line of byte offset `pos`.
fn line_at(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    /// Line of `key` inside `[section]`, if present.
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut inside = false;
        for (i, line) in self.text.lines().enumerate() {
            let t = line.trim();
            if t.starts_with('[') {
                inside = t.trim_start_matches('[').trim_end_matches(']').trim() == section;
                continue;
            }
            if inside {
                if let Some((k, _)) = t.split_once('=') {
                    if k.trim() == key {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    fn err(&self, section: &str, key: &str, message: impl std::fmt::Display) -> Error {
        Error::Config {
            line: self
                .line_of(section, key)
                .or_else(|| self.line_of(section, "")),
            message: format!("{section}.{key}: {message}"),
        }
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("must be positive, got {v}")))
        }
    }

    fn fraction(&self, section: &str, key: &str, v: f64) -> Result<f64> {
        if v > 0.0 && v <= 1.0 {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("must lie in (0, 1], got {v}")))
        }
    }

    fn one_of(
        &self,
        section: &str,
        a: (&str, Option<f64>),
        b: (&str, Option<f64>),
    ) -> Result<(bool, f64)> {
        match (a.1, b.1) {
            (Some(x), None) => Ok((true, x)),
            (None, Some(y)) => Ok((false, y)),
            (Some(_), Some(_)) => Err(self.err(
                section,
                b.0,
                format!("give either {} or {}, not both", a.0, b.0),
            )),
            (None, None) => Err(Error::Config {
                line: None,
                message: format!("[{section}] needs {} or {}", a.0, b.0),
            }),
        }
    }

    fn params(&self, raw: &RawConfig) -> Result<SystemParams> {
        let m = &raw.mechanics;
        let s = "mechanics";
        let omega_m = hz(self.positive(s, "omega_m_hz", m.omega_m_hz)?);
        let gamma_m = match self.one_of(s, ("q", m.q), ("gamma_m_hz", m.gamma_m_hz))? {
            (true, q) => omega_m / self.positive(s, "q", q)?,
            (false, g) => hz(self.positive(s, "gamma_m_hz", g)?),
        };
        let n_th = match self.one_of(s, ("temperature_k", m.temperature_k), ("n_th", m.n_th))? {
            (true, t) => bose_occupation(omega_m, self.positive(s, "temperature_k", t)?),
            (false, n) => {
                if !(n >= 0.0 && n.is_finite()) {
                    return Err(self.err(s, "n_th", format!("must be non-negative, got {n}")));
                }
                n
            }
        };
        let mut mech = MechanicalParams {
            omega_m,
            gamma_m,
            n_th,
            m_eff: None,
        };
        if let Some(mass) = m.m_eff_kg {
            mech.m_eff = Some(self.positive(s, "m_eff_kg", mass)?);
        }
        let params = SystemParams {
            mech,
            mode_a: self.cavity("cavity_a", Mode::A, &raw.cavity_a)?,
            mode_b: self.cavity("cavity_b", Mode::B, &raw.cavity_b)?,
        };
        params.validate().map_err(|e| Error::Config {
            line: None,
            message: e.to_string(),
        })?;
        Ok(params)
    }

    fn cavity(&self, s: &str, label: Mode, c: &RawCavity) -> Result<OpticalModeParams> {
        if !(c.g_hz >= 0.0 && c.g_hz.is_finite()) {
            return Err(self.err(s, "g_hz", format!("must be non-negative, got {}", c.g_hz)));
        }
        let kappa = hz(self.positive(s, "kappa_hz", c.kappa_hz)?);
        let delta = match self.one_of(
            s,
            ("delta_over_kappa", c.delta_over_kappa),
            ("delta_hz", c.delta_hz),
        )? {
            (true, r) => r * kappa,
            (false, d) => hz(d),
        };
        if !delta.is_finite() {
            return Err(self.err(s, "delta_hz", "must be finite"));
        }
        let wavelength = match c.lambda_nm {
            Some(l) => Some(self.positive(s, "lambda_nm", l)? * 1e-9),
            None => None,
        };
        Ok(OpticalModeParams {
            label,
            g: hz(c.g_hz),
            kappa,
            delta,
            eta_c: self.fraction(s, "eta_c", c.eta_c)?,
            eta: self.fraction(s, "eta", c.eta)?,
            wavelength,
        })
    }

    fn workflow(&self, raw: &RawConfig) -> Result<()> {
        let p = &raw.predict;
        self.positive("predict", "span_hz", p.span_hz)?;
        self.positive("predict", "operating_freq_hz", p.operating_freq_hz)?;
        for (k, n) in [
            ("freq_points", p.freq_points),
            ("theta_points", p.theta_points),
            ("surface_freq_points", p.surface_freq_points),
            ("surface_theta_points", p.surface_theta_points),
        ] {
            if n < 3 {
                return Err(self.err("predict", k, format!("needs at least 3 points, got {n}")));
            }
        }
        let sim = &raw.simulate;
        self.positive("simulate", "sample_rate_hz", sim.sample_rate_hz)?;
        self.positive("simulate", "duration_s", sim.duration_s)?;
        if let Some(off) = sim.band_offset_hz {
            if !(off >= 0.0 && off.is_finite()) {
                return Err(self.err(
                    "simulate",
                    "band_offset_hz",
                    format!("must be non-negative, got {off}"),
                ));
            }
        }
        let a = &raw.analyze;
        self.positive("analyze", "segment_duration_s", a.segment_duration_s)?;
        self.positive("analyze", "span_hz", a.span_hz)?;
        self.positive("analyze", "demod_freq_hz", a.demod_freq_hz)?;
        self.positive("analyze", "bandwidth_hz", a.bandwidth_hz)?;
        if !(0.0..1.0).contains(&a.overlap) {
            return Err(self.err(
                "analyze",
                "overlap",
                format!("must lie in [0, 1), got {}", a.overlap),
            ));
        }
        let f = &raw.fit;
        for (i, v) in f.init_scale.iter().enumerate() {
            // Δ may start at zero, g may not.
            if !v.is_finite() || (i < 2 && *v <= 0.0) {
                return Err(self.err("fit", "init_scale", format!("entry {i} is invalid: {v}")));
            }
        }
        self.positive("fit", "span_hz", f.span_hz)?;
        self.positive("fit", "imprecision_freq_hz", f.imprecision_freq_hz)?;
        for band in &f.exclude_hz {
            if !(band[0] < band[1]) {
                return Err(self.err("fit", "exclude_hz", format!("band {band:?} is empty")));
            }
        }
        let c = &raw.calibrate;
        self.positive("calibrate", "gain", c.gain)?;
        self.positive("calibrate", "alpha_lo", c.alpha_lo)?;
        if !(c.quadratic >= 0.0) {
            return Err(self.err("calibrate", "quadratic", "must be non-negative"));
        }
        if !(c.v_dc_min < c.v_dc_max) {
            return Err(self.err("calibrate", "v_dc_max", "must exceed v_dc_min"));
        }
        if c.points < 4 {
            return Err(self.err("calibrate", "points", "needs at least 4 points"));
        }
        self.positive("calibrate", "noise", c.noise)?;
        if let Some(ch) = &raw.checks {
            self.positive("checks", "tolerance", ch.tolerance)?;
        }
        Ok(())
    }
}
