//! Welch spectra of the two photocurrents, normalized to the shot floor.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::model::{HomodyneAngles, Mode};
use crate::synth::TimeSeriesRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Boxcar segments, the mode definition used for frequency-resolved
    /// analysis.
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// Welch segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchOptions {
    pub segment_duration: f64,
    pub window: Window,
    /// Fractional overlap between consecutive segments, in [0, 1).
    pub overlap: f64,
    /// Physical frequency band to keep (Hz); all positive bins if `None`.
    pub band_hz: Option<(f64, f64)>,
}

impl WelchOptions {
    pub fn new(segment_duration: f64) -> Self {
        Self {
            segment_duration,
            window: Window::Rectangular,
            overlap: 0.0,
            band_hz: None,
        }
    }

    pub fn with_band(mut self, lo_hz: f64, hi_hz: f64) -> Self {
        self.band_hz = Some((lo_hz, hi_hz));
        self
    }

    pub fn with_window(mut self, window: Window, overlap: f64) -> Self {
        self.window = window;
        self.overlap = overlap;
        self
    }
}

/// Segment-averaged two-sided periodograms, in the units of the record
/// (vacuum 1/2 for shot-noise units).
#[derive(Debug, Clone)]
pub struct CrossPeriodogram {
    pub frequencies_hz: Vec<f64>,
    pub paa: Vec<f64>,
    pub pbb: Vec<f64>,
    pub pab: Vec<Complex64>,
    pub n_segments: usize,
    pub segment_len: usize,
}

/// Effective number of independent averages, accounting for the correlation
/// between overlapping tapered segments.
pub fn effective_segments(
    n_segments: usize,
    window: Window,
    overlap: f64,
    segment_len: usize,
) -> f64 {
    let shift = (((1.0 - overlap) * segment_len as f64).round() as usize).max(1);
    if shift >= segment_len {
        return n_segments as f64;
    }
    let w = window.coefficients(segment_len);
    let norm: f64 = w.iter().map(|x| x * x).sum();
    let mut inflation = 1.0;
    let mut lag = shift;
    let mut k = 1.0;
    while lag < segment_len {
        let rho: f64 = (0..segment_len - lag)
            .map(|i| w[i] * w[i + lag])
            .sum::<f64>()
            / norm;
        inflation += 2.0 * (1.0 - k / n_segments as f64).max(0.0) * rho * rho;
        lag += shift;
        k += 1.0;
    }
    n_segments as f64 / inflation
}

pub fn cross_periodogram(
    record: &TimeSeriesRecord,
    opts: &WelchOptions,
) -> Result<CrossPeriodogram> {
    record.validate()?;
    let fs = record.sample_rate_hz;
    if !(opts.segment_duration > 0.0) {
        return Err(Error::param("segment_duration", "must be positive"));
    }
    if !(0.0..1.0).contains(&opts.overlap) {
        return Err(Error::param("overlap", "must lie in [0, 1)"));
    }
    let len = (opts.segment_duration * fs).round() as usize;
    if len < 16 {
        return Err(Error::param(
            "segment_duration",
            "segments must hold at least 16 samples",
        ));
    }
    let shift = (((1.0 - opts.overlap) * len as f64).round() as usize).max(1);
    let n = record.len();
    if n < len {
        return Err(Error::input(format!(
            "record of {n} samples is shorter than one segment ({len})"
        )));
    }
    let n_segments = (n - len) / shift + 1;
    let df = fs / len as f64;
    let bins: Vec<usize> = (1..len.div_ceil(2))
        .filter(|&k| {
            let f = record.band_offset_hz + k as f64 * df;
            opts.band_hz.is_none_or(|(lo, hi)| f >= lo && f <= hi)
        })
        .collect();
    if bins.is_empty() {
        return Err(Error::input("no frequency bins inside the requested band"));
    }
    let w = opts.window.coefficients(len);
    let norm = 1.0 / (fs * w.iter().map(|x| x * x).sum::<f64>() * n_segments as f64);
    let xa = record.mode(Mode::A)?;
    let xb = record.mode(Mode::B)?;
    let fft = FftPlanner::new().plan_fft_forward(len);
    let mut z = vec![Complex64::new(0.0, 0.0); len];
    let mut paa = vec![0.0; bins.len()];
    let mut pbb = vec![0.0; bins.len()];
    let mut pab = vec![Complex64::new(0.0, 0.0); bins.len()];
    for s in 0..n_segments {
        let o = s * shift;
        for i in 0..len {
            z[i] = Complex64::new(w[i] * xa[o + i], w[i] * xb[o + i]);
        }
        fft.process(&mut z);
        for (j, &k) in bins.iter().enumerate() {
            let (p, m) = (z[k], z[len - k].conj());
            let a = 0.5 * (p + m);
            let b = Complex64::new(0.0, -0.5) * (p - m);
            paa[j] += a.norm_sqr();
            pbb[j] += b.norm_sqr();
            pab[j] += a * b.conj();
        }
    }
    paa.iter_mut().for_each(|x| *x *= norm);
    pbb.iter_mut().for_each(|x| *x *= norm);
    pab.iter_mut().for_each(|x| *x *= norm);
    Ok(CrossPeriodogram {
        frequencies_hz: bins
            .iter()
            .map(|&k| record.band_offset_hz + k as f64 * df)
            .collect(),
        paa,
        pbb,
        pab,
        n_segments,
        segment_len: len,
    })
}

/// Normalization of a spectrum or ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Single quadrature vacuum variance 1/2.
    VacuumHalf,
    /// Single detector vacuum spectrum 1.
    VacuumOne,
}

/// The six spectra of one X/Y measurement pair, with vacuum 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSet {
    pub frequencies_hz: Vec<f64>,
    pub x_aa: Vec<f64>,
    pub x_bb: Vec<f64>,
    pub x_ab: Vec<f64>,
    pub y_aa: Vec<f64>,
    pub y_bb: Vec<f64>,
    pub y_ab: Vec<f64>,
    pub n_segments: usize,
    /// Effective number of independent averages per bin.
    pub effective_segments: f64,
    /// Angles of the X stage; the Y stage is advanced by π/2.
    pub angles: HomodyneAngles,
    pub segment_duration: f64,
    pub window: Window,
    pub normalization: Normalization,
}

impl SpectrumSet {
    pub fn len(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_hz.is_empty()
    }

    /// Spectrum by column name: `x_aa`, `x_bb`, `x_ab`, `y_aa`, `y_bb`, `y_ab`.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        Some(match name {
            "x_aa" => &self.x_aa,
            "x_bb" => &self.x_bb,
            "x_ab" => &self.x_ab,
            "y_aa" => &self.y_aa,
            "y_bb" => &self.y_bb,
            "y_ab" => &self.y_ab,
            _ => return None,
        })
    }

    pub const COLUMNS: [&'static str; 6] = ["x_aa", "x_bb", "x_ab", "y_aa", "y_bb", "y_ab"];
}

fn check_compatible(a: &TimeSeriesRecord, b: &TimeSeriesRecord, what: &str) -> Result<()> {
    if a.sample_rate_hz != b.sample_rate_hz {
        return Err(Error::input(format!(
            "{what}: sample rates differ ({} vs {} Hz)",
            a.sample_rate_hz, b.sample_rate_hz
        )));
    }
    if a.band_offset_hz != b.band_offset_hz {
        return Err(Error::input(format!("{what}: band offsets differ")));
    }
    Ok(())
}

/// Shot floor of each detector, averaged over the kept band.
fn shot_floor(shot: &CrossPeriodogram) -> [f64; 2] {
    let n = shot.paa.len() as f64;
    [
        shot.paa.iter().sum::<f64>() / n,
        shot.pbb.iter().sum::<f64>() / n,
    ]
}

/// Welch spectra of an X-stage record, a Y-stage record and a shot-noise
/// record, normalized so that vacuum reads 1.
pub fn estimate_spectra(
    x_record: &TimeSeriesRecord,
    y_record: &TimeSeriesRecord,
    shot: &TimeSeriesRecord,
    opts: &WelchOptions,
) -> Result<SpectrumSet> {
    check_compatible(x_record, y_record, "X and Y records")?;
    check_compatible(x_record, shot, "signal and shot records")?;
    if x_record.len() != y_record.len() {
        return Err(Error::input("X and Y records differ in length"));
    }
    let px = cross_periodogram(x_record, opts)?;
    let py = cross_periodogram(y_record, opts)?;
    let ps = cross_periodogram(shot, opts)?;
    let n_eff_shot = effective_segments(ps.n_segments, opts.window, opts.overlap, ps.segment_len)
        * ps.paa.len() as f64;
    if n_eff_shot < 1e4 {
        return Err(Error::InsufficientSamples {
            needed: 10_000,
            got: n_eff_shot as usize,
        });
    }
    if px.n_segments < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: px.n_segments,
        });
    }
    let [fa, fb] = shot_floor(&ps);
    let fab = (fa * fb).sqrt();
    let scale = |v: &[f64], f: f64| v.iter().map(|x| x / f).collect::<Vec<_>>();
    let cross = |v: &[Complex64]| v.iter().map(|x| x.re / fab).collect::<Vec<_>>();
    Ok(SpectrumSet {
        frequencies_hz: px.frequencies_hz.clone(),
        x_aa: scale(&px.paa, fa),
        x_bb: scale(&px.pbb, fb),
        x_ab: cross(&px.pab),
        y_aa: scale(&py.paa, fa),
        y_bb: scale(&py.pbb, fb),
        y_ab: cross(&py.pab),
        n_segments: px.n_segments,
        effective_segments: effective_segments(
            px.n_segments,
            opts.window,
            opts.overlap,
            px.segment_len,
        ),
        angles: x_record.angles,
        segment_duration: px.segment_len as f64 / x_record.sample_rate_hz,
        window: opts.window,
        normalization: Normalization::VacuumOne,
    })
}

/// Joint-quadrature spectra and inseparability, per bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EprSpectra {
    pub frequencies_hz: Vec<f64>,
    /// S_{X+X+}, vacuum 2.
    pub x_plus: Vec<f64>,
    /// S_{Y−Y−}, vacuum 2.
    pub y_minus: Vec<f64>,
    /// (S_{X+X+} + S_{Y−Y−})/4, vacuum 1.
    pub inseparability: Vec<f64>,
    /// 1σ statistical error of the inseparability from segment averaging.
    pub inseparability_error: Vec<f64>,
}

pub fn epr_spectra(set: &SpectrumSet) -> EprSpectra {
    let n = set.effective_segments.max(1.0);
    let x_plus: Vec<f64> = (0..set.len())
        .map(|i| set.x_aa[i] + set.x_bb[i] + 2.0 * set.x_ab[i])
        .collect();
    let y_minus: Vec<f64> = (0..set.len())
        .map(|i| set.y_aa[i] + set.y_bb[i] - 2.0 * set.y_ab[i])
        .collect();
    let inseparability = x_plus
        .iter()
        .zip(&y_minus)
        .map(|(x, y)| 0.25 * (x + y))
        .collect();
    // Each averaged periodogram of a Gaussian signal has relative error 1/√n.
    let inseparability_error = x_plus
        .iter()
        .zip(&y_minus)
        .map(|(x, y)| 0.25 * (x * x + y * y).sqrt() / n.sqrt())
        .collect();
    EprSpectra {
        frequencies_hz: set.frequencies_hz.clone(),
        x_plus,
        y_minus,
        inseparability,
        inseparability_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_shot_record, Sampling};

    #[test]
    fn effective_segments_limits() {
        assert_eq!(effective_segments(100, Window::Rectangular, 0.0, 64), 100.0);
        let hann = effective_segments(1000, Window::Hann, 0.5, 256);
        assert!(
            (hann / 1000.0 - 1.0 / (1.0 + 2.0 * 0.1667f64.powi(2))).abs() < 0.01,
            "{hann}"
        );
    }

    #[test]
    fn vacuum_spectra_are_flat_at_one() {
        let s = Sampling::new(8192.0, 1 << 19, 0.0).unwrap();
        let x = synthesize_shot_record(&s, 1).unwrap();
        let y = synthesize_shot_record(&s, 2).unwrap();
        let shot = synthesize_shot_record(&s, 3).unwrap();
        let set = estimate_spectra(
            &x,
            &y,
            &shot,
            &WelchOptions::new(1.0 / 16.0).with_band(100.0, 4000.0),
        )
        .unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        for name in SpectrumSet::COLUMNS {
            let v = set.column(name).unwrap();
            let want = if name.ends_with("ab") { 0.0 } else { 1.0 };
            assert!((mean(v) - want).abs() < 0.01, "{name} {}", mean(v));
        }
        let e = epr_spectra(&set);
        assert!((mean(&e.inseparability) - 1.0).abs() < 0.01);
    }

    #[test]
    fn errors_on_mismatch_and_bad_segments() {
        let s = Sampling::new(8192.0, 1 << 16, 0.0).unwrap();
        let x = synthesize_shot_record(&s, 1).unwrap();
        let other =
            synthesize_shot_record(&Sampling::new(4096.0, 1 << 16, 0.0).unwrap(), 1).unwrap();
        let o = WelchOptions::new(0.05);
        assert!(matches!(
            estimate_spectra(&x, &x, &other, &o),
            Err(Error::InvalidInput(_))
        ));
        assert!(estimate_spectra(&x, &x, &x, &WelchOptions::new(0.0)).is_err());
    }
}
