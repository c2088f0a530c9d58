//! Frequency-domain synthesis of stationary Gaussian photocurrents.
//!
//! Each input noise gets one complex Gaussian per positive-frequency bin; the
//! detector spectra are the transfer rows applied to those draws, and both
//! real records come out of a single inverse FFT of `X_A + i X_B`. Random
//! draws are addressed by (input, bin), so the result does not depend on how
//! the bins are split across threads.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::record::{Channel, RecordKind, TimeSeriesRecord};
use super::transfer::{transfer_rows, N_INPUTS};
use crate::model::{HomodyneAngles, SystemParams};
use crate::{hz, Error, Result};

/// Sampling of a synthesized record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    /// Physical frequency represented by sample frequency zero.
    pub band_offset_hz: f64,
}

impl Sampling {
    pub fn new(sample_rate_hz: f64, n_samples: usize, band_offset_hz: f64) -> Result<Self> {
        let s = Self {
            sample_rate_hz,
            n_samples,
            band_offset_hz,
        };
        s.validate()?;
        Ok(s)
    }

    /// Sampling for `duration` seconds; the sample count must come out as a
    /// power of two.
    pub fn from_duration(duration: f64, sample_rate_hz: f64, band_offset_hz: f64) -> Result<Self> {
        let n = duration * sample_rate_hz;
        let rounded = n.round();
        if !(rounded >= 1.0) || (n - rounded).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::param(
                "duration",
                format!("duration × sample rate = {n} is not an integer sample count"),
            ));
        }
        Self::new(sample_rate_hz, rounded as usize, band_offset_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::param("sample_rate_hz", "must be positive"));
        }
        if !(self.band_offset_hz >= 0.0 && self.band_offset_hz.is_finite()) {
            return Err(Error::param("band_offset_hz", "must be non-negative"));
        }
        if self.n_samples < 2 || !self.n_samples.is_power_of_two() {
            return Err(Error::param(
                "n_samples",
                format!("record length {} is not a power of two", self.n_samples),
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.n_samples as f64 / self.sample_rate_hz
    }
}

const CHUNK: usize = 8192;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 1], so the logarithm below stays finite.
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Unit-variance complex normal (E|z|² = 1) from two uniforms.
fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = (-uniform(rng).ln()).sqrt();
    let phi = std::f64::consts::TAU * uniform(rng);
    Complex64::from_polar(r, phi)
}

/// `n` independent standard normal draws, reproducible per seed.
pub fn gaussian_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let z = complex_normal(&mut rng) * std::f64::consts::SQRT_2;
        out.push(z.re);
        out.push(z.im);
    }
    out.truncate(n);
    out
}

/// RNG positioned at the draw for (`stream`, `bin`); every bin consumes
/// exactly four 32-bit words.
fn rng_at(seed: u64, stream: u64, bin: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(4 * bin as u128);
    rng
}

/// Spectrum of a real record pair from per-bin transfer rows.
fn synthesize_pair(
    sampling: &Sampling,
    seed: u64,
    rows_at: impl Fn(f64) -> [[Complex64; N_INPUTS]; 2] + Sync,
) -> (Vec<f64>, Vec<f64>) {
    let n = sampling.n_samples;
    let half = n / 2;
    let fs = sampling.sample_rate_hz;
    let scale = (n as f64 * fs / 2.0).sqrt();
    let df = fs / n as f64;
    let offset = sampling.band_offset_hz;

    let mut spec = vec![[Complex64::new(0.0, 0.0); 2]; half + 1];
    spec.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(ci, out)| {
            let k0 = ci * CHUNK;
            let mut rngs: Vec<ChaCha8Rng> =
                (0..N_INPUTS as u64).map(|l| rng_at(seed, l, k0)).collect();
            for (i, slot) in out.iter_mut().enumerate() {
                let k = k0 + i;
                let rows = rows_at(hz(offset + k as f64 * df));
                let mut acc = [Complex64::new(0.0, 0.0); 2];
                for (l, rng) in rngs.iter_mut().enumerate() {
                    let w = complex_normal(rng);
                    acc[0] += rows[0][l] * w;
                    acc[1] += rows[1][l] * w;
                }
                for a in acc.iter_mut() {
                    *a *= scale;
                    // Zero and Nyquist bins of a real record are real.
                    if k == 0 || k == half {
                        *a = Complex64::new(std::f64::consts::SQRT_2 * a.re, 0.0);
                    }
                }
                *slot = acc;
            }
        });

    let i = Complex64::new(0.0, 1.0);
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for (k, s) in spec.iter().enumerate() {
        z[k] = s[0] + i * s[1];
        if k != 0 && k != half {
            z[n - k] = s[0].conj() + i * s[1].conj();
        }
    }
    drop(spec);
    FftPlanner::new().plan_fft_inverse(n).process(&mut z);
    let inv = 1.0 / n as f64;
    z.iter().map(|c| (c.re * inv, c.im * inv)).unzip()
}

/// Photocurrent records of both detectors at `angles`.
pub fn synthesize_records(
    params: &SystemParams,
    angles: &HomodyneAngles,
    sampling: &Sampling,
    seed: u64,
) -> Result<TimeSeriesRecord> {
    params.validate()?;
    sampling.validate()?;
    let (a, b) = synthesize_pair(sampling, seed, |w| transfer_rows(w, angles, params));
    TimeSeriesRecord::new(
        sampling.sample_rate_hz,
        sampling.band_offset_hz,
        *angles,
        RecordKind::Signal,
        seed,
        vec![
            Channel {
                name: "A".into(),
                data: a,
            },
            Channel {
                name: "B".into(),
                data: b,
            },
        ],
    )
}

/// Vacuum record for both detectors (blocked cavity outputs): white noise
/// with PSD 1/2, i.e. raw variance `sample_rate_hz / 2` per sample.
pub fn synthesize_shot_record(sampling: &Sampling, seed: u64) -> Result<TimeSeriesRecord> {
    sampling.validate()?;
    let sd = (sampling.sample_rate_hz / 2.0).sqrt();
    let n = sampling.n_samples;
    let draw = |stream: u64| -> Vec<f64> {
        let mut out = vec![0.0; n];
        out.par_chunks_mut(2 * CHUNK)
            .enumerate()
            .for_each(|(ci, chunk)| {
                // One complex normal (two real ones) per pair of samples.
                let mut rng = rng_at(seed, stream, ci * CHUNK);
                for pair in chunk.chunks_mut(2) {
                    let z = complex_normal(&mut rng) * std::f64::consts::SQRT_2;
                    pair[0] = sd * z.re;
                    if pair.len() > 1 {
                        pair[1] = sd * z.im;
                    }
                }
            });
        out
    };
    TimeSeriesRecord::new(
        sampling.sample_rate_hz,
        sampling.band_offset_hz,
        HomodyneAngles::joint(0.0),
        RecordKind::ShotNoise,
        seed,
        vec![
            Channel {
                name: "A".into(),
                data: draw(0),
            },
            Channel {
                name: "B".into(),
                data: draw(1),
            },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::table_s1;

    fn variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
    }

    #[test]
    fn sampling_validation() {
        assert!(Sampling::from_duration(1.0, 1024.0, 0.0).is_ok());
        assert!(Sampling::from_duration(1.0, 1000.0, 0.0).is_err());
        assert!(Sampling::new(1.0, 3, 0.0).is_err());
        assert!(Sampling::new(-1.0, 4, 0.0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let p = table_s1();
        let s = Sampling::new(65536.0, 1 << 14, 1.12e6).unwrap();
        let a = synthesize_records(&p, &HomodyneAngles::joint(0.0), &s, 5).unwrap();
        let b = synthesize_records(&p, &HomodyneAngles::joint(0.0), &s, 5).unwrap();
        let c = synthesize_records(&p, &HomodyneAngles::joint(0.0), &s, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.channels[0].data, c.channels[0].data);
    }

    #[test]
    fn vacuum_variance_scaling() {
        let s = Sampling::new(2048.0, 1 << 16, 0.0).unwrap();
        let shot = synthesize_shot_record(&s, 1).unwrap();
        let p = table_s1().uncoupled();
        let sig = synthesize_records(&p, &HomodyneAngles::joint(0.3), &s, 1).unwrap();
        let tol = 4.0 * (2.0 / (1 << 16) as f64).sqrt();
        for r in [&shot, &sig] {
            for c in &r.channels {
                assert!(
                    (variance(&c.data) / 1024.0 - 1.0).abs() < tol,
                    "{}",
                    variance(&c.data)
                );
            }
        }
    }
}
