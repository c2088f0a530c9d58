//! Rectangular temporal modes from segment FFTs.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::ensemble::{Kernel, QuadratureEnsemble};
use super::record::TimeSeriesRecord;
use crate::model::Mode;
use crate::{Error, Result};

/// Boxcar modes of one record, one ensemble per frequency bin.
#[derive(Debug, Clone)]
pub struct BoxcarModes {
    pub segment_len: usize,
    pub frequencies_hz: Vec<f64>,
    pub ensembles: Vec<QuadratureEnsemble>,
}

/// FFTs of non-overlapping segments of `segment_duration` seconds. The real
/// and imaginary parts of each bin give two ensemble members per segment.
/// Only bins whose physical frequency lies in `band_hz` are kept (all bins
/// if `None`).
pub fn boxcar_modes(
    record: &TimeSeriesRecord,
    segment_duration: f64,
    band_hz: Option<(f64, f64)>,
) -> Result<BoxcarModes> {
    record.validate()?;
    let fs = record.sample_rate_hz;
    let len = (segment_duration * fs).round() as usize;
    if len < 16 {
        return Err(Error::param(
            "segment_duration",
            "segments must hold at least 16 samples",
        ));
    }
    let n_seg = record.len() / len;
    if n_seg == 0 {
        return Err(Error::input(format!(
            "record of {} samples is shorter than one {len}-sample segment",
            record.len()
        )));
    }
    let df = fs / len as f64;
    let bins: Vec<usize> = (1..len.div_ceil(2))
        .filter(|&k| {
            let f = record.band_offset_hz + k as f64 * df;
            band_hz.is_none_or(|(lo, hi)| f >= lo && f <= hi)
        })
        .collect();
    let xa = record.mode(Mode::A)?;
    let xb = record.mode(Mode::B)?;
    let fft = FftPlanner::new().plan_fft_forward(len);
    let mut acc: Vec<[Vec<f64>; 2]> = bins
        .iter()
        .map(|_| [Vec::with_capacity(2 * n_seg), Vec::with_capacity(2 * n_seg)])
        .collect();
    let mut z = vec![Complex64::new(0.0, 0.0); len];
    let half = Complex64::new(0.5, 0.0);
    let neg_half_i = Complex64::new(0.0, -0.5);
    for s in 0..n_seg {
        let r = s * len..(s + 1) * len;
        for ((zi, &a), &b) in z.iter_mut().zip(&xa[r.clone()]).zip(&xb[r]) {
            *zi = Complex64::new(a, b);
        }
        fft.process(&mut z);
        for (slot, &k) in acc.iter_mut().zip(&bins) {
            let (p, m) = (z[k], z[len - k].conj());
            let ca = half * (p + m);
            let cb = neg_half_i * (p - m);
            slot[0].push(ca.re);
            slot[0].push(ca.im);
            slot[1].push(cb.re);
            slot[1].push(cb.im);
        }
    }
    // Vacuum: E|X_k|² = len·fs/2, split evenly between real and imaginary parts.
    let nominal = len as f64 * fs / 4.0;
    let ensembles = acc
        .into_iter()
        .zip(&bins)
        .map(|([a, b], &k)| QuadratureEnsemble {
            a,
            b,
            demod_frequency_hz: record.band_offset_hz + k as f64 * df,
            bandwidth_hz: df,
            kernel: Kernel::Boxcar,
            shot_reference: [nominal; 2],
            angles: record.angles,
        })
        .collect();
    Ok(BoxcarModes {
        segment_len: len,
        frequencies_hz: bins
            .iter()
            .map(|&k| record.band_offset_hz + k as f64 * df)
            .collect(),
        ensembles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate::{synthesize_shot_record, Sampling};

    #[test]
    fn bin_spacing_is_inverse_segment_time() {
        let s = Sampling::new(15.0e6 / 64.0, 1 << 16, 0.0).unwrap();
        let r = synthesize_shot_record(&s, 2).unwrap();
        let m = boxcar_modes(&r, 9e-3, None).unwrap();
        let df = m.frequencies_hz[1] - m.frequencies_hz[0];
        assert!((df - 1.0 / 9e-3).abs() < 0.2, "{df}");
    }

    #[test]
    fn shot_bins_are_vacuum() {
        let s = Sampling::new(8192.0, 1 << 20, 0.0).unwrap();
        let r = synthesize_shot_record(&s, 3).unwrap();
        let m = boxcar_modes(&r, 1.0 / 32.0, Some((500.0, 1500.0))).unwrap();
        assert!(!m.ensembles.is_empty());
        for e in m.ensembles {
            let e = e.normalized();
            let n = e.len() as f64;
            for x in [&e.a, &e.b] {
                let v = x.iter().map(|v| v * v).sum::<f64>() / n;
                assert!((v - 0.5).abs() < 4.5 * 0.5 * (2.0 / n).sqrt(), "{v}");
            }
        }
    }

    #[test]
    fn short_record_is_an_error() {
        let s = Sampling::new(1024.0, 64, 0.0).unwrap();
        let r = synthesize_shot_record(&s, 3).unwrap();
        assert!(boxcar_modes(&r, 1.0, None).is_err());
        assert!(boxcar_modes(&r, 1.0 / 1024.0, None).is_err());
    }
}
