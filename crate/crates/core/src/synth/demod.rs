//! Digital down-conversion to a narrow temporal mode.

use std::f64::consts::TAU;

use super::ensemble::{Kernel, QuadratureEnsemble};
use super::filter::Butterworth;
use super::record::TimeSeriesRecord;
use crate::model::Mode;
use crate::{Error, Result};

pub const FILTER_ORDER: usize = 4;

/// Ratio of the decimated rate to the filter bandwidth.
pub const OVERSAMPLING: usize = 8;

/// Filter settling time in units of 1/bandwidth, discarded at the start.
const SETTLE_PERIODS: f64 = 10.0;

/// Sideband quadratures at `f_demod_hz` (physical frequency) of both
/// detectors: mix with 2cos and 2sin, low-pass with a 4th-order Butterworth
/// of cutoff `bandwidth_hz`, decimate to about 8× the bandwidth, and keep
/// every 8th sample so that ensemble members are spaced by about
/// 1/bandwidth. The cosine samples come first, followed by the sine samples;
/// both carry the same second moments for stationary input.
///
/// The nominal shot reference is the output variance for vacuum input,
/// computed from the filter's impulse response.
pub fn demodulate(
    record: &TimeSeriesRecord,
    f_demod_hz: f64,
    bandwidth_hz: f64,
) -> Result<QuadratureEnsemble> {
    record.validate()?;
    let fs = record.sample_rate_hz;
    let f_if = f_demod_hz - record.band_offset_hz;
    if !(f_if > 0.0 && f_if < 0.5 * fs) {
        return Err(Error::param(
            "f_demod_hz",
            format!(
                "{f_demod_hz} Hz is outside the record band ({} .. {} Hz)",
                record.band_offset_hz,
                record.band_offset_hz + 0.5 * fs
            ),
        ));
    }
    if !(bandwidth_hz > 0.0) || bandwidth_hz > 0.25 * f_if.min(0.5 * fs - f_if) {
        return Err(Error::param(
            "bandwidth_hz",
            format!("{bandwidth_hz} Hz is not narrow compared with the demodulation frequency and band edges"),
        ));
    }
    let decim = ((fs / (OVERSAMPLING as f64 * bandwidth_hz)).floor() as usize).max(1);
    if bandwidth_hz >= 0.25 * fs / decim as f64 {
        return Err(Error::param(
            "bandwidth_hz",
            "filter too close to Nyquist after decimation",
        ));
    }
    let filter = Butterworth::lowpass(FILTER_ORDER, bandwidth_hz, fs)
        .ok_or_else(|| Error::param("bandwidth_hz", "unstable filter design"))?;
    let settle = (SETTLE_PERIODS * fs / bandwidth_hz).ceil() as usize;
    let stride = decim * OVERSAMPLING;
    let n = record.len();
    if n <= settle + stride {
        return Err(Error::input(format!(
            "record of {n} samples is shorter than the filter settling time ({settle} samples)"
        )));
    }

    let w = TAU * f_if / fs;
    let run = |x: &[f64]| -> Vec<f64> {
        let (mut fc, mut fs_) = (filter.clone(), filter.clone());
        let cap = (n - settle) / stride + 1;
        let (mut ci, mut sq) = (Vec::with_capacity(2 * cap), Vec::with_capacity(cap));
        for (i, &v) in x.iter().enumerate() {
            // Phase from the exact product, not an accumulated sum.
            let (s, c) = (w * i as f64).sin_cos();
            let yc = fc.step(2.0 * v * c);
            let ys = fs_.step(2.0 * v * s);
            if i >= settle && (i - settle).is_multiple_of(stride) {
                ci.push(yc);
                sq.push(ys);
            }
        }
        ci.extend(sq);
        ci
    };
    let (a, b) = rayon::join(
        || run(record.mode(Mode::A).unwrap_or(&[])),
        || run(record.mode(Mode::B).unwrap_or(&[])),
    );
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("record needs channels `A` and `B`"));
    }
    let nominal = fs * filter.impulse_energy(100 * settle.max(1000));
    Ok(QuadratureEnsemble {
        a,
        b,
        demod_frequency_hz: f_demod_hz,
        bandwidth_hz,
        kernel: Kernel::Butterworth4,
        shot_reference: [nominal; 2],
        angles: record.angles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HomodyneAngles;
    use crate::synth::generate::{synthesize_shot_record, Sampling};
    use crate::synth::record::{Channel, RecordKind};

    fn tone(fs: f64, n: usize, offset: f64, f: f64) -> TimeSeriesRecord {
        let data: Vec<f64> = (0..n)
            .map(|i| (TAU * (f - offset) * i as f64 / fs).cos())
            .collect();
        TimeSeriesRecord::new(
            fs,
            offset,
            HomodyneAngles::joint(0.0),
            RecordKind::Signal,
            0,
            vec![
                Channel {
                    name: "A".into(),
                    data: data.clone(),
                },
                Channel {
                    name: "B".into(),
                    data,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn tone_demodulates_to_its_amplitude() {
        let r = tone(65536.0, 1 << 18, 1.12e6, 1.1416e6);
        let e = demodulate(&r, 1.1416e6, 200.0).unwrap();
        let half = e.len() / 2;
        for x in [&e.a, &e.b] {
            assert!(x[..half].iter().all(|v| (v - 1.0).abs() < 1e-6));
            assert!(x[half..].iter().all(|v| v.abs() < 1e-6));
        }
    }

    #[test]
    fn shot_noise_normalizes_to_half() {
        let s = Sampling::new(65536.0, 1 << 22, 1.12e6).unwrap();
        let r = synthesize_shot_record(&s, 9).unwrap();
        let e = demodulate(&r, 1.1416e6, 200.0).unwrap().normalized();
        let n = e.len() as f64;
        assert!(n > 10_000.0);
        for x in [&e.a, &e.b] {
            let v = x.iter().map(|v| v * v).sum::<f64>() / n;
            assert!((v - 0.5).abs() < 4.0 * 0.5 * (2.0 / n).sqrt(), "{v}");
        }
    }

    #[test]
    fn rejects_bad_settings() {
        let r = tone(65536.0, 1 << 16, 1.12e6, 1.1416e6);
        assert!(demodulate(&r, 1.0e6, 200.0).is_err());
        assert!(demodulate(&r, 1.1416e6, 10_000.0).is_err());
        assert!(demodulate(&r, 1.1416e6, 0.0).is_err());
    }
}
