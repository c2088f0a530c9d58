//! Two-mode covariance matrices from five pairs of homodyne angles.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use super::stats::{dgcz_from_runs, variance_stats, DgczEstimate, EnsembleStats, VarianceEstimate};
use crate::entanglement::{is_physical, symplectic_nu_min, CovarianceMatrix4};
use crate::model::{quadrature_covariance, HomodyneAngles, Mode, SystemParams};
use crate::synth::{boxcar_modes, demodulate, TimeSeriesRecord};
use crate::{Error, Result};

/// Angle pair {θ_A, θ_B}, relative to the reference angles of the run set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnglePair {
    ZeroZero,
    HalfHalf,
    ZeroHalf,
    HalfZero,
    QuarterQuarter,
}

impl AnglePair {
    pub const ALL: [AnglePair; 5] = [
        AnglePair::ZeroZero,
        AnglePair::HalfHalf,
        AnglePair::ZeroHalf,
        AnglePair::HalfZero,
        AnglePair::QuarterQuarter,
    ];

    /// Offsets (θ_A, θ_B) in radians.
    pub fn offsets(self) -> (f64, f64) {
        match self {
            AnglePair::ZeroZero => (0.0, 0.0),
            AnglePair::HalfHalf => (FRAC_PI_2, FRAC_PI_2),
            AnglePair::ZeroHalf => (0.0, FRAC_PI_2),
            AnglePair::HalfZero => (FRAC_PI_2, 0.0),
            AnglePair::QuarterQuarter => (FRAC_PI_4, FRAC_PI_4),
        }
    }

    /// Absolute angles of this pair for reference angles `base`.
    pub fn angles(self, base: &HomodyneAngles) -> HomodyneAngles {
        let (da, db) = self.offsets();
        HomodyneAngles::new(base.theta_a() + da, base.theta_b() + db)
    }
}

impl fmt::Display for AnglePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnglePair::ZeroZero => "{0, 0}",
            AnglePair::HalfHalf => "{π/2, π/2}",
            AnglePair::ZeroHalf => "{0, π/2}",
            AnglePair::HalfZero => "{π/2, 0}",
            AnglePair::QuarterQuarter => "{π/4, π/4}",
        })
    }
}

/// Second moments measured at one angle pair.
pub type PairMoments = EnsembleStats;

/// Noiseless moments predicted by the model at angular frequency `omega`.
pub fn model_pair_moments(
    omega: f64,
    base: &HomodyneAngles,
    pair: AnglePair,
    params: &SystemParams,
) -> PairMoments {
    let a = pair.angles(base);
    let q = |j: Mode, k: Mode| quadrature_covariance(omega, j, a.theta(j), k, a.theta(k), params);
    PairMoments {
        var_a: VarianceEstimate::exact(q(Mode::A, Mode::A)),
        var_b: VarianceEstimate::exact(q(Mode::B, Mode::B)),
        cov_ab: VarianceEstimate::exact(q(Mode::A, Mode::B)),
    }
}

/// Reconstructed covariance matrix with the 1σ error of every entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub cm: CovarianceMatrix4,
    pub std_errors: [[f64; 4]; 4],
}

/// Assembles σ (ordering X_A, Y_A, X_B, Y_B) from the five angle pairs.
pub fn reconstruct_cm(runs: &BTreeMap<AnglePair, PairMoments>) -> Result<Reconstruction> {
    let get = |p: AnglePair| runs.get(&p).ok_or_else(|| Error::MissingRun(p.to_string()));
    let zz = get(AnglePair::ZeroZero)?;
    let hh = get(AnglePair::HalfHalf)?;
    let zh = get(AnglePair::ZeroHalf)?;
    let hz = get(AnglePair::HalfZero)?;
    let qq = get(AnglePair::QuarterQuarter)?;

    let mut m = [[0.0; 4]; 4];
    let mut e = [[0.0; 4]; 4];
    let mut set = |i: usize, j: usize, v: f64, s: f64| {
        m[i][j] = v;
        m[j][i] = v;
        e[i][j] = s;
        e[j][i] = s;
    };
    set(0, 0, zz.var_a.value, zz.var_a.std_error);
    set(2, 2, zz.var_b.value, zz.var_b.std_error);
    set(0, 2, zz.cov_ab.value, zz.cov_ab.std_error);
    set(1, 1, hh.var_a.value, hh.var_a.std_error);
    set(3, 3, hh.var_b.value, hh.var_b.std_error);
    set(1, 3, hh.cov_ab.value, hh.cov_ab.std_error);
    set(0, 3, zh.cov_ab.value, zh.cov_ab.std_error);
    set(1, 2, hz.cov_ab.value, hz.cov_ab.std_error);
    // V(X^{π/4}) = (V(X) + V(Y))/2 + Cov(X, Y).
    for (i, rot, x, y) in [
        (0, qq.var_a, zz.var_a, hh.var_a),
        (2, qq.var_b, zz.var_b, hh.var_b),
    ] {
        let v = rot.value - 0.5 * (x.value + y.value);
        let s = (rot.std_error.powi(2) + 0.25 * (x.std_error.powi(2) + y.std_error.powi(2))).sqrt();
        set(i, i + 1, v, s);
    }
    Ok(Reconstruction {
        cm: CovarianceMatrix4::symmetrized(m),
        std_errors: e,
    })
}

/// 1σ error of 2ν̃_− by linear propagation of independent entry errors.
pub fn nu2_error(r: &Reconstruction) -> Result<f64> {
    let base = *r.cm.entries();
    let mut var = 0.0;
    for i in 0..4 {
        for j in i..4 {
            let s = r.std_errors[i][j];
            if s == 0.0 {
                continue;
            }
            let h = 1e-6 * s.max(1e-9);
            let eval = |d: f64| -> Result<f64> {
                let mut m = base;
                m[i][j] += d;
                if i != j {
                    m[j][i] += d;
                }
                symplectic_nu_min(&CovarianceMatrix4::symmetrized(m)).map(|n| 2.0 * n)
            };
            let g = (eval(h)? - eval(-h)?) / (2.0 * h);
            var += (g * s).powi(2);
        }
    }
    Ok(var.sqrt())
}

/// Frequency-resolved 2ν̃_−.
#[derive(Debug, Clone, Serialize)]
pub struct NuSpectrum {
    pub frequencies_hz: Vec<f64>,
    /// NaN in bins whose estimate is not a valid state.
    pub nu2: Vec<f64>,
    pub nu2_error: Vec<f64>,
    pub physical: Vec<bool>,
    pub covariances: Vec<CovarianceMatrix4>,
    pub segment_duration: f64,
    /// Ensemble size per angle pair and bin.
    pub samples_per_bin: usize,
}

/// Per-bin tomography of boxcar modes from the five angle-pair records.
/// The vacuum reference of each detector is the band-averaged variance of the
/// corresponding modes of `shot`.
pub fn nu_spectrum(
    records: &BTreeMap<AnglePair, TimeSeriesRecord>,
    shot: &TimeSeriesRecord,
    segment_duration: f64,
    band_hz: Option<(f64, f64)>,
) -> Result<NuSpectrum> {
    check_protocol(records, shot)?;
    let shot_modes = boxcar_modes(shot, segment_duration, band_hz)?;
    let mut shot_var = [0.0; 2];
    let mut count = 0usize;
    for e in &shot_modes.ensembles {
        for m in Mode::BOTH {
            shot_var[m.index()] += e.samples(m).iter().map(|x| x * x).sum::<f64>();
        }
        count += e.len();
    }
    if count == 0 {
        return Err(Error::input("no shot-noise bins inside the band"));
    }
    shot_var.iter_mut().for_each(|v| *v /= count as f64);

    let mut per_pair = BTreeMap::new();
    for (&pair, rec) in records {
        let modes = boxcar_modes(rec, segment_duration, band_hz)?;
        if modes.frequencies_hz != shot_modes.frequencies_hz {
            return Err(Error::input(format!(
                "frequency grid of {pair} differs from the shot record"
            )));
        }
        per_pair.insert(pair, modes);
    }

    let grid = shot_modes.frequencies_hz.clone();
    let mut out = NuSpectrum {
        frequencies_hz: grid.clone(),
        nu2: Vec::with_capacity(grid.len()),
        nu2_error: Vec::with_capacity(grid.len()),
        physical: Vec::with_capacity(grid.len()),
        covariances: Vec::with_capacity(grid.len()),
        segment_duration: shot_modes.segment_len as f64 / shot.sample_rate_hz,
        samples_per_bin: 0,
    };
    for bin in 0..grid.len() {
        let mut runs = BTreeMap::new();
        for (pair, modes) in &per_pair {
            let e = modes.ensembles[bin].clone().with_shot_reference(shot_var)?;
            out.samples_per_bin = e.len();
            runs.insert(*pair, variance_stats(&e)?);
        }
        let r = reconstruct_cm(&runs)?;
        let (nu2, err) = estimate_nu2(&r);
        out.nu2.push(nu2);
        out.nu2_error.push(err);
        out.physical.push(is_physical(&r.cm).physical);
        out.covariances.push(r.cm);
    }
    Ok(out)
}

/// 2ν̃_− of a noisy reconstruction and its error; NaN for both when
/// sampling noise has pushed the estimate outside the set of valid states.
fn estimate_nu2(r: &Reconstruction) -> (f64, f64) {
    match (symplectic_nu_min(&r.cm), nu2_error(r)) {
        (Ok(nu), Ok(err)) => (2.0 * nu, err),
        _ => (f64::NAN, f64::NAN),
    }
}

/// Checks that all five pairs are present, sit at the protocol offsets from
/// the {0, 0} run and share the shot record's sampling. Returns the base
/// angles.
fn check_protocol(
    records: &BTreeMap<AnglePair, TimeSeriesRecord>,
    shot: &TimeSeriesRecord,
) -> Result<HomodyneAngles> {
    let base = records
        .get(&AnglePair::ZeroZero)
        .ok_or_else(|| Error::MissingRun(AnglePair::ZeroZero.to_string()))?
        .angles;
    for pair in AnglePair::ALL {
        let rec = records
            .get(&pair)
            .ok_or_else(|| Error::MissingRun(pair.to_string()))?;
        let want = pair.angles(&base);
        if (rec.angles.theta_a() - want.theta_a()).abs() > 1e-9
            || (rec.angles.theta_b() - want.theta_b()).abs() > 1e-9
        {
            return Err(Error::input(format!(
                "record for {pair} has angles ({}, {}), expected ({}, {})",
                rec.angles.theta_a(),
                rec.angles.theta_b(),
                want.theta_a(),
                want.theta_b()
            )));
        }
        if rec.sample_rate_hz != shot.sample_rate_hz || rec.band_offset_hz != shot.band_offset_hz {
            return Err(Error::input(format!(
                "record for {pair} is sampled differently from the shot record"
            )));
        }
    }
    Ok(base)
}

/// Tomography of one demodulated (Butterworth) mode.
#[derive(Debug, Clone, Serialize)]
pub struct ModeTomography {
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub samples: usize,
    pub reconstruction: Reconstruction,
    pub nu2: f64,
    pub nu2_error: f64,
    pub physical: bool,
    /// DGCZ estimate from the {0, 0} and {π/2, π/2} runs.
    pub dgcz: DgczEstimate,
}

/// Demodulates the five angle-pair records and the shot record at
/// `frequency_hz` and reconstructs the covariance matrix of that mode. The
/// vacuum reference is the measured variance of the demodulated shot run,
/// and its sampling error is folded into every entry's error.
pub fn demod_tomography(
    records: &BTreeMap<AnglePair, TimeSeriesRecord>,
    shot: &TimeSeriesRecord,
    frequency_hz: f64,
    bandwidth_hz: f64,
) -> Result<ModeTomography> {
    check_protocol(records, shot)?;
    let shot_run = demodulate(shot, frequency_hz, bandwidth_hz)?;
    let shot_stats = variance_stats(&shot_run)?;
    // Raw vacuum variance actually measured on each detector.
    let measured = [
        2.0 * shot_stats.var_a.value * shot_run.shot_reference[0],
        2.0 * shot_stats.var_b.value * shot_run.shot_reference[1],
    ];
    let mut ensembles = BTreeMap::new();
    let mut runs = BTreeMap::new();
    for (&pair, rec) in records {
        let e = demodulate(rec, frequency_hz, bandwidth_hz)?;
        let reference =
            [0, 1].map(|i| measured[i] * e.shot_reference[i] / shot_run.shot_reference[i]);
        let mut stats = variance_stats(&e.clone().with_shot_reference(reference)?)?;
        // The finite shot run scales every entry of this detector.
        let rel = (2.0 / (shot_run.len() as f64 - 1.0)).sqrt();
        for v in [&mut stats.var_a, &mut stats.var_b] {
            v.std_error = v.std_error.hypot(v.value * rel);
        }
        stats.cov_ab.std_error = stats
            .cov_ab
            .std_error
            .hypot(stats.cov_ab.value * rel * std::f64::consts::FRAC_1_SQRT_2);
        runs.insert(pair, stats);
        ensembles.insert(pair, e);
    }
    let reconstruction = reconstruct_cm(&runs)?;
    let (nu2, nu2_error) = estimate_nu2(&reconstruction);
    let dgcz = dgcz_from_runs(
        &ensembles[&AnglePair::ZeroZero],
        &ensembles[&AnglePair::HalfHalf],
        &shot_run,
    )?;
    Ok(ModeTomography {
        frequency_hz,
        bandwidth_hz,
        samples: shot_run.len().min(ensembles[&AnglePair::ZeroZero].len()),
        nu2,
        nu2_error,
        physical: is_physical(&reconstruction.cm).physical,
        reconstruction,
        dgcz,
    })
}
