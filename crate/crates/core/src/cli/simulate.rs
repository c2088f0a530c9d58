use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Outputs;
use crate::config::RunConfig;
use crate::fitting::{synthetic_imprecision, ImprecisionPoint};
use crate::model::Mode;
use crate::pipeline::AnglePair;
use crate::synth::{
    synthesize_records, synthesize_shot_record, RecordKind, Sampling, TimeSeriesRecord,
};
use crate::{hz, Error, Result};

/// Index of a simulated run set, written next to the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub sampling: Sampling,
    pub base_theta_a: f64,
    pub base_theta_b: f64,
    pub seed: u64,
    pub vacuum: bool,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest.
    pub file: String,
    pub kind: RecordKind,
    /// `None` for the shot-noise run.
    pub pair: Option<AnglePair>,
    pub theta_a: f64,
    pub theta_b: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub sha256: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";
const IMPRECISION_ANGLES: usize = 9;
const IMPRECISION_NOISE: f64 = 0.01;

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    /// Loads every record, checking its hash against the manifest. Returns
    /// the five angle-pair runs and the shot run.
    pub fn load_records(
        &self,
        dir: &Path,
    ) -> Result<(
        std::collections::BTreeMap<AnglePair, TimeSeriesRecord>,
        TimeSeriesRecord,
    )> {
        let mut runs = std::collections::BTreeMap::new();
        let mut shot = None;
        for e in &self.entries {
            let path = dir.join(&e.file);
            if !path.exists() {
                return Err(match e.pair {
                    Some(p) => Error::MissingRun(format!("{p} ({})", path.display())),
                    None => Error::MissingRun(format!("shot noise ({})", path.display())),
                });
            }
            let got = sha256_file(&path)?;
            if got != e.sha256 {
                return Err(Error::Format(format!(
                    "{}: checksum mismatch",
                    path.display()
                )));
            }
            let rec = TimeSeriesRecord::load(&path)?;
            match e.pair {
                Some(p) => {
                    runs.insert(p, rec);
                }
                None => shot = Some(rec),
            }
        }
        for p in AnglePair::ALL {
            if !runs.contains_key(&p) {
                return Err(Error::MissingRun(p.to_string()));
            }
        }
        let shot = shot.ok_or_else(|| Error::MissingRun("shot noise".into()))?;
        Ok((runs, shot))
    }
}

fn pair_file(p: AnglePair) -> String {
    let tag = serde_json::to_value(p)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    format!("run_{tag}.rec")
}

fn write_imprecision(out: &mut Outputs, name: &str, points: &[ImprecisionPoint]) -> Result<()> {
    let theta: Vec<f64> = points.iter().map(|p| p.theta).collect();
    let value: Vec<f64> = points.iter().map(|p| p.value).collect();
    let err: Vec<f64> = points.iter().map(|p| p.std_error).collect();
    out.table(
        name,
        &[("units", "m2_per_hz".to_string())],
        &["theta", "imprecision", "imprecision_err"],
        &[&theta, &value, &err],
    )
}

/// Synthesizes the five angle-pair records and a shot-noise record, plus
/// imprecision points for the efficiency fits, and writes the manifest.
///
/// Per-run seeds are drawn in order from a generator seeded with the
/// configured seed. With `vacuum = true` every run is a shot-noise record
/// labelled with its pair's angles, which is the null test of the analysis.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let sc = &cfg.simulate;
    let sampling = Sampling::from_duration(sc.duration_s, sc.sample_rate_hz, cfg.band_offset_hz())?;
    let base = sc.angles();
    let mut seeds = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut out = Outputs::new(cfg)?;
    let mut entries = Vec::new();

    let mut save = |out: &mut Outputs,
                    rec: &TimeSeriesRecord,
                    file: String,
                    pair: Option<AnglePair>|
     -> Result<()> {
        let path = out.dir().join(&file);
        rec.save(&path)?;
        entries.push(ManifestEntry {
            sha256: sha256_file(&path)?,
            file,
            kind: rec.kind,
            pair,
            theta_a: rec.angles.theta_a(),
            theta_b: rec.angles.theta_b(),
            seed: rec.seed,
            n_samples: rec.len(),
        });
        out.record(path);
        Ok(())
    };

    for pair in AnglePair::ALL {
        let seed = seeds.next_u64();
        let angles = pair.angles(&base);
        let rec = if sc.vacuum {
            let mut r = synthesize_shot_record(&sampling, seed)?;
            r.angles = angles;
            r
        } else {
            synthesize_records(&cfg.params, &angles, &sampling, seed)?
        };
        save(&mut out, &rec, pair_file(pair), Some(pair))?;
    }
    let shot_seed = seeds.next_u64();
    let shot = synthesize_shot_record(&sampling, shot_seed)?;
    save(&mut out, &shot, "shot.rec".into(), None)?;

    if cfg.params.mech.m_eff.is_some() {
        let thetas: Vec<f64> = (0..IMPRECISION_ANGLES)
            .map(|i| -0.8 + 1.6 * i as f64 / (IMPRECISION_ANGLES - 1) as f64)
            .collect();
        let w = hz(cfg.fit.imprecision_freq_hz);
        for (mode, name) in [(Mode::A, "imprecision_a"), (Mode::B, "imprecision_b")] {
            let pts = synthetic_imprecision(
                w,
                mode,
                &thetas,
                &cfg.params,
                IMPRECISION_NOISE,
                seeds.next_u64(),
            )?;
            write_imprecision(&mut out, name, &pts)?;
        }
    }

    let manifest = Manifest {
        sampling,
        base_theta_a: base.theta_a(),
        base_theta_b: base.theta_b(),
        seed: sc.seed,
        vacuum: sc.vacuum,
        entries,
    };
    out.json(MANIFEST_FILE.trim_end_matches(".json"), &manifest)?;
    Ok(out.finish())
}
