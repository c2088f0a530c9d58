//! Estimation chain from records and ensembles to spectra, inseparability and
//! covariance matrices.
//!
//! Two normalizations coexist: quadrature ensembles and covariance matrices
//! use vacuum variance 1/2, spectra use vacuum 1. Every output type records
//! which one it carries.

mod modes;
mod spectra;
mod stats;
mod tomography;

pub use modes::{mode_covariance, ModeResponse};
pub use spectra::{
    cross_periodogram, effective_segments, epr_spectra, estimate_spectra, CrossPeriodogram,
    EprSpectra, Normalization, SpectrumSet, WelchOptions, Window,
};
pub use stats::{
    dgcz_from_runs, variance_stats, DgczEstimate, EnsembleStats, VarianceEstimate, MIN_SAMPLES,
};
pub use tomography::{
    demod_tomography, model_pair_moments, nu2_error, nu_spectrum, reconstruct_cm, AnglePair,
    ModeTomography, NuSpectrum, PairMoments, Reconstruction,
};

use std::io::Write;

use crate::io::{write_table, Table};
use crate::model::HomodyneAngles;
use crate::{Error, Result};

impl SpectrumSet {
    /// Metadata lines of the table form, read back by [`SpectrumSet::from_table`].
    pub fn table_meta(&self) -> Vec<(&'static str, String)> {
        let window = match self.window {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        };
        vec![
            ("normalization", "vacuum_one".to_string()),
            ("segments", self.n_segments.to_string()),
            ("effective_segments", self.effective_segments.to_string()),
            ("segment_duration_s", self.segment_duration.to_string()),
            ("window", window.to_string()),
            ("theta_a", self.angles.theta_a().to_string()),
            ("theta_b", self.angles.theta_b().to_string()),
        ]
    }

    /// Header names and columns of the table form, frequency first.
    pub fn table_columns(&self) -> (Vec<&'static str>, Vec<&[f64]>) {
        let cols = std::iter::once(self.frequencies_hz.as_slice())
            .chain(
                Self::COLUMNS
                    .iter()
                    .map(|c| self.column(c).expect("known column")),
            )
            .collect();
        let mut headers = vec!["freq_hz"];
        headers.extend(Self::COLUMNS);
        (headers, cols)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let (headers, cols) = self.table_columns();
        write_table(w, &self.table_meta(), &headers, &cols)
    }

    /// Inverse of [`SpectrumSet::write_csv`].
    pub fn from_table(t: &Table) -> Result<Self> {
        let meta = |k: &str| {
            t.meta(k)
                .ok_or_else(|| Error::Format(format!("spectrum table lacks `# {k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            meta(k)?
                .parse()
                .map_err(|_| Error::Format(format!("`# {k}` is not a number")))
        };
        if meta("normalization")? != "vacuum_one" {
            return Err(Error::Format(
                "spectrum table must be normalized to vacuum one".into(),
            ));
        }
        let window = match meta("window")? {
            "rectangular" => Window::Rectangular,
            "hann" => Window::Hann,
            other => return Err(Error::Format(format!("unknown window `{other}`"))),
        };
        let col = |k: &str| -> Result<Vec<f64>> {
            t.column(k)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::Format(format!("spectrum table lacks column `{k}`")))
        };
        Ok(Self {
            frequencies_hz: col("freq_hz")?,
            x_aa: col("x_aa")?,
            x_bb: col("x_bb")?,
            x_ab: col("x_ab")?,
            y_aa: col("y_aa")?,
            y_bb: col("y_bb")?,
            y_ab: col("y_ab")?,
            n_segments: num("segments")? as usize,
            effective_segments: num("effective_segments")?,
            angles: HomodyneAngles::new(num("theta_a")?, num("theta_b")?),
            segment_duration: num("segment_duration_s")?,
            window,
            normalization: Normalization::VacuumOne,
        })
    }
}

impl EprSpectra {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        write_table(
            w,
            &[("normalization", "vacuum_one".to_string())],
            &[
                "freq_hz",
                "x_plus",
                "y_minus",
                "inseparability",
                "inseparability_err",
            ],
            &[
                &self.frequencies_hz,
                &self.x_plus,
                &self.y_minus,
                &self.inseparability,
                &self.inseparability_error,
            ],
        )
    }
}

impl NuSpectrum {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let physical: Vec<f64> = self
            .physical
            .iter()
            .map(|&p| if p { 1.0 } else { 0.0 })
            .collect();
        write_table(
            w,
            &[
                ("segment_duration_s", self.segment_duration.to_string()),
                ("samples_per_bin", self.samples_per_bin.to_string()),
            ],
            &["freq_hz", "nu2", "nu2_err", "physical"],
            &[&self.frequencies_hz, &self.nu2, &self.nu2_error, &physical],
        )
    }
}
