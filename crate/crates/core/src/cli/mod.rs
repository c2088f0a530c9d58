//! Command-line workflows: `predict`, `simulate`, `analyze`, `fit` and
//! `calibrate`.
//!
//! Each command reads a [`RunConfig`], writes its products into the output
//! directory and returns the list of files written. Outputs depend only on
//! the configuration and seed, so reruns are byte-identical.

mod analyze;
mod calibrate;
mod fit;
mod predict;
mod simulate;

pub use analyze::cmd_analyze;
pub use calibrate::cmd_calibrate;
pub use fit::cmd_fit;
pub use predict::cmd_predict;
pub use simulate::{cmd_simulate, Manifest, ManifestEntry};

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::io::{write_table, write_table_json};
use crate::plot::{Heatmap, LinePlot};
use crate::Result;

/// Command-line overrides of configuration values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub duration_s: Option<f64>,
    pub sample_rate_hz: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        } else {
            cfg.output.dir = cfg.resolve(&cfg.output.dir.clone());
        }
        if let Some(s) = self.seed {
            cfg.simulate.seed = s;
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(d) = self.duration_s {
            cfg.simulate.duration_s = d;
        }
        if let Some(r) = self.sample_rate_hz {
            cfg.simulate.sample_rate_hz = r;
        }
    }
}

/// Writer for the files of one command.
pub struct Outputs {
    dir: PathBuf,
    format: OutputFormat,
    svg: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output.dir)?;
        Ok(Self {
            dir: cfg.output.dir.clone(),
            format: cfg.output.format,
            svg: cfg.output.svg,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn create(&mut self, name: &str) -> Result<fs::File> {
        let path = self.dir.join(name);
        let f = fs::File::create(&path)?;
        self.written.push(path);
        Ok(f)
    }

    /// Writes `name.csv` or `name.json` depending on the output format.
    pub fn table(
        &mut self,
        name: &str,
        meta: &[(&str, String)],
        headers: &[&str],
        columns: &[&[f64]],
    ) -> Result<()> {
        match self.format {
            OutputFormat::Csv => {
                let f = self.create(&format!("{name}.csv"))?;
                write_table(std::io::BufWriter::new(f), meta, headers, columns)
            }
            OutputFormat::Json => {
                let f = self.create(&format!("{name}.json"))?;
                write_table_json(std::io::BufWriter::new(f), meta, headers, columns)
            }
        }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut f = std::io::BufWriter::new(self.create(&format!("{name}.json"))?);
        serde_json::to_writer_pretty(&mut f, value)?;
        std::io::Write::write_all(&mut f, b"\n")?;
        Ok(())
    }

    pub fn line_plot(&mut self, name: &str, plot: &LinePlot) -> Result<()> {
        if self.svg {
            let svg = plot.to_svg();
            std::io::Write::write_all(&mut self.create(&format!("{name}.svg"))?, svg.as_bytes())?;
        }
        Ok(())
    }

    pub fn heatmap(&mut self, name: &str, map: &Heatmap) -> Result<()> {
        if self.svg {
            let svg = map.to_svg();
            std::io::Write::write_all(&mut self.create(&format!("{name}.svg"))?, svg.as_bytes())?;
        }
        Ok(())
    }

    /// Registers a file written by other means.
    pub fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

/// Runs `command` on the configuration at `config` with `overrides`.
pub fn run(command: Command, config: &Path, overrides: &Overrides) -> Result<Vec<PathBuf>> {
    let mut cfg = RunConfig::load(config)?;
    overrides.apply(&mut cfg);
    match command {
        Command::Predict => cmd_predict(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Analyze => cmd_analyze(&cfg),
        Command::Fit => cmd_fit(&cfg),
        Command::Calibrate => cmd_calibrate(&cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Analytic spectra, Θ scan, covariance matrix and entanglement metrics.
    Predict,
    /// Synthetic records for the five angle pairs plus a shot-noise run.
    Simulate,
    /// Spectra, EPR variances, tomography and DGCZ estimates from records.
    Analyze,
    /// Joint spectral fit and detection-efficiency fits.
    Fit,
    /// Balanced-detector systematics fit.
    Calibrate,
}

/// Relative deviation `got/want − 1`.
fn rel(got: f64, want: f64) -> f64 {
    got / want - 1.0
}
