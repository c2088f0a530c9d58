use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mechent::cli::{run, Command, Overrides};
use mechent::config::OutputFormat;

/// Mechanically mediated optical entanglement: predictions, synthetic
/// records, analysis and fits.
#[derive(Debug, Parser)]
#[command(name = "mechent", version)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true, default_value = "mechent.toml")]
    config: PathBuf,

    /// Output directory; defaults to `output.dir` of the configuration.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Master seed for synthesis.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Record duration in seconds (simulate).
    #[arg(long, global = true)]
    duration: Option<f64>,

    /// Sample rate in Hz (simulate).
    #[arg(long, global = true)]
    rate: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        out_dir: args.out_dir,
        seed: args.seed,
        format: args.format,
        duration_s: args.duration,
        sample_rate_hz: args.rate,
    };
    match run(args.command, &args.config, &overrides) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
