//! `odtqubit` — scans and figures of merit for an optically trapped atom
//! qubit, driven by a layered plain-text configuration.
//!
//! Configuration precedence, lowest to highest: `--preset` bundle, then the
//! `--config` file, then individual flags. Every global flag can also come
//! from an `ODTQUBIT_*` environment variable. Output goes to stdout (or
//! `--output`) in one piece; identical configurations produce byte-identical
//! output at any `--threads` setting. Exit codes: 0 success, 2 configuration
//! error (with source/line/field diagnostics on stderr), 1 runtime failure.

// validations use `!(x > 0.0)` so that NaN fails them; `x <= 0.0` would not
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Format, Output};
use config::Config;

#[derive(Parser)]
#[command(name = "odtqubit", version, about = "Optically trapped atom qubit: shifts, gate error, coherence, magic depths")]
struct Cli {
    /// Plain-text config file (key = value under [section] headers)
    #[arg(long, global = true, env = "ODTQUBIT_CONFIG")]
    config: Option<PathBuf>,

    /// Parameter bundle: fig2 | fig3 | fig4 | blue-lattice
    #[arg(long, global = true, env = "ODTQUBIT_PRESET")]
    preset: Option<String>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value = "csv", env = "ODTQUBIT_FORMAT")]
    format: Format,

    /// Write output here instead of stdout
    #[arg(long, global = true, env = "ODTQUBIT_OUTPUT")]
    output: Option<PathBuf>,

    /// Per-axis Bose tail mass dropped when truncating thermal sums
    #[arg(long = "tail-eps", global = true, env = "ODTQUBIT_TAIL_EPS")]
    tail_eps: Option<f64>,

    /// Worker threads for scans (default: all cores)
    #[arg(long, global = true, env = "ODTQUBIT_THREADS")]
    threads: Option<usize>,

    /// Extra species preset file merged over the built-ins
    #[arg(long = "species-file", global = true, env = "ODTQUBIT_SPECIES_FILE")]
    species_file: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Differential-shift table over a trap-depth grid
    DfsScan,
    /// Thermal pi/2 gate error over a (Rabi frequency, temperature) grid
    GateError,
    /// Ramsey fringe columns over a time grid, or simulate a pulse sequence
    Ramsey {
        /// Pulse-sequence file: one `pulse <rabi_rad_s> <duration_s>` or
        /// `free <duration_s>` per line
        #[arg(long)]
        sequence: Option<PathBuf>,
    },
    /// Dephasing figures of merit as a single JSON record
    T2,
    /// Magic-depth table for the configured pairings
    Magic,
    /// List available species presets
    Species,
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let registry = commands::build_registry(cli.species_file.as_deref())?;

    let mut config = Config::default();
    if let Some(name) = &cli.preset {
        config.overlay(presets::lookup(name)?);
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
        config.overlay(Config::parse(&text, &path.display().to_string())?);
    }
    if let Some(eps) = cli.tail_eps {
        config.set("ensemble", "tail_eps", eps.to_string(), "--tail-eps");
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;

    pool.install(|| match &cli.command {
        Command::DfsScan => commands::cmd_dfs_scan(&config, &registry, cli.format),
        Command::GateError => commands::cmd_gate_error(&config, &registry, cli.format),
        Command::Ramsey { sequence } => {
            commands::cmd_ramsey(&config, &registry, cli.format, sequence.as_deref())
        }
        Command::T2 => commands::cmd_t2(&config, &registry),
        Command::Magic => commands::cmd_magic(&config, &registry, cli.format),
        Command::Species => commands::cmd_species(&registry, cli.format),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            for note in &output.notes {
                eprintln!("note: {note}");
            }
            let result = match &cli.output {
                Some(path) => std::fs::write(path, &output.text).map_err(|e| e.to_string()),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(output.text.as_bytes()).map_err(|e| e.to_string())
                }
            };
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: writing output: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
