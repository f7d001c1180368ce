//! Command-line front end: JSON configs, CSV outputs and exit codes.

mod commands;
mod config;
mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    cmd_compare, cmd_reference, cmd_simulate, cmd_verify, compare_tables, exit_code, load_config, CompareSummary,
    Diagnostics, RunManifest, VerifyArgs, EXIT_COLLAPSE, EXIT_FAILED, EXIT_OK, EXIT_USAGE,
};
pub use config::{
    build, emit_config, parse_config, Config, CouplingPoint, EnsembleConfig, FieldEntry, FieldPoint, InitialState,
    IntegratorConfig, ObservableName, PairEntry, Parsed, ProductSpin,
};
pub use table::{run_table, Table};

#[derive(Debug, Parser)]
#[command(name = "qsde", version, about = "Weighted stochastic simulation of interacting qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the weighted ensemble and write estimates as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to <out>.manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Exact correlators on the simulation time grid.
    Reference {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a simulation CSV against a reference CSV.
    Compare {
        #[arg(long)]
        sim: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Allowed deviation in standard errors.
        #[arg(long, default_value_t = 4.0)]
        z_tol: f64,
        /// Absolute deviation always allowed.
        #[arg(long, default_value_t = 1e-3)]
        abs_tol: f64,
    },
    /// Check the diffusion generator against the quantum generator.
    Verify {
        /// Verify the system of this config instead of random chains.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        qubits: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random systems (ignored with --config).
        #[arg(long, default_value_t = 10)]
        specs: usize,
        /// Random states per system.
        #[arg(long, default_value_t = 1)]
        states: usize,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        divergence_trials: usize,
        /// Ensemble size of the one-step weak test; 0 skips it.
        #[arg(long, default_value_t = 0)]
        weak_count: usize,
        #[arg(long, default_value_t = 0.01)]
        weak_dt: f64,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: Command) -> crate::Result<i32> {
    match cmd {
        Command::Simulate {
            config,
            out,
            manifest,
            workers,
        } => {
            let m = cmd_simulate(&config, &out, manifest.as_deref(), workers)?;
            eprintln!(
                "wrote {} ({} rows, {} resets, {} diverged)",
                out.display(),
                m.diagnostics.records,
                m.diagnostics.resets,
                m.diagnostics.diverged
            );
            Ok(EXIT_OK)
        }
        Command::Reference { config, out } => {
            cmd_reference(&config, &out)?;
            Ok(EXIT_OK)
        }
        Command::Compare {
            sim,
            reference,
            out,
            z_tol,
            abs_tol,
        } => {
            let s = cmd_compare(&sim, &reference, out.as_deref(), z_tol, abs_tol)?;
            println!(
                "max |dev| = {}  max |z| = {}  failures = {}  {}",
                s.max_abs_dev,
                s.max_abs_z,
                s.failures,
                if s.pass { "PASS" } else { "FAIL" }
            );
            Ok(if s.pass { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Verify {
            config,
            qubits,
            seed,
            specs,
            states,
            points,
            tol,
            divergence_trials,
            weak_count,
            weak_dt,
        } => {
            let args = VerifyArgs {
                config,
                qubits,
                seed,
                specs,
                states,
                points,
                tol,
                divergence_trials,
                weak_count,
                weak_dt,
            };
            let pass = cmd_verify(&args, &mut std::io::stdout())?;
            Ok(if pass { EXIT_OK } else { EXIT_FAILED })
        }
    }
}
