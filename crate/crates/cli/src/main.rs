// SPDX-License-Identifier: Apache-2.0

mod commands;
mod failure;
mod io;
mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use failure::{exit, Failure};
use io::{sha256_hex, InputRecord};
use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "gibbs-thermo", version, about = "Conditional Gibbs ensembles of pure quantum states")]
pub struct Cli {
    /// Cap on worker threads used by sampling commands.
    #[arg(long, global = true, env = "GIBBS_THERMO_THREADS")]
    pub threads: Option<NonZeroUsize>,

    /// Where to write the run manifest (default: `<out>.manifest.json` when `--out` is given).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ObservableSource {
    /// Observable as a JSON matrix file.
    #[arg(long)]
    pub observable: Option<PathBuf>,
    /// Observable given by its eigenvalues, e.g. "0,1,1,3".
    #[arg(long, allow_hyphen_values = true)]
    pub spectrum: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Rejection,
    Importance,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inverse temperature matching a state or a target average.
    Solve {
        #[command(flatten)]
        observable: ObservableSource,
        /// Density matrix whose expectation value is matched.
        #[arg(long, conflicts_with = "target", required_unless_present = "target")]
        state: Option<PathBuf>,
        /// Target ensemble average.
        #[arg(long, allow_hyphen_values = true)]
        target: Option<f64>,
        /// Relative solver tolerance (scaled by the spectral spread).
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate ln Z, average, variance and KL divergence over a β grid.
    PartitionCurve {
        #[command(flatten)]
        observable: ObservableSource,
        #[arg(long, allow_hyphen_values = true)]
        beta_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta_max: f64,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw pure states from the conditional Gibbs ensemble.
    Sample {
        #[command(flatten)]
        observable: ObservableSource,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "state", required_unless_present = "state")]
        beta: Option<f64>,
        /// Solve β from this density matrix first.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SampleFormat::Csv)]
        format: SampleFormat,
        #[arg(long, value_enum, default_value_t = MethodArg::Rejection)]
        method: MethodArg,
    },
    /// Compare analytic values against Monte Carlo estimates.
    Verify {
        #[command(flatten)]
        observable: ObservableSource,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Adds an offset to the analytic ln Z (negative control).
        #[arg(long, hide = true, allow_hyphen_values = true, default_value_t = 0.0)]
        corrupt_log_z: f64,
    },
    /// Check that the composite inverse temperature lies between the parts.
    Couple {
        #[arg(long, allow_hyphen_values = true)]
        spectrum_a: Option<String>,
        #[arg(long)]
        observable_a: Option<PathBuf>,
        #[arg(long)]
        state_a: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        spectrum_b: Option<String>,
        #[arg(long)]
        observable_b: Option<PathBuf>,
        #[arg(long)]
        state_b: Option<PathBuf>,
        /// Run this many random coupling cases instead.
        #[arg(long, conflicts_with_all = ["spectrum_a", "observable_a", "state_a", "spectrum_b", "observable_b", "state_b"])]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the command recorded in a manifest and check the output hash.
    Replay { manifest: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::PartitionCurve { .. } => "partition-curve",
            Command::Sample { .. } => "sample",
            Command::Verify { .. } => "verify",
            Command::Couple { .. } => "couple",
            Command::Replay { .. } => "replay",
        }
    }

    fn out(&self) -> Option<&Path> {
        match self {
            Command::Solve { out, .. }
            | Command::PartitionCurve { out, .. }
            | Command::Sample { out, .. }
            | Command::Verify { out, .. }
            | Command::Couple { out, .. } => out.as_deref(),
            Command::Replay { .. } => None,
        }
    }
}

/// What a command produced before it is written anywhere.
pub struct Outcome {
    pub text: String,
    pub code: u8,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli, inputs: &mut Vec<InputRecord>) -> Result<Outcome, Failure> {
    let threads = cli.threads.map(NonZeroUsize::get);
    match &cli.command {
        Command::Solve {
            observable,
            state,
            target,
            tol,
            ..
        } => commands::solve(observable, state.as_deref(), *target, *tol, inputs),
        Command::PartitionCurve {
            observable,
            beta_min,
            beta_max,
            grid,
            ..
        } => commands::partition_curve(observable, *beta_min, *beta_max, *grid, inputs),
        Command::Sample {
            observable,
            beta,
            state,
            count,
            seed,
            format,
            method,
            ..
        } => commands::sample(
            observable,
            *beta,
            state.as_deref(),
            *count,
            *seed,
            *format,
            *method,
            threads,
            inputs,
        ),
        Command::Verify {
            observable,
            beta,
            samples,
            seed,
            corrupt_log_z,
            ..
        } => commands::verify(observable, *beta, *samples, *seed, *corrupt_log_z, threads, inputs),
        Command::Couple {
            spectrum_a,
            observable_a,
            state_a,
            spectrum_b,
            observable_b,
            state_b,
            random,
            seed,
            ..
        } => match random {
            Some(n) => commands::couple_random(*n, *seed),
            None => commands::couple(
                (spectrum_a.as_deref(), observable_a.as_deref(), state_a.as_deref()),
                (spectrum_b.as_deref(), observable_b.as_deref(), state_b.as_deref()),
                inputs,
            ),
        },
        Command::Replay { .. } => unreachable!("replay is dispatched separately"),
    }
}

/// Runs a parsed command, writes its output and (optionally) its manifest.
fn run(cli: &Cli, args: &[String], write_manifest: bool) -> Result<(u8, String), Failure> {
    let mut inputs = Vec::new();
    let outcome = execute(cli, &mut inputs)?;
    let out = cli.command.out();
    emit(out, &outcome.text)?;
    let digest = sha256_hex(outcome.text.as_bytes());
    let path = cli.manifest.clone().or_else(|| out.map(manifest::default_path));
    if let (true, Some(path)) = (write_manifest, path) {
        RunManifest {
            command: cli.command.name().to_string(),
            args: args.to_vec(),
            inputs,
            seed: outcome.seed,
            tolerances: outcome.tolerances,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: RunManifest::now(),
            output: out.map(Path::to_path_buf),
            output_sha256: digest.clone(),
        }
        .write(&path)?;
    }
    Ok((outcome.code, digest))
}

fn replay(path: &Path) -> Result<u8, Failure> {
    let recorded = RunManifest::read(path)?;
    for input in &recorded.inputs {
        let bytes = fs::read(&input.path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", input.path.display())))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(Failure::input(format!("input {} changed since the run", input.path.display())));
        }
    }
    let argv = std::iter::once("gibbs-thermo".to_string()).chain(recorded.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| Failure::input(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(Failure::input("manifest records a replay"));
    }
    let (code, digest) = run(&cli, &recorded.args, false)?;
    if digest != recorded.output_sha256 {
        eprintln!("replay output differs from the recorded run");
        return Ok(exit::CHECK_FAILED);
    }
    Ok(code)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Replay { manifest } => replay(manifest),
        _ => run(&cli, &args, true).map(|(code, _)| code),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
