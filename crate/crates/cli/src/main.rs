use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pairlind_cli::config::{ExperimentKind, Format, ValidationError};
use pairlind_cli::{run_experiment, Failure, Overrides, OUT_DIR_ENV};

/// Simulate quadratic mean-field pair-collision dynamics and write curve data.
#[derive(Parser)]
#[command(name = "pairlind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bloch-vector trajectory of one mean-field model (t,u_x,u_y,u_z).
    MeanfieldTrajectory(RunArgs),
    /// Fitted dephasing rates across initial populations.
    DephasingRateScan(RunArgs),
    /// Singlet-purification flow from several initial states.
    HemisphereScan(RunArgs),
    /// Excited fraction for several ensemble sizes and the continuum limit.
    MasterCurve(RunArgs),
    /// Monte Carlo excited fraction against the master equation.
    GillespieCurve(RunArgs),
    /// Mean and support edge of the continuum distribution.
    ContinuumCurve(RunArgs),
    /// Distance of the exact pair state from the mean-field product.
    FactorizationStudy(RunArgs),
    /// Run the built-in verification suite.
    Verify(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; overrides output_path from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Monte Carlo seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(f.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (kind, args) = match cli.command {
        Command::MeanfieldTrajectory(a) => (ExperimentKind::MeanfieldTrajectory, a),
        Command::DephasingRateScan(a) => (ExperimentKind::DephasingRateScan, a),
        Command::HemisphereScan(a) => (ExperimentKind::HemisphereScan, a),
        Command::MasterCurve(a) => (ExperimentKind::MasterCurve, a),
        Command::GillespieCurve(a) => (ExperimentKind::GillespieCurve, a),
        Command::ContinuumCurve(a) => (ExperimentKind::ContinuumCurve, a),
        Command::FactorizationStudy(a) => (ExperimentKind::FactorizationStudy, a),
        Command::Verify(a) => (ExperimentKind::VerifySuite, a),
    };

    let text = match &args.config {
        None => None,
        Some(path) => match std::fs::read(path) {
            Ok(bytes) => Some(bytes),
            Err(e) => {
                let msg = format!("cannot read {}: {e}", path.display());
                return fail(ValidationError::single("--config", msg).into());
            }
        },
    };
    let overrides = Overrides {
        out: args.out,
        format: args.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        seed: args.seed,
        out_dir: std::env::var_os(OUT_DIR_ENV).map(PathBuf::from),
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return fail(ValidationError::single("--threads", "must be at least 1").into());
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            return fail(Failure::Runtime(format!(
                "cannot start worker threads: {e}"
            )))
        }
    };

    let done = match pool.install(|| run_experiment(kind, text.as_deref(), &overrides)) {
        Ok(done) => done,
        Err(f) => return fail(f),
    };
    if done.written.is_empty() {
        // Only `verify` may run without an output file.
        let _ = std::io::stdout().write_all(done.table.to_csv().as_bytes());
    } else {
        for path in &done.written {
            println!("wrote {}", path.display());
        }
    }
    if done.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "{}",
            serde_json::json!({ "error": "verification", "message": "one or more checks failed" })
        );
        ExitCode::from(2)
    }
}
