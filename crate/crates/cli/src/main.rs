use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ucp_cli::config::Command;
use ucp_cli::manifest::Status;

/// Numerical experiments on unique continuation for dispersive equations.
#[derive(Parser)]
#[command(name = "ucplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sampled superlinearity and symbol-bound checks.
    DispersionCheck(RunArgs),
    /// Exact spectral evolution of a random state.
    Solve(RunArgs),
    /// Beurling counting curves and annulus extents.
    LatticeCount(RunArgs),
    /// Gram matrix frame bounds on a space-time domain.
    FrameBounds(RunArgs),
    /// Frame bounds over nested truncations.
    Certificate(RunArgs),
    /// Dirichlet-to-Neumann symbol and structure checks.
    Dn(RunArgs),
    /// Small-amplitude frequency of the surface wave system.
    ZcsDispersion(RunArgs),
    /// Activity of a state at rest on a window.
    RestProbe(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Caps internal parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

fn split(sub: Sub) -> (Command, RunArgs) {
    match sub {
        Sub::DispersionCheck(a) => (Command::DispersionCheck, a),
        Sub::Solve(a) => (Command::Solve, a),
        Sub::LatticeCount(a) => (Command::LatticeCount, a),
        Sub::FrameBounds(a) => (Command::FrameBounds, a),
        Sub::Certificate(a) => (Command::Certificate, a),
        Sub::Dn(a) => (Command::Dn, a),
        Sub::ZcsDispersion(a) => (Command::ZcsDispersion, a),
        Sub::RestProbe(a) => (Command::RestProbe, a),
    }
}

fn config_failure(message: String) -> ExitCode {
    let record = ucp_cli::manifest::ErrorRecord {
        kind: "config",
        message,
        locations: Vec::new(),
    };
    eprintln!("{}", record.to_json_line());
    ExitCode::from(Status::ConfigError.exit_code() as u8)
}

fn main() -> ExitCode {
    let (command, args) = split(Cli::parse().command);
    if let Some(n) = args.threads {
        if n == 0 {
            return config_failure("--threads must be at least 1".into());
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return config_failure(format!("cannot size the thread pool: {e}"));
        }
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return config_failure(format!("cannot read {}: {e}", args.config.display())),
    };

    let m = ucp_cli::run_config_text(&text, args.out.as_deref(), Some(command));
    for c in &m.checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if let Some(e) = &m.error {
        eprintln!("{}", e.to_json_line());
    }
    println!("{}: {:?} in {:.2} s", command, m.status, m.wall_time_s);
    ExitCode::from(m.exit_code() as u8)
}
