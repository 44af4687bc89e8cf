//! One runner per subcommand. Each writes its result files and returns the
//! declared checks, evaluated against tolerances fixed in this module tree.

mod fluid;
mod lattice;
mod observability;
mod spectral;

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use ucp_core::spectral::FourierState;
use ucp_core::Complex64;

use crate::config::{Command, ExperimentConfig};
use crate::manifest::{CheckResult, ErrorRecord, OutputDir};

pub use observability::midpoint_mass;

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub checks: Vec<CheckResult>,
    pub results: Value,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug)]
pub enum RunError {
    Numerical(String),
    Parameter(String),
    Io(io::Error),
}

impl RunError {
    pub fn record(&self) -> ErrorRecord {
        let (kind, message) = match self {
            RunError::Numerical(m) => ("numerical", m.clone()),
            RunError::Parameter(m) => ("config", m.clone()),
            RunError::Io(e) => ("io", e.to_string()),
        };
        ErrorRecord {
            kind,
            message,
            locations: Vec::new(),
        }
    }
}

impl From<ucp_core::Error> for RunError {
    fn from(e: ucp_core::Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e.to_string())
        } else {
            RunError::Parameter(e.to_string())
        }
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

pub type RunResult = Result<Outcome, RunError>;

pub fn dispatch(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    match cfg.command {
        Command::DispersionCheck => spectral::dispersion_check(cfg, out),
        Command::Solve => spectral::solve(cfg, out),
        Command::LatticeCount => lattice::lattice_count(cfg, out),
        Command::FrameBounds => observability::frame_bounds(cfg, out),
        Command::Certificate => observability::certificate(cfg, out),
        Command::Dn => fluid::dn(cfg, out),
        Command::ZcsDispersion => fluid::zcs_dispersion(cfg, out),
        Command::RestProbe => fluid::rest_probe(cfg, out),
    }
}

/// Keeps only the checks the config declared, in declaration order.
fn declared(cfg: &ExperimentConfig, mut all: Vec<CheckResult>) -> Vec<CheckResult> {
    cfg.checks
        .iter()
        .filter_map(|name| {
            all.iter()
                .position(|c| &c.name == name)
                .map(|i| all.swap_remove(i))
        })
        .collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coefficients with independent real and imaginary parts uniform on [-1, 1).
fn random_state(rng: &mut ChaCha8Rng, truncation: usize) -> FourierState {
    FourierState::from_fn(truncation, |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn verdict_name<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}
