//! Configuration, orchestration and result emission for the `ucplab` binary.
//!
//! [`run_config_text`] is the whole pipeline: parse, validate, dispatch to the
//! owning library module, write result files and the manifest.

// `!(x > 0.0)` guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;

use config::{parse_config, Command, ExperimentConfig};
use experiments::{dispatch, Outcome};
use manifest::{ErrorRecord, OutputDir, RunManifest, Status};

pub const ARTIFACT: &str = "ucplab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn manifest(command: Option<Command>, config: Value, start: Instant) -> RunManifest {
    RunManifest {
        artifact: ARTIFACT,
        version: VERSION,
        command: command.map(|c| c.name().to_string()),
        config,
        status: Status::Pass,
        wall_time_s: 0.0,
        checks: Vec::new(),
        outputs: Vec::new(),
        results: Value::Null,
        error: None,
    }
    .timed(start)
}

impl RunManifest {
    fn timed(mut self, start: Instant) -> Self {
        self.wall_time_s = start.elapsed().as_secs_f64();
        self
    }

    fn failed(mut self, error: ErrorRecord) -> Self {
        self.status = error.status();
        self.error = Some(error);
        self
    }
}

/// Runs a validated config, writing into `out`. The manifest is written last;
/// if even that fails the returned manifest carries the I/O error.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> (RunManifest, Option<Outcome>) {
    let start = Instant::now();
    let base = manifest(Some(cfg.command), cfg.echo().clone(), start);
    let mut dir = match OutputDir::create(out) {
        Ok(d) => d,
        Err(e) => return (base.failed(experiments::RunError::Io(e).record()), None),
    };
    let result = dispatch(cfg, &mut dir);
    let mut m = base;
    m.outputs = dir.into_written();
    let outcome = match result {
        Ok(outcome) => {
            m.status = if outcome.passed() {
                Status::Pass
            } else {
                Status::CheckFailure
            };
            m.checks = outcome.checks.clone();
            m.results = outcome.results.clone();
            Some(outcome)
        }
        Err(e) => {
            m = m.failed(e.record());
            None
        }
    };
    let mut m = m.timed(start);
    if let Err(e) = m.write(out) {
        m = m.failed(experiments::RunError::Io(e).record());
    }
    (m, outcome)
}

/// Parses `text` and runs it. `out` overrides the config's `out` key.
/// `expected` rejects a config written for a different subcommand.
pub fn run_config_text(text: &str, out: Option<&Path>, expected: Option<Command>) -> RunManifest {
    let start = Instant::now();
    let cfg = match parse_config(text) {
        Ok(cfg) => cfg,
        Err(errs) => {
            let record = ErrorRecord {
                kind: "config",
                message: errs.to_string(),
                locations: errs.0,
            };
            let m = manifest(None, Value::Null, start).failed(record);
            if let Some(dir) = out {
                if std::fs::create_dir_all(dir).is_ok() {
                    let _ = m.write(dir);
                }
            }
            return m;
        }
    };
    if let Some(cmd) = expected {
        if cmd != cfg.command {
            let record = ErrorRecord {
                kind: "config",
                message: format!("config is for `{}` but `{cmd}` was invoked", cfg.command),
                locations: Vec::new(),
            };
            return manifest(Some(cmd), cfg.echo().clone(), start).failed(record);
        }
    }
    let dir: PathBuf = match (out, &cfg.out) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => {
            let record = ErrorRecord {
                kind: "config",
                message: "no output directory: pass --out or set `out` in the config".into(),
                locations: Vec::new(),
            };
            return manifest(Some(cfg.command), cfg.echo().clone(), start).failed(record);
        }
    };
    run(&cfg, &dir).0
}
