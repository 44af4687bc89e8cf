//! Result files and the run manifest.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! reader never observes a partial file. Numeric files never contain wall
//! times; only the manifest does.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ConfigError;

/// Exit statuses of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    CheckFailure,
    ConfigError,
    NumericalFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::CheckFailure => 1,
            Status::ConfigError => 2,
            Status::NumericalFailure => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Machine-readable description of why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub locations: Vec<ConfigError>,
}

impl ErrorRecord {
    pub fn status(&self) -> Status {
        match self.kind {
            "numerical" => Status::NumericalFailure,
            _ => Status::ConfigError,
        }
    }

    pub fn to_json_line(&self) -> String {
        json!({ "record": "error", "error": self }).to_string()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: Option<String>,
    pub config: Value,
    pub status: Status,
    pub wall_time_s: f64,
    pub checks: Vec<CheckResult>,
    pub outputs: Vec<String>,
    pub results: Value,
    pub error: Option<ErrorRecord>,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    /// One record per line: the run header, then checks, outputs, results and
    /// the error record if any.
    pub fn to_ndjson(&self) -> String {
        let mut lines = vec![json!({
            "record": "run",
            "artifact": self.artifact,
            "version": self.version,
            "command": self.command,
            "status": self.status,
            "exit_code": self.exit_code(),
            "wall_time_s": self.wall_time_s,
        })];
        lines.push(json!({ "record": "config", "config": self.config }));
        lines.extend(
            self.checks
                .iter()
                .map(|c| json!({ "record": "check", "check": c })),
        );
        lines.extend(
            self.outputs
                .iter()
                .map(|o| json!({ "record": "output", "path": o })),
        );
        lines.push(json!({ "record": "results", "results": self.results }));
        if let Some(e) = &self.error {
            lines.push(json!({ "record": "error", "error": e }));
        }
        let mut s = String::new();
        for l in lines {
            s.push_str(&l.to_string());
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        write_atomic(dir, MANIFEST_NAME, self.to_ndjson().as_bytes())
    }
}

pub const MANIFEST_NAME: &str = "manifest.ndjson";

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

/// Collects result files written under one output directory.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write_with(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
    ) -> io::Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        write_atomic(&self.dir, name, &buf)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn into_written(self) -> Vec<String> {
        self.written
    }
}
