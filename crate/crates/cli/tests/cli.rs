//! End-to-end runs of the `ucplab` binary: exit codes, error reporting,
//! output formats and reproducibility.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn ucplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_file(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ucplab(&args)
}

fn run_text(sub: &str, text: &str, out: &Path) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    run_file(sub, &path, out, &[])
}

fn manifest(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("manifest.ndjson"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("each manifest line is JSON"))
        .collect()
}

fn record<'a>(records: &'a [Value], kind: &str) -> &'a Value {
    records
        .iter()
        .find(|r| r["record"] == kind)
        .unwrap_or_else(|| panic!("no {kind} record"))
}

/// Every file in `dir` keyed by name, with the manifest's wall time removed.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            let name = e.file_name().into_string().unwrap();
            let mut bytes = fs::read(e.path()).unwrap();
            if name == "manifest.ndjson" {
                let text = String::from_utf8(bytes).unwrap();
                let mut lines: Vec<Value> = text
                    .lines()
                    .map(|l| serde_json::from_str(l).unwrap())
                    .collect();
                lines[0]["wall_time_s"] = Value::Null;
                bytes = lines
                    .iter()
                    .map(|l| l.to_string() + "\n")
                    .collect::<String>()
                    .into_bytes();
            }
            (name, bytes)
        })
        .collect()
}

fn subcommand_of(config: &Path) -> String {
    let text = fs::read_to_string(config).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("command"))
        .expect("command key");
    line.split('"').nth(1).unwrap().to_string()
}

#[test]
fn example_configs_pass() {
    for entry in fs::read_dir(repo().join("configs/examples")).unwrap() {
        let path = entry.unwrap().path();
        let out = tempfile::tempdir().unwrap();
        let o = run_file(&subcommand_of(&path), &path, out.path(), &[]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&o.stdout)
        );
        let records = manifest(out.path());
        assert_eq!(records[0]["record"], "run");
        assert_eq!(records[0]["status"], "pass");
    }
}

#[test]
fn failed_check_exits_one() {
    let text = r#"
command = "lattice-count"
checks = ["verdict"]

[[dispersion]]
relation = "transport"
c = 1.0

[lattice]
truncation = 1024
radii = [10.0, 40.0, 160.0]
expect = ["PASS"]
"#;
    let out = tempfile::tempdir().unwrap();
    let o = run_text("lattice-count", text, out.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL verdict"));
    let records = manifest(out.path());
    assert_eq!(records[0]["exit_code"], 1);
    assert_eq!(record(&records, "check")["check"]["passed"], false);
}

#[test]
fn unknown_key_is_a_config_error_with_line_number() {
    let text = "command = \"solve\"\nchecks = [\"unitarity\"]\n\n[[dispersion]]\nrelation = \"schrodinger\"\n\n[solve]\ntruncation = 8\ntime = 1.0\ntiem = 2.0\n";
    let out = tempfile::tempdir().unwrap();
    let o = run_text("solve", text, out.path());
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("tiem"), "{stderr}");
    let records = manifest(out.path());
    let err = &record(&records, "error")["error"];
    assert_eq!(err["kind"], "config");
    assert_eq!(err["locations"][0]["line"], 10);
}

#[test]
fn invalid_values_report_every_problem() {
    let text = r#"command = "solve"
checks = ["unitarity"]

[[dispersion]]
relation = "gravity_capillary"
g = 1.0
S = 1.0

[solve]
truncation = 0
time = 1.0
"#;
    let out = tempfile::tempdir().unwrap();
    let o = run_text("solve", text, out.path());
    assert_eq!(o.status.code(), Some(2));
    let records = manifest(out.path());
    let locations = record(&records, "error")["error"]["locations"]
        .as_array()
        .unwrap()
        .clone();
    assert!(locations.len() >= 2, "{locations:?}");
    let message = record(&records, "error")["error"]["message"].to_string();
    assert!(message.contains("`H`"), "{message}");
}

#[test]
fn subcommand_must_match_config() {
    let out = tempfile::tempdir().unwrap();
    let config = repo().join("configs/acceptance/06_annulus.toml");
    let o = run_file("solve", &config, out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lattice-count"));
}

#[test]
fn zero_threads_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    let config = repo().join("configs/acceptance/06_annulus.toml");
    let o = run_file("lattice-count", &config, out.path(), &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    let o = run_file("solve", Path::new("/nonexistent/run.toml"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn blow_up_is_a_numerical_failure() {
    // RK4 far beyond its stability limit on the stiffest resolved mode
    let text = r#"command = "rest-probe"
checks = ["energy"]

[probe]
nx = 64
nz = 32
depth = 1.0
g = 1.0
t_final = 40.0
dt = 1.0
window = [0.3, 1.2]
tol = 1e-15
initial = "bump"
bump_center = 3.141592653589793
bump_half_width = 0.8
bump_amplitude = 1e-3
"#;
    let out = tempfile::tempdir().unwrap();
    let o = run_text("rest-probe", text, out.path());
    assert_eq!(o.status.code(), Some(3));
    let records = manifest(out.path());
    assert_eq!(record(&records, "error")["error"]["kind"], "numerical");
}

#[test]
fn reruns_are_bit_identical_across_thread_counts() {
    let config = repo().join("configs/acceptance/10_sandwich.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, extra) in [(&a, &[][..]), (&b, &[][..]), (&c, &["--threads", "1"][..])] {
        let o = run_file("frame-bounds", &config, dir.path(), extra);
        assert_eq!(o.status.code(), Some(0));
    }
    let first = snapshot(a.path());
    assert!(first.contains_key("sandwich.csv"));
    assert_eq!(first, snapshot(b.path()));
    assert_eq!(first, snapshot(c.path()));
}

#[test]
fn dn_structure_is_reproducible() {
    let config = repo().join("configs/acceptance/09_dn_structure.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_file("dn", &config, a.path(), &["--threads", "2"]);
    run_file("dn", &config, b.path(), &[]);
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
}

#[test]
fn no_temporary_files_remain() {
    let out = tempfile::tempdir().unwrap();
    let config = repo().join("configs/examples/solve_samples.toml");
    run_file("solve", &config, out.path(), &[]);
    for e in fs::read_dir(out.path()).unwrap() {
        let name = e.unwrap().file_name().into_string().unwrap();
        assert!(!name.starts_with('.'), "{name}");
    }
}

#[test]
fn state_and_sample_formats() {
    let out = tempfile::tempdir().unwrap();
    let config = repo().join("configs/examples/solve_samples.toml");
    assert_eq!(
        run_file("solve", &config, out.path(), &[]).status.code(),
        Some(0)
    );
    let mut saw_samples = false;
    for e in fs::read_dir(out.path()).unwrap() {
        let path = e.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if name.starts_with("states_") {
            for line in fs::read_to_string(&path).unwrap().lines() {
                let v: Value = serde_json::from_str(line).unwrap();
                let n = v["N"].as_u64().unwrap() as usize;
                assert_eq!(v["re"].as_array().unwrap().len(), 2 * n + 1);
                assert_eq!(v["im"].as_array().unwrap().len(), 2 * n + 1);
            }
        } else if name.starts_with("samples_") {
            saw_samples = true;
            let text = fs::read_to_string(&path).unwrap();
            assert_eq!(text.lines().next(), Some("x,t,re,im"));
            for line in text.lines().skip(1) {
                assert_eq!(line.split(',').count(), 4);
            }
        }
    }
    assert!(saw_samples);
}

#[test]
fn certificate_columns_interlace() {
    let out = tempfile::tempdir().unwrap();
    let config = repo().join("configs/acceptance/03_interlacing.toml");
    assert_eq!(
        run_file("certificate", &config, out.path(), &[])
            .status
            .code(),
        Some(0)
    );
    let text = fs::read_to_string(out.path().join("certificate_schrodinger.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("N,d_minus_raw,d_minus,d_plus,domain_area")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
        assert!(w[1][2] <= w[0][2] + 1e-10 * w[0][4]);
        assert!(w[1][3] >= w[0][3] - 1e-10 * w[0][4]);
    }
}

#[test]
fn counting_report_has_csv_and_metadata() {
    let text = r#"command = "lattice-count"
checks = ["separation"]

[[dispersion]]
relation = "schrodinger"
name = "s"

[lattice]
truncation = 128
radii = [5.0, 10.0, 20.0]
"#;
    let out = tempfile::tempdir().unwrap();
    assert_eq!(
        run_text("lattice-count", text, out.path()).status.code(),
        Some(0)
    );
    let csv = fs::read_to_string(out.path().join("counting_s.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,N_of_r,ratio"));
    assert_eq!(csv.lines().count(), 4);
    let meta = fs::read_to_string(out.path().join("counting_s.meta.ndjson")).unwrap();
    let v: Value = serde_json::from_str(meta.trim()).unwrap();
    assert!(v.get("verdict").is_some(), "{v}");
}

#[test]
fn zero_state_probe_is_silent() {
    let out = tempfile::tempdir().unwrap();
    let config = repo().join("configs/examples/rest_probe_zero.toml");
    assert_eq!(
        run_file("rest-probe", &config, out.path(), &[])
            .status
            .code(),
        Some(0)
    );
    let text = fs::read_to_string(out.path().join("probe.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,activity,total_energy"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(cols[1], 0.0);
        assert_eq!(cols[2], 0.0);
    }
    let surface = fs::read_to_string(out.path().join("initial_surface.ndjson")).unwrap();
    let v: Value = serde_json::from_str(surface.trim()).unwrap();
    let nx = v["nx"].as_u64().unwrap() as usize;
    assert_eq!(v["eta"].as_array().unwrap().len(), nx);
    assert_eq!(v["phi"].as_array().unwrap().len(), nx);
}

#[test]
fn manifest_records_outputs_and_config() {
    let out = tempfile::tempdir().unwrap();
    let config = repo().join("configs/acceptance/06_annulus.toml");
    assert_eq!(
        run_file("lattice-count", &config, out.path(), &[])
            .status
            .code(),
        Some(0)
    );
    let records = manifest(out.path());
    let run = &records[0];
    assert_eq!(run["artifact"], "ucplab");
    assert_eq!(run["command"], "lattice-count");
    assert_eq!(
        record(&records, "config")["config"]["command"],
        "lattice-count"
    );
    let outputs: Vec<&str> = records
        .iter()
        .filter(|r| r["record"] == "output")
        .map(|r| r["path"].as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["annulus.csv"]);
    assert!(out.path().join("annulus.csv").exists());
}
