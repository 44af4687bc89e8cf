use serde_json::json;
use ucp_core::dispersion::{check_superlinear, check_symbol_bound};
use ucp_core::spectral::{
    evolve, sample_space_time, write_samples_csv, write_states_ndjson, GridSpec,
};

use super::{declared, random_state, rng, verdict_name, Outcome, RunResult};
use crate::config::ExperimentConfig;
use crate::manifest::{CheckResult, OutputDir};

/// Relative L² drift allowed after one exact evolution.
pub const UNITARITY_TOL: f64 = 1e-13;

pub fn dispersion_check(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    let spec = cfg.superlinearity.as_ref().expect("validated");
    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut verdict_ok = true;
    let mut verdict_detail = Vec::new();
    let mut bound_ok = true;
    let mut bound_detail = Vec::new();

    for (i, rel) in cfg.relations.iter().enumerate() {
        let report = check_superlinear(rel, spec.k_max)?;
        for (j, &k) in report.wavenumbers.iter().enumerate() {
            rows.push(format!(
                "{},{},{},{}",
                rel.name(),
                k,
                report.ratios_positive[j],
                report.ratios_negative[j]
            ));
        }
        let verdict = verdict_name(&report.verdict);
        if let Some(expect) = &spec.expect {
            let ok = expect[i] == verdict;
            verdict_ok &= ok;
            verdict_detail.push(format!("{} {verdict} (expected {})", rel.name(), expect[i]));
        }
        let mut symbol = serde_json::Value::Null;
        if let (Some(m), Some(c)) = (spec.symbol_order, spec.symbol_constant) {
            let samples: Vec<f64> = std::iter::once(0.0)
                .chain(report.wavenumbers.iter().flat_map(|&k| [k, -k]))
                .collect();
            let b = check_symbol_bound(rel, m, c, &samples)?;
            bound_ok &= b.holds;
            bound_detail.push(format!(
                "{} smallest constants {:?} vs C = {c}",
                rel.name(),
                b.smallest_constants
            ));
            symbol = json!({ "holds": b.holds, "smallest_constants": b.smallest_constants });
        }
        results.push(json!({ "relation": rel.name(), "verdict": verdict, "symbol_bound": symbol }));
    }

    out.write_with("superlinearity.csv", |w| {
        use std::io::Write;
        writeln!(w, "relation,k,ratio_positive,ratio_negative")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })?;

    let checks = vec![
        CheckResult::new("verdict", verdict_ok, verdict_detail.join("; ")),
        CheckResult::new("symbol_bound", bound_ok, bound_detail.join("; ")),
    ];
    Ok(Outcome {
        checks: declared(cfg, checks),
        results: json!({ "k_max": spec.k_max, "relations": results }),
    })
}

pub fn solve(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    let spec = cfg.solve.as_ref().expect("validated");
    let mut rng = rng(cfg.seed);
    let g = random_state(&mut rng, spec.truncation);
    let n0 = g.l2_norm();

    let mut worst: f64 = 0.0;
    let mut results = Vec::new();
    for rel in &cfg.relations {
        let evolved = evolve(&g, rel, spec.time);
        let n1 = evolved.l2_norm();
        let drift = (n1 - n0).abs() / n0;
        worst = worst.max(drift);
        results.push(json!({ "relation": rel.name(), "norm_initial": n0, "norm_final": n1, "relative_drift": drift }));

        let states = [g.clone(), evolved];
        out.write_with(&format!("states_{}.ndjson", rel.name()), |w| {
            write_states_ndjson(w, &states)
        })?;
        if let (Some(nx), Some(nt)) = (spec.sample_nx, spec.sample_nt) {
            let grid = GridSpec {
                nx,
                nt,
                t0: 0.0,
                t1: spec.time,
            };
            let samples = sample_space_time(&g, rel, &grid)?;
            out.write_with(&format!("samples_{}.csv", rel.name()), |w| {
                write_samples_csv(w, &samples)
            })?;
        }
    }

    let checks = vec![CheckResult::new(
        "unitarity",
        worst < UNITARITY_TOL,
        format!("max relative L2 drift {worst:e} < {UNITARITY_TOL:e}"),
    )];
    Ok(Outcome {
        checks: declared(cfg, checks),
        results: json!({
            "truncation": spec.truncation,
            "time": spec.time,
            "max_relative_drift": worst,
            "relations": results,
        }),
    })
}
