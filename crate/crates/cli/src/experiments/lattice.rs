use std::io::Write;

use serde_json::json;
use ucp_core::dispersion::Family;
use ucp_core::lattice::{beurling_ratio_curve, max_vertical_extent, FrequencyLattice};

use super::{declared, verdict_name, Outcome, RunResult};
use crate::config::ExperimentConfig;
use crate::manifest::{CheckResult, OutputDir};

/// Relative distance of the final ratio from the line density.
pub const LINE_DENSITY_TOL: f64 = 0.05;
/// Absolute distance of `D/r` at the largest `|x|` from `√8`.
pub const ANNULUS_LIMIT_TOL: f64 = 1e-2;

pub fn lattice_count(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();

    if let Some(spec) = &cfg.lattice {
        let mut sep_ok = true;
        let mut sep_detail = Vec::new();
        let mut verdict_ok = true;
        let mut verdict_detail = Vec::new();
        let mut density_ok = true;
        let mut density_detail = Vec::new();
        let mut rows = Vec::new();

        for (i, rel) in cfg.relations.iter().enumerate() {
            let sep = FrequencyLattice::new(rel, spec.truncation).separation()?;
            sep_ok &= sep >= 1.0;
            sep_detail.push(format!("{} {sep}", rel.name()));

            let report = beurling_ratio_curve(rel, spec.truncation, &spec.radii)?;
            out.write_with(&format!("counting_{}.csv", rel.name()), |w| {
                report.write_csv(w)
            })?;
            out.write_with(&format!("counting_{}.meta.ndjson", rel.name()), |w| {
                writeln!(w, "{}", report.metadata_ndjson())
            })?;

            let verdict = verdict_name(&report.verdict);
            if let Some(expect) = &spec.expect {
                verdict_ok &= expect[i] == verdict;
                verdict_detail.push(format!("{} {verdict} (expected {})", rel.name(), expect[i]));
            }

            // points (k, ck) sit √(1+c²) apart on a line: 2r/√(1+c²) per ball
            if let Family::Transport { c } = rel.family() {
                let limit = 2.0 / (1.0 + c * c).sqrt();
                let gaps: Vec<f64> = report.ratios.iter().map(|q| (q - limit).abs()).collect();
                let last = *gaps.last().expect("at least three radii");
                let converging = gaps.windows(2).all(|w| w[1] <= w[0]);
                let ok = last <= LINE_DENSITY_TOL * limit && converging;
                density_ok &= ok;
                density_detail.push(format!(
                    "{} ratios {:?} -> {limit} (final within {:.3}% <= 5%, distances non-increasing: {converging})",
                    rel.name(),
                    report.ratios,
                    100.0 * last / limit
                ));
            }
            rows.push(json!({
                "relation": rel.name(),
                "separation": sep,
                "radii": report.radii,
                "n_of_r": report.n_of_r,
                "ratios": report.ratios,
                "verdict": verdict,
            }));
        }
        checks.push(CheckResult::new(
            "separation",
            sep_ok,
            sep_detail.join("; "),
        ));
        checks.push(CheckResult::new(
            "verdict",
            verdict_ok,
            verdict_detail.join("; "),
        ));
        checks.push(CheckResult::new(
            "line_density",
            density_ok,
            density_detail.join("; "),
        ));
        results.insert("counting".into(), json!(rows));
    }

    if let Some(spec) = &cfg.annulus {
        let values = spec
            .x_abs
            .iter()
            .map(|&x| max_vertical_extent(x, spec.r))
            .collect::<Result<Vec<f64>, _>>()?;
        out.write_with("annulus.csv", |w| {
            writeln!(w, "x_abs,r,D,D_over_r")?;
            for (x, d) in spec.x_abs.iter().zip(&values) {
                writeln!(w, "{x},{},{d},{}", spec.r, d / spec.r)?;
            }
            Ok(())
        })?;
        let limit = 8f64.sqrt();
        let last = values.last().expect("validated non-empty") / spec.r;
        let gap = (last - limit).abs();
        checks.push(CheckResult::new(
            "annulus_limit",
            gap <= ANNULUS_LIMIT_TOL,
            format!(
                "D/r = {last} at |x| = {}, |D/r - sqrt 8| = {gap:e} <= {ANNULUS_LIMIT_TOL:e}",
                spec.x_abs.last().unwrap()
            ),
        ));
        let monotone = values.windows(2).all(|w| w[1] > w[0]);
        checks.push(CheckResult::new(
            "annulus_monotone",
            monotone,
            format!("D = {values:?}"),
        ));
        results.insert(
            "annulus".into(),
            json!({ "r": spec.r, "x_abs": spec.x_abs, "D": values }),
        );
    }

    Ok(Outcome {
        checks: declared(cfg, checks),
        results: results.into(),
    })
}
