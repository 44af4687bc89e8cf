use std::io::Write;

use rayon::prelude::*;
use serde_json::json;
use ucp_core::dispersion::DispersionRelation;
use ucp_core::lattice::FrequencyLattice;
use ucp_core::observability::{
    frame_bounds as bounds_of, gram_matrix, ucp_certificate, write_certificate_csv, SpaceTimeDomain,
};
use ucp_core::spectral::FourierState;
use ucp_core::Complex64;

use super::{declared, random_state, rng, Outcome, RunResult};
use crate::config::ExperimentConfig;
use crate::manifest::{CheckResult, OutputDir};

/// Entrywise distance of a full-strip Gram matrix from `area · I`.
pub const ORTHOGONALITY_ENTRY_TOL: f64 = 1e-12;
/// Distance of both frame bounds from the area on a full strip.
pub const ORTHOGONALITY_BOUND_TOL: f64 = 1e-10;
/// Eigensolver slack, relative to the domain area.
pub const EIGEN_SLACK: f64 = 1e-10;
/// The fast decay ratio must be this many times smaller than the slow one.
pub const CONTRAST_FACTOR: f64 = 100.0;
/// Rounding floor on the quadrature envelope, relative to the mass.
const QUADRATURE_FLOOR: f64 = 1e-12;

pub fn frame_bounds(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    let dom = cfg.domain.as_ref().expect("validated");
    let n = cfg.frame.as_ref().expect("validated").truncation;
    let area = dom.area();

    let mut bounds = Vec::new();
    let mut worst_entry: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    let mut sandwich_rows = Vec::new();
    let mut sandwich_ok = true;
    let mut envelope_ok = true;
    let mut rng = rng(cfg.seed);

    for rel in &cfg.relations {
        let g = gram_matrix(&FrequencyLattice::new(rel, n), dom);
        let fb = bounds_of(&g)?;
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                let target = if i == j { area } else { 0.0 };
                worst_entry = worst_entry.max((g.get(i, j) - target).norm());
            }
        }
        worst_bound = worst_bound
            .max((fb.d_minus - area).abs())
            .max((fb.d_plus - area).abs());

        if let Some(spec) = &cfg.sandwich {
            let states: Vec<FourierState> = (0..spec.vectors)
                .map(|_| random_state(&mut rng, n))
                .collect();
            let rows: Vec<_> = states
                .par_iter()
                .map(|s| {
                    let energy = s.norm_sqr();
                    let mass = g.restricted_mass(s.coeffs());
                    let coarse = midpoint_mass(s, rel, dom, spec.quadrature / 2);
                    let fine = midpoint_mass(s, rel, dom, spec.quadrature);
                    (energy, mass, coarse, fine)
                })
                .collect();
            for (i, &(energy, mass, coarse, fine)) in rows.iter().enumerate() {
                let slack = EIGEN_SLACK * area * energy;
                let lower = fb.d_minus_raw * energy;
                let upper = fb.d_plus * energy;
                sandwich_ok &= lower - slack <= mass && mass <= upper + slack;
                envelope_ok &=
                    (mass - fine).abs() <= (fine - coarse).abs() + QUADRATURE_FLOOR * fine.abs();
                sandwich_rows.push(format!(
                    "{},{i},{energy},{mass},{lower},{upper},{coarse},{fine}",
                    rel.name()
                ));
            }
        }
        bounds.push((rel.name().to_string(), fb));
    }

    out.write_with("frame_bounds.csv", |w| {
        writeln!(w, "relation,N,d_minus_raw,d_minus,d_plus,domain_area")?;
        for (name, fb) in &bounds {
            writeln!(
                w,
                "{name},{},{},{},{},{}",
                fb.truncation, fb.d_minus_raw, fb.d_minus, fb.d_plus, fb.domain_area
            )?;
        }
        Ok(())
    })?;
    if cfg.sandwich.is_some() {
        out.write_with("sandwich.csv", |w| {
            writeln!(
                w,
                "relation,index,coeff_energy,mass,lower,upper,quadrature_coarse,quadrature_fine"
            )?;
            for r in &sandwich_rows {
                writeln!(w, "{r}")?;
            }
            Ok(())
        })?;
    }

    let mut checks = vec![CheckResult::new(
        "orthogonality",
        worst_entry <= ORTHOGONALITY_ENTRY_TOL && worst_bound <= ORTHOGONALITY_BOUND_TOL,
        format!(
            "max |G - area I| = {worst_entry:e} <= {ORTHOGONALITY_ENTRY_TOL:e}; max |d - area| = {worst_bound:e} <= {ORTHOGONALITY_BOUND_TOL:e}"
        ),
    )];
    if let Some(spec) = &cfg.sandwich {
        checks.push(CheckResult::new(
            "sandwich",
            sandwich_ok && envelope_ok,
            format!(
                "{} vectors per relation: bounds hold {sandwich_ok}; mass inside {}/{} midpoint envelope {envelope_ok}",
                spec.vectors,
                spec.quadrature,
                spec.quadrature / 2
            ),
        ));
    }
    let results: Vec<_> = bounds
        .iter()
        .map(|(name, fb)| json!({ "relation": name, "bounds": fb }))
        .collect();
    Ok(Outcome {
        checks: declared(cfg, checks),
        results: json!({
            "domain_area": area,
            "max_entry_deviation": worst_entry,
            "max_bound_deviation": worst_bound,
            "relations": results,
        }),
    })
}

pub fn certificate(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    let dom = cfg.domain.as_ref().expect("validated");
    let spec = cfg.certificate.as_ref().expect("validated");
    let slack = EIGEN_SLACK * dom.area();

    let mut interlacing_ok = true;
    let mut interlacing_detail = Vec::new();
    let mut ratios = Vec::new();
    let mut results = Vec::new();
    for rel in &cfg.relations {
        let rows = ucp_certificate(rel, dom, &spec.n_list)?;
        out.write_with(&format!("certificate_{}.csv", rel.name()), |w| {
            write_certificate_csv(w, &rows)
        })?;
        let minus_ok = rows
            .windows(2)
            .all(|w| w[1].d_minus <= w[0].d_minus + slack);
        let plus_ok = rows.windows(2).all(|w| w[1].d_plus >= w[0].d_plus - slack);
        interlacing_ok &= minus_ok && plus_ok;
        interlacing_detail.push(format!(
            "{} d_minus non-increasing {minus_ok}, d_plus non-decreasing {plus_ok}",
            rel.name()
        ));
        let ratio = rows[rows.len() - 1].d_minus / rows[0].d_minus;
        ratios.push((rel.name().to_string(), ratio));
        results.push(json!({ "relation": rel.name(), "decay_ratio": ratio, "rows": rows }));
    }

    let mut checks = vec![CheckResult::new(
        "interlacing",
        interlacing_ok,
        interlacing_detail.join("; "),
    )];
    if let Some(pair) = &spec.contrast {
        let find = |name: &str| {
            ratios
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, r)| *r)
                .expect("validated")
        };
        let (fast, slow) = (find(&pair[0]), find(&pair[1]));
        // a zero first bound leaves the ratio undefined (NaN), which fails the comparison
        let ok = fast <= slow / CONTRAST_FACTOR;
        checks.push(CheckResult::new(
            "contrast",
            ok,
            format!(
                "{} ratio {fast:e} <= {} ratio {slow:e} / {CONTRAST_FACTOR}",
                pair[0], pair[1]
            ),
        ));
    }
    Ok(Outcome {
        checks: declared(cfg, checks),
        results: json!({ "domain_area": dom.area(), "n_list": spec.n_list, "relations": results }),
    })
}

/// Composite midpoint rule for `∫_D |u|²` with `m × m` cells per rectangle.
pub fn midpoint_mass(
    g: &FourierState,
    rel: &DispersionRelation,
    dom: &SpaceTimeDomain,
    m: usize,
) -> f64 {
    let modes: Vec<(f64, f64, Complex64)> = g
        .modes()
        .map(|(k, c)| (k as f64, rel.omega(k as f64), c))
        .collect();
    let mut total = 0.0;
    for r in dom.rects() {
        let hx = (r.x1 - r.x0) / m as f64;
        let ht = (r.t1 - r.t0) / m as f64;
        let space: Vec<Vec<Complex64>> = (0..m)
            .map(|i| {
                let x = r.x0 + (i as f64 + 0.5) * hx;
                modes
                    .iter()
                    .map(|&(k, _, c)| c * Complex64::cis(k * x))
                    .collect()
            })
            .collect();
        let time: Vec<Vec<Complex64>> = (0..m)
            .map(|j| {
                let t = r.t0 + (j as f64 + 0.5) * ht;
                modes
                    .iter()
                    .map(|&(_, w, _)| Complex64::cis(-w * t))
                    .collect()
            })
            .collect();
        let sum: f64 = space
            .iter()
            .map(|row| {
                time.iter()
                    .map(|col| {
                        row.iter()
                            .zip(col)
                            .map(|(a, b)| a * b)
                            .sum::<Complex64>()
                            .norm_sqr()
                    })
                    .sum::<f64>()
            })
            .sum();
        total += sum * hx * ht;
    }
    total
}
