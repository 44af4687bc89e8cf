use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde_json::json;
use ucp_core::fluid::{
    dn_apply, dn_flat_symbol, linear_dispersion_check, rest_propagation_probe, smooth_bump,
    write_surface_states, FluidGeometry, LaplaceSolver, LinearDispersionParams, ProbeParams,
    SurfaceState, Window,
};
use ucp_core::periodic::PeriodicGrid;

use super::{declared, rng, Outcome, RunResult};
use crate::config::{ExperimentConfig, InitialSurface, SymbolReference};
use crate::manifest::{CheckResult, OutputDir};

/// Error ratio per grid doubling for a second-order scheme, and its band.
pub const CONVERGENCE_RATIO: f64 = 4.0;
pub const CONVERGENCE_BAND: f64 = 1.0;
/// Symbol error on the finest grid.
pub const FINEST_SYMBOL_TOL: f64 = 1e-2;
pub const FLAT_ASYMMETRY_TOL: f64 = 1e-8;
pub const VARIABLE_ASYMMETRY_TOL: f64 = 1e-3;
pub const KERNEL_TOL: f64 = 1e-9;
/// Quadratic form floor relative to `Σφ²`.
pub const NONNEGATIVE_TOL: f64 = 1e-10;
pub const FREQUENCY_TOL: f64 = 1e-3;
pub const GRAVITY_SCALING_TOL: f64 = 1e-3;
/// Relative drift of the probe's total energy.
pub const ENERGY_DRIFT_TOL: f64 = 1e-4;

pub fn dn(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();

    if !cfg.dn_symbol.is_empty() {
        let mut rows = Vec::new();
        let mut conv_ok = true;
        let mut conv_detail = Vec::new();
        let mut deep_ok = true;
        let mut deep_detail = Vec::new();
        let mut entries = Vec::new();
        for spec in &cfg.dn_symbol {
            let reference = match spec.reference {
                SymbolReference::FiniteDepth => dn_flat_symbol(spec.k, spec.depth),
                SymbolReference::DeepWater => spec.k.unsigned_abs() as f64,
            };
            let mut amps = Vec::new();
            for &n in &spec.grids {
                let geom = FluidGeometry::flat(spec.depth, n, n)?;
                let grid = PeriodicGrid::new(n);
                let phi: Vec<f64> = grid
                    .points()
                    .iter()
                    .map(|x| (spec.k as f64 * x).cos())
                    .collect();
                let amp = grid.cosine_amplitude(&dn_apply(&geom, &phi)?, spec.k);
                amps.push(amp);
                rows.push(format!(
                    "{},{},{n},{amp},{reference},{}",
                    spec.depth,
                    spec.k,
                    (amp - reference).abs()
                ));
            }
            let errors: Vec<f64> = amps.iter().map(|a| (a - reference).abs()).collect();
            let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
            match spec.reference {
                SymbolReference::FiniteDepth => {
                    let in_band = ratios
                        .iter()
                        .all(|r| (r - CONVERGENCE_RATIO).abs() <= CONVERGENCE_BAND);
                    let finest = *errors.last().expect("two grids");
                    let ok = in_band && finest < FINEST_SYMBOL_TOL;
                    conv_ok &= ok;
                    conv_detail.push(format!(
                        "H={} k={}: errors {errors:?}, ratios {ratios:?} within {CONVERGENCE_RATIO}±{CONVERGENCE_BAND}, finest < {FINEST_SYMBOL_TOL:e}",
                        spec.depth, spec.k
                    ));
                }
                SymbolReference::DeepWater => {
                    // exponentially small depth effect plus a Richardson estimate of the O(h²) error
                    let n = amps.len();
                    let exp_term = (-2.0 * spec.k.unsigned_abs() as f64 * spec.depth).exp();
                    let richardson = 2.0 * (amps[n - 1] - amps[n - 2]).abs() / 3.0;
                    let bound = exp_term + richardson;
                    let ok = errors[n - 1] <= bound;
                    deep_ok &= ok;
                    deep_detail.push(format!(
                        "H={} k={}: |G - |k|| = {:e} <= {exp_term:e} + {richardson:e}",
                        spec.depth,
                        spec.k,
                        errors[n - 1]
                    ));
                }
            }
            entries.push(json!({
                "depth": spec.depth,
                "k": spec.k,
                "grids": spec.grids,
                "reference": reference,
                "amplitudes": amps,
                "errors": errors,
                "error_ratios": ratios,
            }));
        }
        out.write_with("dn_symbol.csv", |w| {
            writeln!(w, "depth,k,n,amplitude,reference,error")?;
            for r in &rows {
                writeln!(w, "{r}")?;
            }
            Ok(())
        })?;
        checks.push(CheckResult::new(
            "symbol_convergence",
            conv_ok,
            conv_detail.join("; "),
        ));
        checks.push(CheckResult::new(
            "deep_water",
            deep_ok,
            deep_detail.join("; "),
        ));
        results.insert("symbol".into(), json!(entries));
    }

    if let Some(spec) = &cfg.dn_structure {
        let grid = PeriodicGrid::new(spec.nx);
        let x = grid.points();
        let flat = FluidGeometry::flat(spec.depth, spec.nx, spec.nz)?;
        let varied = FluidGeometry::new(
            spec.depth,
            x.iter()
                .map(|x| spec.bottom_amplitude * (x + 0.3).cos())
                .collect(),
            x.iter()
                .map(|x| spec.surface_amplitude * (2.0 * x).sin())
                .collect(),
            spec.nz,
            1e-3 * spec.depth,
        )?;
        // one solver per geometry keeps each cached factorization valid
        let mut solve_flat = LaplaceSolver::new();
        let mut solve_varied = LaplaceSolver::new();

        let ones = vec![1.0; spec.nx];
        let kernel = solve_flat
            .dn_apply(&flat, &ones)?
            .into_iter()
            .chain(solve_varied.dn_apply(&varied, &ones)?)
            .fold(0.0f64, |m, v| m.max(v.abs()));

        let mut rng = rng(cfg.seed);
        let mut random_phi = || -> Vec<f64> {
            let coeffs: Vec<(f64, f64)> = (0..=spec.max_mode)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            x.iter()
                .map(|&x| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(m, (a, b))| {
                            (a * (m as f64 * x).cos() + b * (m as f64 * x).sin()) / (1.0 + m as f64)
                        })
                        .sum()
                })
                .collect()
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

        let mut rows = Vec::new();
        let (mut asym_flat, mut asym_varied): (f64, f64) = (0.0, 0.0);
        let mut min_form = f64::INFINITY;
        for trial in 0..spec.trials {
            let p = random_phi();
            let q = random_phi();
            let mut per_geometry = Vec::new();
            for (geom, solver) in [(&flat, &mut solve_flat), (&varied, &mut solve_varied)] {
                let gp = solver.dn_apply(geom, &p)?;
                let gq = solver.dn_apply(geom, &q)?;
                let (pp, qq) = (dot(&gp, &p), dot(&gq, &q));
                let asym =
                    (dot(&gp, &q) - dot(&p, &gq)).abs() / (pp.max(0.0).sqrt() * qq.max(0.0).sqrt());
                let form = (pp / dot(&p, &p)).min(qq / dot(&q, &q));
                per_geometry.push((asym, form));
            }
            asym_flat = asym_flat.max(per_geometry[0].0);
            asym_varied = asym_varied.max(per_geometry[1].0);
            min_form = min_form.min(per_geometry[0].1).min(per_geometry[1].1);
            rows.push(format!(
                "{trial},{},{},{},{}",
                per_geometry[0].0, per_geometry[1].0, per_geometry[0].1, per_geometry[1].1
            ));
        }
        out.write_with("dn_structure.csv", |w| {
            writeln!(
                w,
                "trial,asymmetry_flat,asymmetry_variable,min_form_flat,min_form_variable"
            )?;
            for r in &rows {
                writeln!(w, "{r}")?;
            }
            Ok(())
        })?;
        checks.push(CheckResult::new(
            "self_adjoint_flat",
            asym_flat < FLAT_ASYMMETRY_TOL,
            format!("max asymmetry {asym_flat:e} < {FLAT_ASYMMETRY_TOL:e}"),
        ));
        checks.push(CheckResult::new(
            "self_adjoint_variable",
            asym_varied < VARIABLE_ASYMMETRY_TOL,
            format!(
                "max asymmetry {asym_varied:e} < {VARIABLE_ASYMMETRY_TOL:e} at {}x{}",
                spec.nx, spec.nz
            ),
        ));
        checks.push(CheckResult::new(
            "kernel",
            kernel < KERNEL_TOL,
            format!("max |G 1| = {kernel:e} < {KERNEL_TOL:e}"),
        ));
        checks.push(CheckResult::new(
            "nonnegative",
            min_form >= -NONNEGATIVE_TOL,
            format!("min <G phi, phi>/|phi|^2 = {min_form:e} >= -{NONNEGATIVE_TOL:e}"),
        ));
        results.insert(
            "structure".into(),
            json!({
                "max_asymmetry_flat": asym_flat,
                "max_asymmetry_variable": asym_varied,
                "kernel": kernel,
                "min_form": min_form,
                "trials": spec.trials,
            }),
        );
    }

    Ok(Outcome {
        checks: declared(cfg, checks),
        results: results.into(),
    })
}

pub fn zcs_dispersion(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    let spec = cfg.zcs.as_ref().expect("validated");
    let steps = (spec.periods * 2.0 * PI / spec.phase_step).ceil() as usize;
    let mut fits = Vec::new();
    for &g in &spec.g {
        let mut p = LinearDispersionParams {
            k: spec.k,
            depth: spec.depth,
            g,
            amplitude: spec.amplitude,
            steps,
            dt: 0.0,
            nx: spec.nx,
            nz: spec.nz,
        };
        p.dt = spec.phase_step / p.linear_frequency();
        fits.push((g, p.dt, linear_dispersion_check(&p)?));
    }
    out.write_with("zcs_dispersion.csv", |w| {
        writeln!(
            w,
            "g,k,depth,dt,steps,omega,expected,relative_error,zero_crossings"
        )?;
        for (g, dt, f) in &fits {
            writeln!(
                w,
                "{g},{},{},{dt},{steps},{},{},{},{}",
                spec.k, spec.depth, f.omega, f.expected, f.relative_error, f.zero_crossings
            )?;
        }
        Ok(())
    })?;

    let worst = fits
        .iter()
        .map(|(_, _, f)| f.relative_error)
        .fold(0.0, f64::max);
    let mut checks = vec![CheckResult::new(
        "frequency",
        worst < FREQUENCY_TOL,
        format!("max relative frequency error {worst:e} < {FREQUENCY_TOL:e}"),
    )];
    let (g0, _, f0) = &fits[0];
    let scaling: Vec<f64> = fits[1..]
        .iter()
        .map(|(g, _, f)| ((f.omega / f0.omega) / (g / g0).sqrt() - 1.0).abs())
        .collect();
    let worst_scaling = scaling.iter().cloned().fold(0.0, f64::max);
    checks.push(CheckResult::new(
        "gravity_scaling",
        worst_scaling < GRAVITY_SCALING_TOL,
        format!(
            "max |(omega/omega0)/sqrt(g/g0) - 1| = {worst_scaling:e} < {GRAVITY_SCALING_TOL:e}"
        ),
    ));
    let results: Vec<_> = fits
        .iter()
        .map(|(g, dt, f)| json!({ "g": g, "dt": dt, "fit": f }))
        .collect();
    Ok(Outcome {
        checks: declared(cfg, checks),
        results: json!({ "steps": steps, "runs": results, "scaling_deviation": scaling }),
    })
}

pub fn rest_probe(cfg: &ExperimentConfig, out: &mut OutputDir) -> RunResult {
    let spec = cfg.probe.as_ref().expect("validated");
    let base = FluidGeometry::flat(spec.depth, spec.nx, spec.nz)?;
    let x = PeriodicGrid::new(spec.nx).points();
    let state0 = match spec.initial {
        InitialSurface::Zero => SurfaceState::zeros(spec.nx),
        InitialSurface::Bump => {
            let (c, w, a) = (
                spec.bump_center.expect("validated"),
                spec.bump_half_width.expect("validated"),
                spec.bump_amplitude.expect("validated"),
            );
            SurfaceState::new(
                x.iter().map(|&x| a * smooth_bump(x, c, w)).collect(),
                vec![0.0; spec.nx],
            )?
        }
    };
    let params = ProbeParams {
        base,
        g: spec.g,
        window: Window::new(spec.window[0], spec.window[1])?,
        tol: spec.tol,
        t_final: spec.t_final,
        dt: spec.dt,
    };
    let report = rest_propagation_probe(&state0, &params)?;
    out.write_with("probe.csv", |w| report.write_csv(w))?;
    out.write_with("initial_surface.ndjson", |w| {
        write_surface_states(w, std::slice::from_ref(&state0))
    })?;

    let zero = report.activity.iter().all(|&a| a == 0.0);
    let e0 = report.total_energy[0];
    let drift = report
        .total_energy
        .iter()
        .map(|e| (e - e0).abs())
        .fold(0.0, f64::max);
    let energy_ok = if e0 == 0.0 {
        drift == 0.0
    } else {
        drift <= ENERGY_DRIFT_TOL * e0.abs()
    };
    let checks = vec![
        CheckResult::new(
            "zero_activity",
            zero,
            format!(
                "max activity {:e}",
                report.activity.iter().cloned().fold(0.0, f64::max)
            ),
        ),
        CheckResult::new(
            "propagation",
            report.first_exceed.is_some(),
            format!(
                "first time activity exceeds {:e}: {:?}",
                spec.tol, report.first_exceed
            ),
        ),
        CheckResult::new(
            "energy",
            energy_ok,
            format!("max |E - E0| = {drift:e} vs {ENERGY_DRIFT_TOL:e} * E0 = {e0:e}"),
        ),
    ];
    Ok(Outcome {
        checks: declared(cfg, checks),
        results: json!({
            "steps": report.times.len() - 1,
            "first_exceed": report.first_exceed,
            "max_activity": report.activity.iter().cloned().fold(0.0, f64::max),
            "energy_initial": e0,
            "energy_max_drift": drift,
        }),
    })
}
