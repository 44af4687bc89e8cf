//! Zakharov–Craig–Sulem evolution of `(η, φ)`:
//!
//! ```text
//! η_t = Gφ
//! φ_t = -gη - ½φ_x² + (Gφ + φ_x η_x)² / (2(1 + η_x²))
//! ```
//!
//! with `G = G(η, b)` recomputed on the instantaneous geometry.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{window_activity, FluidGeometry, LaplaceSolver, SurfaceState, Window};
use crate::{Error, Result};

/// Right-hand side evaluator with a reusable Laplace workspace.
#[derive(Debug, Clone)]
pub struct ZcsModel {
    base: FluidGeometry,
    g: f64,
    solver: LaplaceSolver,
}

impl ZcsModel {
    /// `base` fixes `H0`, `b`, `nz` and `h_min`; its surface is ignored.
    pub fn new(base: FluidGeometry, g: f64) -> Result<Self> {
        if !g.is_finite() || g < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gravity must be finite and non-negative, got {g}"
            )));
        }
        Ok(Self {
            base,
            g,
            solver: LaplaceSolver::new(),
        })
    }

    pub fn gravity(&self) -> f64 {
        self.g
    }

    pub fn nx(&self) -> usize {
        self.base.nx()
    }

    /// Geometry under surface `eta`; fails with a depth violation near the bottom.
    pub fn geometry(&self, eta: &[f64]) -> Result<FluidGeometry> {
        self.base.with_surface(eta.to_vec())
    }

    fn check_shape(&self, state: &SurfaceState) -> Result<()> {
        if state.nx != self.nx() {
            return Err(Error::InvalidParameter(format!(
                "state has {} samples, model grid has {}",
                state.nx,
                self.nx()
            )));
        }
        Ok(())
    }

    pub fn dn(&mut self, state: &SurfaceState) -> Result<Vec<f64>> {
        self.check_shape(state)?;
        let geom = self.geometry(&state.eta)?;
        self.solver.dn_apply(&geom, &state.phi)
    }

    /// `(η_t, φ_t)`.
    pub fn rhs(&mut self, state: &SurfaceState) -> Result<(Vec<f64>, Vec<f64>)> {
        let g_phi = self.dn(state)?;
        let grid = self.solver.grid(state.nx);
        let eta_x = grid.derivative(&state.eta);
        let phi_x = grid.derivative(&state.phi);
        let phi_t = (0..state.nx)
            .map(|j| {
                let coupling = g_phi[j] + phi_x[j] * eta_x[j];
                -self.g * state.eta[j] - 0.5 * phi_x[j] * phi_x[j]
                    + coupling * coupling / (2.0 * (1.0 + eta_x[j] * eta_x[j]))
            })
            .collect();
        Ok((g_phi, phi_t))
    }

    /// `½ Σ (φ Gφ + g η²) Δx`.
    pub fn energy(&mut self, state: &SurfaceState) -> Result<f64> {
        let g_phi = self.dn(state)?;
        let dx = 2.0 * std::f64::consts::PI / state.nx as f64;
        let sum: f64 = (0..state.nx)
            .map(|j| state.phi[j] * g_phi[j] + self.g * state.eta[j] * state.eta[j])
            .sum();
        Ok(0.5 * sum * dx)
    }

    /// One classical RK4 step, optionally dealiasing each stage derivative.
    pub fn rk4_step(
        &mut self,
        state: &SurfaceState,
        dt: f64,
        dealias: bool,
    ) -> Result<SurfaceState> {
        let nx = state.nx;
        let stage = |model: &mut Self, s: &SurfaceState| -> Result<(Vec<f64>, Vec<f64>)> {
            let (et, pt) = model.rhs(s)?;
            if dealias {
                let grid = model.solver.grid(nx);
                Ok((grid.dealias(&et), grid.dealias(&pt)))
            } else {
                Ok((et, pt))
            }
        };
        let shift = |s: &SurfaceState, d: &(Vec<f64>, Vec<f64>), h: f64| SurfaceState {
            nx,
            eta: s.eta.iter().zip(&d.0).map(|(a, b)| a + h * b).collect(),
            phi: s.phi.iter().zip(&d.1).map(|(a, b)| a + h * b).collect(),
        };
        let k1 = stage(self, state)?;
        let k2 = stage(self, &shift(state, &k1, 0.5 * dt))?;
        let k3 = stage(self, &shift(state, &k2, 0.5 * dt))?;
        let k4 = stage(self, &shift(state, &k3, dt))?;
        let combine = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..nx)
                .map(|j| x[j] + dt / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]))
                .collect()
        };
        let next = SurfaceState {
            nx,
            eta: combine(&state.eta, &k1.0, &k2.0, &k3.0, &k4.0),
            phi: combine(&state.phi, &k1.1, &k2.1, &k3.1, &k4.1),
        };
        if next.eta.iter().chain(&next.phi).any(|v| !v.is_finite()) {
            return Err(Error::Instability {
                time: f64::NAN,
                initial: l2(state),
                current: f64::INFINITY,
            });
        }
        Ok(next)
    }
}

fn l2(state: &SurfaceState) -> f64 {
    state
        .eta
        .iter()
        .chain(&state.phi)
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// `(η_t, φ_t)` for `state` over the bottom of `base`.
pub fn zcs_rhs(state: &SurfaceState, base: &FluidGeometry, g: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    ZcsModel::new(base.clone(), g)?.rhs(state)
}

/// Inputs of the small-amplitude frequency measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearDispersionParams {
    pub k: i64,
    pub depth: f64,
    pub g: f64,
    pub amplitude: f64,
    pub steps: usize,
    pub dt: f64,
    pub nx: usize,
    pub nz: usize,
}

impl LinearDispersionParams {
    /// `√(g k tanh(kH))`.
    pub fn linear_frequency(&self) -> f64 {
        let k = self.k as f64;
        (self.g * k * (k * self.depth).tanh()).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionFit {
    pub omega: f64,
    pub expected: f64,
    pub relative_error: f64,
    pub zero_crossings: usize,
    pub simulated_time: f64,
}

/// Evolves `(ε cos kx, 0)` over a flat bottom and measures the frequency of
/// the `cos kx` amplitude of `η` from its zero crossings.
pub fn linear_dispersion_check(p: &LinearDispersionParams) -> Result<DispersionFit> {
    if p.k < 1 || p.k as usize >= p.nx / 2 {
        return Err(Error::Precondition(format!(
            "mode k = {} is not resolved by nx = {}",
            p.k, p.nx
        )));
    }
    if !(p.amplitude > 0.0 && p.amplitude <= 1e-6) {
        return Err(Error::Precondition(format!(
            "amplitude must lie in (0, 1e-6], got {}",
            p.amplitude
        )));
    }
    if !(p.g > 0.0) || !(p.depth > 0.0) || !(p.dt > 0.0) {
        return Err(Error::Precondition(
            "g, depth and dt must be positive".into(),
        ));
    }
    let expected = p.linear_frequency();
    // rounding slack so that dt = 0.05/ω itself is accepted
    if p.dt * expected > 0.05 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "dt·ω = {} exceeds 0.05",
            p.dt * expected
        )));
    }

    let base = FluidGeometry::flat(p.depth, p.nx, p.nz)?;
    let mut model = ZcsModel::new(base, p.g)?;
    let grid = crate::periodic::PeriodicGrid::new(p.nx);
    let x = grid.points();
    let mut state = SurfaceState::new(
        x.iter()
            .map(|x| p.amplitude * (p.k as f64 * x).cos())
            .collect(),
        vec![0.0; p.nx],
    )?;

    let mut crossings = Vec::new();
    let mut prev = grid.cosine_amplitude(&state.eta, p.k);
    for n in 0..p.steps {
        state = model.rk4_step(&state, p.dt, false)?;
        let cur = grid.cosine_amplitude(&state.eta, p.k);
        if prev != 0.0 && (cur == 0.0 || prev.signum() != cur.signum()) {
            crossings.push(p.dt * (n as f64 + prev / (prev - cur)));
        }
        prev = cur;
    }
    let simulated_time = p.steps as f64 * p.dt;
    // four crossings span at least one and a half periods
    if crossings.len() < 4 {
        return Err(Error::FitFailure(format!(
            "only {} zero crossings in t = {simulated_time}; simulate at least two periods",
            crossings.len()
        )));
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    let omega = std::f64::consts::PI * (crossings.len() - 1) as f64 / span;
    Ok(DispersionFit {
        omega,
        expected,
        relative_error: (omega - expected).abs() / expected,
        zero_crossings: crossings.len(),
        simulated_time,
    })
}

/// Inputs of the rest-propagation probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeParams {
    pub base: FluidGeometry,
    pub g: f64,
    pub window: Window,
    /// Rest tolerance at `t = 0` and the activity threshold afterwards.
    pub tol: f64,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub times: Vec<f64>,
    pub activity: Vec<f64>,
    pub total_energy: Vec<f64>,
    /// First recorded time with `activity > tol`.
    pub first_exceed: Option<f64>,
}

impl ProbeReport {
    /// CSV with header `t,activity,total_energy`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,activity,total_energy")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{}",
                self.times[i], self.activity[i], self.total_energy[i]
            )?;
        }
        Ok(())
    }
}

/// Evolves a state that is at rest on the window and records the window
/// activity `max(|η|, |φ_x|)` and the total energy after every step.
pub fn rest_propagation_probe(state0: &SurfaceState, p: &ProbeParams) -> Result<ProbeReport> {
    if state0.nx != p.base.nx() {
        return Err(Error::InvalidParameter(format!(
            "state has {} samples, geometry has {}",
            state0.nx,
            p.base.nx()
        )));
    }
    if !(p.dt > 0.0) || !(p.t_final > 0.0) || !(p.tol >= 0.0) {
        return Err(Error::InvalidParameter(
            "dt, t_final must be positive and tol non-negative".into(),
        ));
    }
    let initial_activity = window_activity(state0, &p.window);
    if initial_activity > p.tol {
        return Err(Error::Precondition(format!(
            "initial state is not at rest on the window: activity {initial_activity:e} > tol {:e}",
            p.tol
        )));
    }
    let mut model = ZcsModel::new(p.base.clone(), p.g)?;
    let steps = (p.t_final / p.dt).round() as usize;
    let initial_norm = l2(state0);

    let mut report = ProbeReport {
        times: vec![0.0],
        activity: vec![initial_activity],
        total_energy: vec![model.energy(state0)?],
        first_exceed: None,
    };
    let mut state = state0.clone();
    for n in 1..=steps {
        let t = n as f64 * p.dt;
        state = model.rk4_step(&state, p.dt, true).map_err(|e| match e {
            Error::Instability {
                initial, current, ..
            } => Error::Instability {
                time: t,
                initial,
                current,
            },
            other => other,
        })?;
        let norm = l2(&state);
        if norm > 10.0 * initial_norm {
            return Err(Error::Instability {
                time: t,
                initial: initial_norm,
                current: norm,
            });
        }
        let activity = window_activity(&state, &p.window);
        if report.first_exceed.is_none() && activity > p.tol {
            report.first_exceed = Some(t);
        }
        report.times.push(t);
        report.activity.push(activity);
        report.total_energy.push(model.energy(&state)?);
    }
    Ok(report)
}

/// `exp(-1/(1 - s²))` for `|s| < 1`, zero otherwise.
pub fn smooth_bump(x: f64, center: f64, half_width: f64) -> f64 {
    let s = (x - center) / half_width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}
