//! Free-surface potential flow over a periodic bottom in one horizontal
//! dimension.
//!
//! The fluid occupies `{-H0 + b(x) < z < η(x)}` on `x ∈ [0, 2π)`. The
//! Dirichlet-to-Neumann operator is computed by solving Laplace's equation
//! in sigma coordinates (see [`laplace`]); the Zakharov–Craig–Sulem evolution
//! and its probes live in [`zcs`].

pub mod laplace;
pub mod zcs;

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::periodic::PeriodicGrid;
use crate::{Error, Result};

pub use laplace::{dn_apply, harmonic_extend, LaplaceSolver, PotentialField};
pub use zcs::{
    linear_dispersion_check, rest_propagation_probe, smooth_bump, zcs_rhs, DispersionFit,
    LinearDispersionParams, ProbeParams, ProbeReport, ZcsModel,
};

/// Smallest vertical resolution accepted by the Laplace solver.
pub const MIN_NZ: usize = 8;
/// Smallest horizontal resolution accepted by the Laplace solver.
pub const MIN_NX: usize = 8;

/// Strip geometry sampled on `x_j = 2πj/nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidGeometry {
    h0: f64,
    b: Vec<f64>,
    eta: Vec<f64>,
    nz: usize,
    h_min: f64,
}

impl FluidGeometry {
    /// Validates `η - (-H0 + b) ≥ h_min > 0` and `-H0 + b < 0` pointwise.
    pub fn new(h0: f64, b: Vec<f64>, eta: Vec<f64>, nz: usize, h_min: f64) -> Result<Self> {
        if !(h0 > 0.0) || !h0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean depth H0 must be positive and finite, got {h0}"
            )));
        }
        if !(h_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h_min must be positive, got {h_min}"
            )));
        }
        if b.len() != eta.len() {
            return Err(Error::InvalidParameter(format!(
                "bottom has {} samples but surface has {}",
                b.len(),
                eta.len()
            )));
        }
        if b.len() < MIN_NX {
            return Err(Error::InvalidParameter(format!(
                "nx must be at least {MIN_NX}, got {}",
                b.len()
            )));
        }
        if nz < MIN_NZ {
            return Err(Error::InvalidParameter(format!(
                "nz must be at least {MIN_NZ}, got {nz}"
            )));
        }
        if b.iter().chain(&eta).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "geometry samples must be finite".into(),
            ));
        }
        for (index, (&bj, &ej)) in b.iter().zip(&eta).enumerate() {
            let bottom = -h0 + bj;
            if bottom >= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "bottom -H0 + b = {bottom} is not below z = 0 at index {index}"
                )));
            }
            let depth = ej - bottom;
            if depth < h_min {
                return Err(Error::DepthViolation {
                    depth,
                    index,
                    h_min,
                });
            }
        }
        Ok(Self {
            h0,
            b,
            eta,
            nz,
            h_min,
        })
    }

    /// Flat bottom and flat surface.
    pub fn flat(h0: f64, nx: usize, nz: usize) -> Result<Self> {
        Self::new(h0, vec![0.0; nx], vec![0.0; nx], nz, 1e-3 * h0)
    }

    /// The same bottom under a different surface.
    pub fn with_surface(&self, eta: Vec<f64>) -> Result<Self> {
        Self::new(self.h0, self.b.clone(), eta, self.nz, self.h_min)
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn bottom(&self) -> &[f64] {
        &self.b
    }

    pub fn surface(&self) -> &[f64] {
        &self.eta
    }

    pub fn nx(&self) -> usize {
        self.b.len()
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    /// Local depth `η + H0 - b`.
    pub fn depth(&self) -> Vec<f64> {
        self.eta
            .iter()
            .zip(&self.b)
            .map(|(e, b)| e + self.h0 - b)
            .collect()
    }
}

/// Surface elevation and surface potential on a shared periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceState {
    pub nx: usize,
    pub eta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SurfaceState {
    pub fn new(eta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if eta.len() != phi.len() {
            return Err(Error::InvalidParameter(format!(
                "eta has {} samples but phi has {}",
                eta.len(),
                phi.len()
            )));
        }
        if eta.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "surface state must be finite".into(),
            ));
        }
        Ok(Self {
            nx: eta.len(),
            eta,
            phi,
        })
    }

    pub fn zeros(nx: usize) -> Self {
        Self {
            nx,
            eta: vec![0.0; nx],
            phi: vec![0.0; nx],
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let h = 2.0 * std::f64::consts::PI / self.nx as f64;
        (0..self.nx).map(|j| j as f64 * h).collect()
    }

    pub fn to_ndjson(&self) -> String {
        serde_json::to_string(self).expect("surface state serializes")
    }

    pub fn from_ndjson(line: &str) -> Result<Self> {
        let raw: SurfaceState = serde_json::from_str(line)
            .map_err(|e| Error::InvalidParameter(format!("bad surface record: {e}")))?;
        if raw.nx != raw.eta.len() {
            return Err(Error::InvalidParameter(format!(
                "record declares nx = {} but has {} samples",
                raw.nx,
                raw.eta.len()
            )));
        }
        Self::new(raw.eta, raw.phi)
    }
}

pub fn write_surface_states<W: Write>(mut out: W, states: &[SurfaceState]) -> io::Result<()> {
    for s in states {
        writeln!(out, "{}", s.to_ndjson())?;
    }
    Ok(())
}

pub fn read_surface_states<R: BufRead>(input: R) -> Result<Vec<SurfaceState>> {
    let mut states = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::InvalidParameter(e.to_string()))?;
        if !line.trim().is_empty() {
            states.push(SurfaceState::from_ndjson(&line)?);
        }
    }
    Ok(states)
}

/// Closed interval `[x0, x1] ⊂ [0, 2π]` of the periodic axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    x0: f64,
    x1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64) -> Result<Self> {
        let two_pi = 2.0 * std::f64::consts::PI;
        if !(x0 < x1) || x0 < 0.0 || x1 > two_pi {
            return Err(Error::InvalidParameter(format!(
                "window [{x0}, {x1}] must be nondegenerate and inside [0, 2π]"
            )));
        }
        Ok(Self { x0, x1 })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.x0 <= x && x <= self.x1
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.x0, self.x1)
    }
}

/// Depth-`H` flat-strip DN symbol `|k| tanh(H|k|)`; `H = ∞` gives `|k|`.
pub fn dn_flat_symbol(k: i64, depth: f64) -> f64 {
    let k = k.unsigned_abs() as f64;
    if k == 0.0 {
        return 0.0;
    }
    // tanh(∞) = 1 covers infinite depth
    k * (depth * k).tanh()
}

/// `max_{x_j ∈ window} max(|η|, |∂_x φ|)`.
pub fn window_activity(state: &SurfaceState, window: &Window) -> f64 {
    let grid = PeriodicGrid::new(state.nx);
    let phi_x = grid.derivative(&state.phi);
    state
        .points()
        .iter()
        .enumerate()
        .filter(|(_, &x)| window.contains(x))
        .map(|(j, _)| state.eta[j].abs().max(phi_x[j].abs()))
        .fold(0.0, f64::max)
}

/// True iff `η` and `∂_x φ` are both within `tol` at every grid point of the window.
pub fn at_rest(state: &SurfaceState, window: &Window, tol: f64) -> bool {
    window_activity(state, window) <= tol
}

/// `B` and both readings of the horizontal velocity, pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BAndV {
    /// `(η_x φ_x - Gφ)/(1 + η_x²)`.
    pub b: Vec<f64>,
    /// `φ_x - B φ_x`.
    pub v_printed: Vec<f64>,
    /// `φ_x - B η_x`.
    pub v_standard: Vec<f64>,
}

pub fn b_and_v(state: &SurfaceState, g_phi: &[f64]) -> Result<BAndV> {
    if g_phi.len() != state.nx {
        return Err(Error::InvalidParameter(format!(
            "Gφ has {} samples but the state has {}",
            g_phi.len(),
            state.nx
        )));
    }
    let grid = PeriodicGrid::new(state.nx);
    let eta_x = grid.derivative(&state.eta);
    let phi_x = grid.derivative(&state.phi);
    let b: Vec<f64> = (0..state.nx)
        .map(|j| (eta_x[j] * phi_x[j] - g_phi[j]) / (1.0 + eta_x[j] * eta_x[j]))
        .collect();
    let v_printed = (0..state.nx).map(|j| phi_x[j] - b[j] * phi_x[j]).collect();
    let v_standard = (0..state.nx).map(|j| phi_x[j] - b[j] * eta_x[j]).collect();
    Ok(BAndV {
        b,
        v_printed,
        v_standard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn flat_symbol_examples() {
        assert_eq!(dn_flat_symbol(1, f64::INFINITY), 1.0);
        assert_eq!(dn_flat_symbol(0, 3.0), 0.0);
        assert_eq!(dn_flat_symbol(0, f64::INFINITY), 0.0);
        assert_abs_diff_eq!(dn_flat_symbol(2, 1.0), 1.928055160151634, epsilon = 1e-14);
        assert_eq!(dn_flat_symbol(-2, 1.0), dn_flat_symbol(2, 1.0));
    }

    #[test]
    fn flat_symbol_matches_separated_solution() {
        // Φ = cos(kx) cosh(k(z+H))/cosh(kH) has Φ_z(0) = k tanh(kH) cos(kx)
        let (k, h) = (3_i64, 0.7);
        let kf = k as f64;
        let dz = 1e-6;
        let phi = |z: f64| (kf * (z + h)).cosh() / (kf * h).cosh();
        let numeric = (phi(dz) - phi(-dz)) / (2.0 * dz);
        assert_abs_diff_eq!(dn_flat_symbol(k, h), numeric, epsilon = 1e-8);
    }

    #[test]
    fn geometry_validation() {
        assert!(FluidGeometry::flat(1.0, 16, 8).is_ok());
        assert!(FluidGeometry::flat(1.0, 16, 4).is_err());
        assert!(FluidGeometry::flat(-1.0, 16, 8).is_err());
        let deep_dip = FluidGeometry::new(1.0, vec![0.0; 16], vec![-0.9995; 16], 8, 1e-3);
        assert!(matches!(deep_dip, Err(Error::DepthViolation { .. })));
        let dry = FluidGeometry::new(1.0, vec![1.5; 16], vec![2.0; 16], 8, 1e-3);
        assert!(matches!(dry, Err(Error::InvalidParameter(_))));
        assert!(FluidGeometry::new(1.0, vec![0.0; 16], vec![0.0; 15], 8, 1e-3).is_err());
    }

    #[test]
    fn at_rest_examples() {
        let nx = 64;
        let window = Window::new(PI / 2.0 - 0.05, PI / 2.0 + 0.05).unwrap();
        assert!(at_rest(
            &SurfaceState::zeros(nx),
            &window,
            f64::MIN_POSITIVE
        ));

        let constant = SurfaceState::new(vec![0.0; nx], vec![5.0; nx]).unwrap();
        assert!(at_rest(&constant, &window, 1e-12));

        // a grid fine enough to put several points inside the width-0.1 window
        let fine = 256;
        let eps = 1e-3;
        let wave = SurfaceState::new(
            SurfaceState::zeros(fine)
                .points()
                .iter()
                .map(|x| eps * x.cos())
                .collect(),
            vec![0.0; fine],
        )
        .unwrap();
        assert!(!at_rest(&wave, &window, 1e-6));
        assert!(Window::new(1.0, 1.0).is_err());
    }

    #[test]
    fn b_and_v_examples() {
        let nx = 32;
        let zero = SurfaceState::zeros(nx);
        let out = b_and_v(&zero, &vec![0.0; nx]).unwrap();
        assert!(out
            .b
            .iter()
            .chain(&out.v_printed)
            .chain(&out.v_standard)
            .all(|&v| v == 0.0));

        let x = zero.points();
        let t1 = 1.0_f64.tanh();
        let state = SurfaceState::new(vec![0.0; nx], x.iter().map(|x| x.cos()).collect()).unwrap();
        let g_phi: Vec<f64> = x.iter().map(|x| t1 * x.cos()).collect();
        let out = b_and_v(&state, &g_phi).unwrap();
        for (j, &xj) in x.iter().enumerate() {
            assert_abs_diff_eq!(out.b[j], -t1 * xj.cos(), epsilon = 1e-14);
            assert_abs_diff_eq!(
                out.v_printed[j],
                (1.0 + t1 * xj.cos()) * (-xj.sin()),
                epsilon = 1e-13
            );
            assert_abs_diff_eq!(out.v_standard[j], -xj.sin(), epsilon = 1e-13);
        }
        assert!(b_and_v(&state, &g_phi[1..]).is_err());
    }

    #[test]
    fn b_collapses_where_surface_is_flat() {
        let nx = 32;
        let x = SurfaceState::zeros(nx).points();
        // η = 0.1 cos x has η_x = 0 at x = 0
        let state = SurfaceState::new(
            x.iter().map(|x| 0.1 * x.cos()).collect(),
            x.iter().map(|x| (2.0 * x).sin()).collect(),
        )
        .unwrap();
        let g_phi: Vec<f64> = x.iter().map(|x| 0.3 + x.sin()).collect();
        let out = b_and_v(&state, &g_phi).unwrap();
        assert_abs_diff_eq!(out.b[0], -g_phi[0], epsilon = 1e-13);
    }

    #[test]
    fn surface_state_round_trip() {
        let s = SurfaceState::new(vec![0.1, -0.25, 3.0e-17], vec![1.0, 2.0, -0.5]).unwrap();
        let line = s.to_ndjson();
        assert!(line.starts_with("{\"nx\":3,"));
        assert_eq!(SurfaceState::from_ndjson(&line).unwrap(), s);
        assert!(SurfaceState::from_ndjson("{\"nx\":2,\"eta\":[0.0],\"phi\":[0.0]}").is_err());
    }
}
