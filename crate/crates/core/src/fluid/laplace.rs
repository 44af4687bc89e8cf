//! Harmonic extension of surface data into the fluid strip.
//!
//! The strip is mapped to a rectangle by `z = z_b(x) + σ h(x)` with
//! `z_b = -H0 + b`, `h = η + H0 - b` and `σ ∈ [0, 1]`. In `(x, σ)` Laplace's
//! equation for `ψ(x, σ) = Φ(x, z)` reads
//!
//! ```text
//! ψ_xx + 2σ_x ψ_xσ + (σ_x² + 1/h²) ψ_σσ + σ_xx ψ_σ = 0,
//! σ_x  = -(z_b' + σh')/h,   σ_xx = -(z_b'' + σh'' + 2σ_x h')/h,
//! ```
//!
//! with `ψ = φ` at `σ = 1` and `((1 + z_b'²)/h) ψ_σ - z_b' ψ_x = 0` at
//! `σ = 0`. Vertical differences are second order, which sets the order of
//! the scheme. Horizontal differences are fourth order: with second-order
//! ones the horizontal truncation error dominated, and it is what breaks the
//! symmetry of the discrete DN map on variable geometry. Metric terms are
//! differentiated spectrally. Unknown `(i, j)` for `j < nz - 1` sits at index
//! `j·nx + i`.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::FluidGeometry;
use crate::periodic::PeriodicGrid;
use crate::{Error, Result};

/// Relative residual accepted from the solve.
pub const SOLVER_TOLERANCE: f64 = 1e-10;
/// Relative residual at which refinement stops early.
const REFINEMENT_TARGET: f64 = 1e-14;

/// Discrete potential on the `nx × nz` sigma grid, top row included.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    nx: usize,
    nz: usize,
    values: Vec<f64>,
    residual: f64,
}

impl PotentialField {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Value at `x_i`, `σ_j = j/(nz - 1)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Row `σ_j`.
    pub fn level(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    /// Max-norm residual of the row-normalised discrete system.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Reusable solver workspace.
///
/// The sparsity pattern depends only on the grid, so the symbolic
/// factorization is kept between geometries of equal size. The last numeric
/// factorization is kept too and used to precondition iterative refinement on
/// the next geometry; it is replaced when refinement contracts too slowly.
/// Results therefore depend on the sequence of solves, which is deterministic.
#[derive(Debug, Clone, Default)]
pub struct LaplaceSolver {
    symbolic: Option<((usize, usize), SymbolicLu<usize>)>,
    numeric: Option<((usize, usize), Lu<usize, f64>)>,
    grid: Option<PeriodicGrid>,
}

/// Refinement sweeps before a stale factorization is abandoned.
const MAX_SWEEPS: usize = 8;
/// Required residual reduction per sweep with a stale factorization.
const MIN_CONTRACTION: f64 = 0.1;

struct System {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl System {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x)
            .iter()
            .zip(&self.rhs)
            .map(|(ax, b)| b - ax)
            .collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn lu_solve(lu: &Lu<usize, f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut col = Mat::from_fn(n, 1, |i, _| b[i]);
    lu.solve_in_place(col.as_mut());
    (0..n).map(|i| col[(i, 0)]).collect()
}

/// Iterative refinement `x ← x + LU⁻¹(b - Ax)`.
///
/// With `sweeps = Some(s)` exactly `s` corrections follow the initial solve.
/// Otherwise sweeps continue until the residual reaches `target` or stops
/// contracting by [`MIN_CONTRACTION`]; the result is rejected unless the
/// residual ended within `10·target`.
fn refine(
    lu: &Lu<usize, f64>,
    sys: &System,
    sweeps: Option<usize>,
    target: f64,
) -> Option<(Vec<f64>, f64)> {
    let mut x = lu_solve(lu, &sys.rhs);
    let mut r = sys.residual(&x);
    let mut norm = max_abs(&r);
    if let Some(count) = sweeps {
        for _ in 0..count {
            let dx = lu_solve(lu, &r);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            r = sys.residual(&x);
            norm = max_abs(&r);
        }
        return Some((x, norm));
    }
    for _ in 0..MAX_SWEEPS {
        if norm <= target {
            break;
        }
        let dx = lu_solve(lu, &r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let r_next = sys.residual(&candidate);
        let next = max_abs(&r_next);
        if next > MIN_CONTRACTION * norm {
            break;
        }
        x = candidate;
        r = r_next;
        norm = next;
    }
    (norm <= 10.0 * target).then_some((x, norm))
}

impl LaplaceSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn grid(&mut self, nx: usize) -> &PeriodicGrid {
        if self.grid.as_ref().map(PeriodicGrid::len) != Some(nx) {
            self.grid = Some(PeriodicGrid::new(nx));
        }
        self.grid.as_ref().expect("grid just set")
    }

    fn assemble(&mut self, geom: &FluidGeometry, phi: &[f64]) -> System {
        let nx = geom.nx();
        let m = geom.nz() - 1;
        let dx = 2.0 * std::f64::consts::PI / nx as f64;
        let ds = 1.0 / m as f64;

        let h = geom.depth();
        let grid = self.grid(nx);
        let hx = grid.derivative(&h);
        let hxx = grid.second_derivative(&h);
        let zbx = grid.derivative(geom.bottom());
        let zbxx = grid.second_derivative(geom.bottom());

        let idx = |i: usize, j: usize| j * nx + i;
        let mut rows = Vec::with_capacity(m * nx);
        let mut rhs = vec![0.0; m * nx];

        // fourth-order periodic stencils: offsets -2..=2
        const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        const D2: [f64; 5] = [
            -1.0 / 12.0,
            16.0 / 12.0,
            -30.0 / 12.0,
            16.0 / 12.0,
            -1.0 / 12.0,
        ];
        let shift = |i: usize, o: usize| (i + nx + o - 2) % nx;

        // bottom: a ψ_σ + c ψ_x = 0
        for i in 0..nx {
            let a = (1.0 + zbx[i] * zbx[i]) / h[i] / (2.0 * ds);
            let c = -zbx[i] / dx;
            let scale = 1.0 / (3.0 * a);
            let mut row = vec![
                (idx(i, 0), -3.0 * a * scale),
                (idx(i, 1), 4.0 * a * scale),
                (idx(i, 2), -a * scale),
            ];
            for (o, w) in D1.iter().enumerate() {
                if *w != 0.0 {
                    row.push((idx(shift(i, o), 0), c * w * scale));
                }
            }
            rows.push(row);
        }

        for j in 1..m {
            let sigma = j as f64 * ds;
            for i in 0..nx {
                let sx = -(zbx[i] + sigma * hx[i]) / h[i];
                let sxx = -(zbxx[i] + sigma * hxx[i] + 2.0 * sx * hx[i]) / h[i];
                let a = sx * sx + 1.0 / (h[i] * h[i]);
                let cx = 1.0 / (dx * dx);
                let cs = a / (ds * ds);
                let cd = sxx / (2.0 * ds);
                let cc = 2.0 * sx / (dx * 2.0 * ds);
                let diag = D2[2] * cx - 2.0 * cs;
                let scale = 1.0 / diag.abs();
                let mut stencil = Vec::with_capacity(14);
                stencil.push((i, j, diag));
                stencil.push((i, j - 1, cs - cd));
                stencil.push((i, j + 1, cs + cd));
                for o in [0, 1, 3, 4] {
                    let ii = shift(i, o);
                    stencil.push((ii, j, D2[o] * cx));
                    // ψ_xσ = D_x (ψ_{j+1} - ψ_{j-1}) / 2ds
                    stencil.push((ii, j + 1, D1[o] * cc));
                    stencil.push((ii, j - 1, -D1[o] * cc));
                }
                let row_index = idx(i, j);
                let mut row = Vec::with_capacity(stencil.len());
                for (ii, jj, v) in stencil {
                    if jj == m {
                        rhs[row_index] -= v * scale * phi[ii];
                    } else {
                        row.push((idx(ii, jj), v * scale));
                    }
                }
                rows.push(row);
            }
        }
        System { rows, rhs }
    }

    fn factor(&mut self, nx: usize, nz: usize, sys: &System) -> Result<Lu<usize, f64>> {
        let n = sys.rows.len();
        let triplets: Vec<Triplet<usize, usize, f64>> = sys
            .rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| Triplet::new(r, c, v)))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::SingularSystem(format!("cannot assemble Laplace matrix: {e:?}")))?;
        let symbolic = match &self.symbolic {
            Some((shape, s)) if *shape == (nx, nz) => s.clone(),
            _ => {
                let s = SymbolicLu::try_new(mat.symbolic()).map_err(|e| {
                    Error::SingularSystem(format!("symbolic factorization failed: {e:?}"))
                })?;
                self.symbolic = Some(((nx, nz), s.clone()));
                s
            }
        };
        Lu::try_new_with_symbolic(symbolic, mat.as_ref())
            .map_err(|e| Error::SingularSystem(format!("LU factorization failed: {e:?}")))
    }

    /// Solves for the potential with surface trace `phi`.
    pub fn harmonic_extend(&mut self, geom: &FluidGeometry, phi: &[f64]) -> Result<PotentialField> {
        let (nx, nz) = (geom.nx(), geom.nz());
        if phi.len() != nx {
            return Err(Error::InvalidParameter(format!(
                "surface potential has {} samples, geometry has {nx}",
                phi.len()
            )));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "surface potential must be finite".into(),
            ));
        }
        let m = nz - 1;
        let mut values = vec![0.0; nz * nx];
        values[m * nx..].copy_from_slice(phi);
        if phi.iter().all(|&v| v == 0.0) {
            return Ok(PotentialField {
                nx,
                nz,
                values,
                residual: 0.0,
            });
        }

        let sys = self.assemble(geom, phi);
        let tol = SOLVER_TOLERANCE * max_abs(phi);
        let target = REFINEMENT_TARGET * max_abs(phi);

        let reused = match &self.numeric {
            Some((shape, lu)) if *shape == (nx, nz) => refine(lu, &sys, None, target),
            _ => None,
        };
        let (x, residual) = match reused {
            Some(found) => found,
            None => {
                let lu = self.factor(nx, nz, &sys)?;
                let fresh =
                    refine(&lu, &sys, Some(1), target).expect("fixed sweep count always returns");
                self.numeric = Some(((nx, nz), lu));
                fresh
            }
        };
        if !(residual <= tol) {
            return Err(Error::NotConverged {
                what: "sigma-coordinate Laplace solve".into(),
                residual,
            });
        }
        values[..m * nx].copy_from_slice(&x);
        Ok(PotentialField {
            nx,
            nz,
            values,
            residual,
        })
    }

    /// `G(η, b)φ = (1 + η_x²) ψ_σ/h - η_x φ_x` at the surface.
    pub fn dn_apply(&mut self, geom: &FluidGeometry, phi: &[f64]) -> Result<Vec<f64>> {
        let field = self.harmonic_extend(geom, phi)?;
        Ok(self.normal_derivative(geom, &field))
    }

    pub fn normal_derivative(&mut self, geom: &FluidGeometry, field: &PotentialField) -> Vec<f64> {
        let nx = geom.nx();
        let m = geom.nz() - 1;
        let ds = 1.0 / m as f64;
        let h = geom.depth();
        let grid = self.grid(nx);
        let top = field.level(m);
        let eta_x = grid.derivative(geom.surface());
        let phi_x = grid.derivative(top);
        let below = field.level(m - 1);
        let below2 = field.level(m - 2);
        (0..nx)
            .map(|i| {
                let psi_s = (3.0 * top[i] - 4.0 * below[i] + below2[i]) / (2.0 * ds);
                (1.0 + eta_x[i] * eta_x[i]) * psi_s / h[i] - eta_x[i] * phi_x[i]
            })
            .collect()
    }
}

/// One-shot harmonic extension with a fresh workspace.
pub fn harmonic_extend(geom: &FluidGeometry, phi: &[f64]) -> Result<PotentialField> {
    LaplaceSolver::new().harmonic_extend(geom, phi)
}

/// One-shot DN application with a fresh workspace.
pub fn dn_apply(geom: &FluidGeometry, phi: &[f64]) -> Result<Vec<f64>> {
    LaplaceSolver::new().dn_apply(geom, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::dn_flat_symbol;
    use approx::assert_abs_diff_eq;

    fn cosine(nx: usize, k: f64) -> Vec<f64> {
        let dx = 2.0 * std::f64::consts::PI / nx as f64;
        (0..nx).map(|i| (k * i as f64 * dx).cos()).collect()
    }

    fn flat_dn_error(n: usize, k: i64, depth: f64) -> f64 {
        let geom = FluidGeometry::flat(depth, n, n).unwrap();
        let out = dn_apply(&geom, &cosine(n, k as f64)).unwrap();
        let amp = PeriodicGrid::new(n).cosine_amplitude(&out, k);
        (amp - dn_flat_symbol(k, depth)).abs()
    }

    #[test]
    fn constants_extend_to_constants() {
        let geom = FluidGeometry::flat(1.0, 32, 16).unwrap();
        let field = harmonic_extend(&geom, &[1.0; 32]).unwrap();
        for j in 0..16 {
            for i in 0..32 {
                assert_abs_diff_eq!(field.get(i, j), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn flat_extension_matches_separated_solution() {
        let (nx, nz, depth, k) = (64, 64, 1.0, 2.0);
        let geom = FluidGeometry::flat(depth, nx, nz).unwrap();
        let field = harmonic_extend(&geom, &cosine(nx, k)).unwrap();
        let dx = 2.0 * std::f64::consts::PI / nx as f64;
        let mut worst: f64 = 0.0;
        for j in 0..nz {
            let z = -depth + depth * j as f64 / (nz - 1) as f64;
            for i in 0..nx {
                let exact =
                    (k * i as f64 * dx).cos() * (k * (z + depth)).cosh() / (k * depth).cosh();
                worst = worst.max((field.get(i, j) - exact).abs());
            }
        }
        assert!(worst < 5e-3, "max error {worst}");
        // bottom trace ≈ cos(kx)/cosh(kH)
        let bottom_amp = PeriodicGrid::new(nx).cosine_amplitude(field.level(0), 2);
        assert_abs_diff_eq!(bottom_amp, 1.0 / (k * depth).cosh(), epsilon = 5e-3);
    }

    #[test]
    fn flat_dn_converges_at_second_order() {
        let e1 = flat_dn_error(32, 2, 1.0);
        let e2 = flat_dn_error(64, 2, 1.0);
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "errors {e1} {e2}");
    }

    #[test]
    fn dn_of_constant_vanishes_on_variable_geometry() {
        let nx = 64;
        let x: Vec<f64> = (0..nx)
            .map(|i| i as f64 * 2.0 * std::f64::consts::PI / nx as f64)
            .collect();
        let b: Vec<f64> = x.iter().map(|x| 0.1 * (2.0 * x).sin()).collect();
        let eta: Vec<f64> = x.iter().map(|x| 0.05 * x.cos()).collect();
        let geom = FluidGeometry::new(1.0, b, eta, 32, 1e-3).unwrap();
        let out = dn_apply(&geom, &vec![2.5; nx]).unwrap();
        assert!(max_abs(&out) < 1e-9, "{}", max_abs(&out));
    }

    #[test]
    fn workspace_reuse_is_deterministic() {
        let n = 32;
        let flat = FluidGeometry::flat(1.0, n, 16).unwrap();
        let dx = 2.0 * std::f64::consts::PI / n as f64;
        let wavy = flat
            .with_surface((0..n).map(|i| 1e-4 * (i as f64 * dx).sin()).collect())
            .unwrap();
        let phi = cosine(n, 3.0);
        let run = || {
            let mut solver = LaplaceSolver::new();
            let a = solver.dn_apply(&flat, &phi).unwrap();
            let b = solver.dn_apply(&wavy, &phi).unwrap();
            let c = solver.dn_apply(&flat, &phi).unwrap();
            (a, b, c)
        };
        let (a, b, c) = run();
        assert_eq!((a.clone(), b.clone(), c.clone()), run());
        // the reused factorization agrees with fresh solves to round-off
        let fresh_b = dn_apply(&wavy, &phi).unwrap();
        for (u, v) in b.iter().zip(&fresh_b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
        for (u, v) in c.iter().zip(&a) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn stale_factorization_is_replaced() {
        let n = 32;
        let dx = 2.0 * std::f64::consts::PI / n as f64;
        let deep = FluidGeometry::flat(3.0, n, 16).unwrap();
        let bumpy = FluidGeometry::new(
            1.0,
            (0..n).map(|i| 0.3 * (i as f64 * dx).cos()).collect(),
            vec![0.0; n],
            16,
            1e-3,
        )
        .unwrap();
        let phi = cosine(n, 2.0);
        let mut solver = LaplaceSolver::new();
        solver.dn_apply(&deep, &phi).unwrap();
        let reused = solver.harmonic_extend(&bumpy, &phi).unwrap();
        assert!(reused.residual() <= SOLVER_TOLERANCE);
        let fresh = harmonic_extend(&bumpy, &phi).unwrap();
        for j in 0..16 {
            for i in 0..n {
                assert_abs_diff_eq!(reused.get(i, j), fresh.get(i, j), epsilon = 1e-12);
            }
        }
    }
}
