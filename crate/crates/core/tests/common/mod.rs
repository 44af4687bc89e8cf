//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucp_core::dispersion::DispersionRelation;
use ucp_core::observability::{GramMatrix, SpaceTimeDomain};
use ucp_core::spectral::FourierState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(rng: &mut ChaCha8Rng, truncation: usize) -> FourierState {
    FourierState::from_fn(truncation, |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations, ascending.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(g: &GramMatrix) -> Vec<f64> {
    let n = g.dim();
    let mut a: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| g.get(i, j)).collect())
        .collect();
    let frob: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane
                let phase = apq / mag;
                let theta = (a[q][q].re - a[p][p].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * jpp + y * jqp;
                    row[q] = x * jpq + y * jqq;
                }
                for j in 0..n {
                    let (x, y) = (a[p][j], a[q][j]);
                    a[p][j] = jpp.conj() * x + jqp.conj() * y;
                    a[q][j] = jpq.conj() * x + jqq.conj() * y;
                }
                a[p][q] = Complex64::new(0.0, 0.0);
                a[q][p] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i].re).collect();
    ev.sort_by(f64::total_cmp);
    ev
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
        // u(x, t) = Σ_k (a_k e^{ikx}) e^{-iω_k t}
        let ex: Vec<Vec<Complex64>> = (0..m)
            .map(|i| {
                let x = r.x0 + (i as f64 + 0.5) * hx;
                modes
                    .iter()
                    .map(|&(k, _, c)| c * Complex64::cis(k * x))
                    .collect()
            })
            .collect();
        let et: Vec<Vec<Complex64>> = (0..m)
            .map(|j| {
                let t = r.t0 + (j as f64 + 0.5) * ht;
                modes
                    .iter()
                    .map(|&(_, w, _)| Complex64::cis(-w * t))
                    .collect()
            })
            .collect();
        let mut sum = 0.0;
        for row in &ex {
            for col in &et {
                let u: Complex64 = row.iter().zip(col).map(|(a, b)| a * b).sum();
                sum += u.norm_sqr();
            }
        }
        total += sum * hx * ht;
    }
    total
}
