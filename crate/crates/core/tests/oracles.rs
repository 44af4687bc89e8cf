//! Library results against independent reference computations.

// reference values keep every digit the extended-precision run printed
#![allow(clippy::excessive_precision)]

mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64;
use ucp_core::dispersion::DispersionRelation;
use ucp_core::fluid::{dn_apply, dn_flat_symbol, harmonic_extend, FluidGeometry};
use ucp_core::lattice::FrequencyLattice;
use ucp_core::observability::{
    frame_bounds, gram_matrix, restricted_mass, ucp_certificate, vanishing_witness, Rect,
    SpaceTimeDomain,
};
use ucp_core::periodic::PeriodicGrid;
use ucp_core::spectral::{evaluate_solution, evolve, synthesize, FourierState, GridSpec};

fn quarter_domain() -> SpaceTimeDomain {
    SpaceTimeDomain::new(vec![Rect::new(0.0, PI / 2.0, 0.0, 0.5)], 0.5).unwrap()
}

#[test]
fn eigensolver_agrees_with_jacobi() {
    let doms = [
        quarter_domain(),
        SpaceTimeDomain::new(
            vec![
                Rect::new(0.3, 1.4, 0.0, 0.2),
                Rect::new(2.0, 5.5, 0.4, 0.45),
            ],
            1.0,
        )
        .unwrap(),
    ];
    let rels = [
        DispersionRelation::schrodinger(),
        DispersionRelation::kdv_linear(),
        DispersionRelation::gravity_capillary(1.0, 1.0, 1.0).unwrap(),
        DispersionRelation::transport(0.7).unwrap(),
    ];
    for dom in &doms {
        for rel in &rels {
            let g = gram_matrix(&FrequencyLattice::new(rel, 10), dom);
            let ev = common::jacobi_eigenvalues(&g);
            let fb = frame_bounds(&g).unwrap();
            let scale = ev[ev.len() - 1];
            assert!(
                (fb.d_minus_raw - ev[0]).abs() <= 1e-12 * scale,
                "{} {} vs {}",
                rel.name(),
                fb.d_minus_raw,
                ev[0]
            );
            assert!((fb.d_plus - ev[ev.len() - 1]).abs() <= 1e-12 * scale);
            assert!(fb.residual <= 1e-12 * scale);
        }
    }
}

#[test]
fn certificate_matches_extended_precision_reference() {
    // 80-digit Gram matrices and Hermitian eigensolve on (0, π/2) × (0, 0.5)
    let schr = ucp_certificate(
        &DispersionRelation::schrodinger(),
        &quarter_domain(),
        &[4, 8, 16, 32],
    )
    .unwrap();
    let expected = [
        2.176804001994987e-4,
        8.9838354226861106e-5,
        8.8493181908374813e-5,
        8.8485381815517393e-5,
    ];
    for (row, want) in schr.iter().zip(expected) {
        assert_relative_eq!(row.d_minus, want, max_relative = 1e-9);
    }
    assert_relative_eq!(schr[3].d_plus, 2.7321680668195062, max_relative = 1e-12);

    let transport = ucp_certificate(
        &DispersionRelation::transport(1.0).unwrap(),
        &quarter_domain(),
        &[4, 8],
    )
    .unwrap();
    assert_relative_eq!(
        transport[0].d_minus,
        1.3665689675265397e-9,
        max_relative = 1e-5
    );
    // true value 1.08e-18 sits below double resolution and clamps to zero
    assert_eq!(transport[1].d_minus, 0.0);
    assert_relative_eq!(
        transport[1].d_plus,
        3.1405769315963396,
        max_relative = 1e-12
    );
}

#[test]
fn restricted_mass_matches_midpoint_quadrature() {
    let mut rng = common::rng(11);
    let dom = SpaceTimeDomain::new(
        vec![Rect::new(0.5, 2.0, 0.1, 0.6), Rect::new(3.0, 4.0, 0.0, 0.3)],
        1.0,
    )
    .unwrap();
    let rel = DispersionRelation::kdv_linear();
    for _ in 0..3 {
        let g = common::random_state(&mut rng, 4);
        let exact = restricted_mass(&g, &rel, &dom);
        let coarse = common::midpoint_mass(&g, &rel, &dom, 128);
        let fine = common::midpoint_mass(&g, &rel, &dom, 256);
        // midpoint error shrinks fourfold per halving; Richardson removes the h² term
        assert!(
            (exact - fine).abs() <= (fine - coarse).abs(),
            "{exact} {coarse} {fine}"
        );
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!((exact - extrapolated).abs() <= 0.05 * (exact - fine).abs());
    }
}

#[test]
fn witness_is_nearly_silent_on_the_domain() {
    let dom = quarter_domain();
    let rel = DispersionRelation::schrodinger();
    let (w, mass) = vanishing_witness(&rel, &dom, 8).unwrap();
    let quad = common::midpoint_mass(&w, &rel, &dom, 512);
    assert_relative_eq!(quad, mass, max_relative = 1e-3);
    // and it is a genuine unit-norm solution, loud elsewhere
    let full = SpaceTimeDomain::full(0.5).unwrap();
    assert_relative_eq!(restricted_mass(&w, &rel, &full), PI, max_relative = 1e-12);
}

#[test]
fn synthesis_agrees_with_direct_summation() {
    let mut rng = common::rng(5);
    let g = common::random_state(&mut rng, 12);
    let rel = DispersionRelation::gravity_capillary(1.0, 0.5, 2.0).unwrap();
    let t = 0.37;
    let grid = GridSpec::space_only(32);
    let fft = synthesize(&evolve(&g, &rel, t), &grid).unwrap();
    let points: Vec<(f64, f64)> = grid.x_points().iter().map(|&x| (x, t)).collect();
    let direct = evaluate_solution(&g, &rel, &points);
    for (a, b) in fft.iter().zip(&direct) {
        assert!((a - b).norm() < 1e-12, "{a} {b}");
    }
}

#[test]
fn plane_wave_evaluation() {
    let g = FourierState::delta(3, -2);
    let rel = DispersionRelation::kdv_linear();
    let (x, t) = (0.9, 1.3);
    let u = evaluate_solution(&g, &rel, &[(x, t)])[0];
    let expected = Complex64::cis(-2.0 * x - rel.omega(-2.0) * t);
    assert!((u - expected).norm() < 1e-15);
}

#[test]
fn harmonic_extension_matches_separated_solution_at_second_order() {
    let error = |n: usize| {
        let geom = FluidGeometry::flat(1.0, n, n).unwrap();
        let x = PeriodicGrid::new(n).points();
        let phi: Vec<f64> = x.iter().map(|x| (2.0 * x).cos()).collect();
        let field = harmonic_extend(&geom, &phi).unwrap();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let z = -1.0 + j as f64 / (n - 1) as f64;
            for (i, xi) in x.iter().enumerate() {
                let exact = (2.0 * xi).cos() * (2.0 * (z + 1.0)).cosh() / 2.0f64.cosh();
                worst = worst.max((field.get(i, j) - exact).abs());
            }
        }
        worst
    };
    let (e1, e2) = (error(64), error(128));
    assert!(e2 < 2e-3, "{e2}");
    let ratio = e1 / e2;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn dn_diagonalizes_on_flat_geometry() {
    // each Fourier mode is an eigenfunction of the flat discrete operator
    let n = 64;
    let geom = FluidGeometry::flat(1.5, n, 32).unwrap();
    let grid = PeriodicGrid::new(n);
    let x = grid.points();
    for k in [1_i64, 3, 5] {
        let phi: Vec<f64> = x.iter().map(|x| (k as f64 * x).sin()).collect();
        let out = dn_apply(&geom, &phi).unwrap();
        let lambda = out.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>()
            / phi.iter().map(|b| b * b).sum::<f64>();
        for (a, b) in out.iter().zip(&phi) {
            assert!((a - lambda * b).abs() < 1e-11);
        }
        assert_relative_eq!(lambda, dn_flat_symbol(k, 1.5), max_relative = 0.03);
    }
}
