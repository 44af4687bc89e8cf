//! Gram matrices of restricted exponentials and their frame bounds.
//!
//! For a truncated solution `u(x,t) = Σ a_k e^{i(kx - ω(k)t)}` and a finite
//! union of rectangles `D`,
//!
//! ```text
//! ∫_D |u|² = Σ_{m,n} a_m conj(a_n) G[m][n],
//! G[m][n]  = Σ_rects I(k_m - k_n; x0, x1) · I(-(ω_m - ω_n); t0, t1),
//! I(a; α, β) = ∫_α^β e^{iau} du.
//! ```
//!
//! The extreme eigenvalues `d₋ ≤ d₊` of `G` are the best constants in
//! `d₋ Σ|a|² ≤ ∫_D |u|² ≤ d₊ Σ|a|²` at that truncation. `d₋ > 0` certifies
//! that no nonzero truncated solution vanishes on `D`.

use std::f64::consts::PI;
use std::io::{self, Write};

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionRelation;
use crate::lattice::FrequencyLattice;
use crate::spectral::FourierState;
use crate::{Error, Result};

/// `|d₋|` at or below this multiple of the domain area counts as zero.
pub const CLAMP_RELATIVE: f64 = 1e-10;

/// Below this value of `|a|(β-α)` the segment integral uses its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-6;

/// Axis-aligned rectangle `[x0,x1] × [t0,t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, t0: f64, t1: f64) -> Self {
        Self { x0, x1, t0, t1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.t1 - self.t0)
    }

    fn overlap_area(&self, other: &Rect) -> f64 {
        let w = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0.0);
        let h = (self.t1.min(other.t1) - self.t0.max(other.t0)).max(0.0);
        w * h
    }
}

/// Finite union of rectangles inside `(0, 2π) × (0, T_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeDomain {
    rects: Vec<Rect>,
    t_max: f64,
}

impl SpaceTimeDomain {
    pub fn new(rects: Vec<Rect>, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "T_max must be positive, got {t_max}"
            )));
        }
        if rects.is_empty() {
            return Err(Error::InvalidParameter(
                "domain needs at least one rectangle".into(),
            ));
        }
        for (i, r) in rects.iter().enumerate() {
            let finite = [r.x0, r.x1, r.t0, r.t1].iter().all(|v| v.is_finite());
            if !finite || !(r.x0 < r.x1) || !(r.t0 < r.t1) {
                return Err(Error::InvalidParameter(format!(
                    "rectangle {i} is degenerate: {r:?}"
                )));
            }
            if r.x0 < 0.0 || r.x1 > 2.0 * PI || r.t0 < 0.0 || r.t1 > t_max {
                return Err(Error::InvalidParameter(format!(
                    "rectangle {i} leaves the ambient box (0,2π)×(0,{t_max}): {r:?}"
                )));
            }
        }
        for i in 0..rects.len() {
            for j in i + 1..rects.len() {
                if rects[i].overlap_area(&rects[j]) > 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "rectangles {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(Self { rects, t_max })
    }

    /// The whole ambient box `(0,2π) × (0,T)`.
    pub fn full(t_max: f64) -> Result<Self> {
        Self::new(vec![Rect::new(0.0, 2.0 * PI, 0.0, t_max)], t_max)
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn area(&self) -> f64 {
        self.rects.iter().map(Rect::area).sum()
    }

    /// Shifts every rectangle by `s` in time, growing the ambient box if needed.
    pub fn shifted_in_time(&self, s: f64) -> Result<Self> {
        let rects = self
            .rects
            .iter()
            .map(|r| Rect::new(r.x0, r.x1, r.t0 + s, r.t1 + s))
            .collect();
        Self::new(rects, self.t_max + s.max(0.0))
    }
}

/// `I(a; α, β) = ∫_α^β e^{iau} du`.
pub fn segment_integral(a: f64, alpha: f64, beta: f64) -> Complex64 {
    let len = beta - alpha;
    if a == 0.0 {
        return Complex64::new(len, 0.0);
    }
    if (a * len).abs() < SERIES_THRESHOLD {
        // e^{iaα} L (1 + z/2 + z²/6 + z³/24), z = iaL
        let z = Complex64::new(0.0, a * len);
        let series = Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
        return Complex64::cis(a * alpha) * len * series;
    }
    // (e^{iaβ} - e^{iaα})/(ia) written as e^{ia·mid}·2 sin(aL/2)/a
    let mid = 0.5 * (alpha + beta);
    Complex64::cis(a * mid) * (2.0 * (0.5 * a * len).sin() / a)
}

/// Dense Hermitian Gram matrix in the lattice index order `k = -N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    truncation: usize,
    entries: Vec<Complex64>,
    domain_area: f64,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        2 * self.truncation + 1
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    /// Entry at storage indices (wavenumbers `m - N`, `n - N`).
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.dim() + n]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// The Gram matrix of the nested lattice `|k| ≤ sub`.
    pub fn principal_block(&self, sub: usize) -> GramMatrix {
        assert!(sub <= self.truncation, "block larger than the matrix");
        let off = self.truncation - sub;
        let d = 2 * sub + 1;
        let mut entries = Vec::with_capacity(d * d);
        for m in 0..d {
            for n in 0..d {
                entries.push(self.get(m + off, n + off));
            }
        }
        GramMatrix {
            truncation: sub,
            entries,
            domain_area: self.domain_area,
        }
    }

    /// `∫_D |Σ a_k e^{i(kx-ω(k)t)}|² = Σ_{m,n} a_m conj(a_n) G[m][n]`.
    pub fn restricted_mass(&self, coeffs: &[Complex64]) -> f64 {
        let d = self.dim();
        assert_eq!(
            coeffs.len(),
            d,
            "coefficient vector does not match the Gram matrix"
        );
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, am) in coeffs.iter().enumerate() {
            let row = &self.entries[m * d..(m + 1) * d];
            let inner: Complex64 = row.iter().zip(coeffs).map(|(g, an)| g * an.conj()).sum();
            acc += am * inner;
        }
        acc.re
    }

    fn to_faer(&self) -> Mat<Complex64> {
        let d = self.dim();
        Mat::from_fn(d, d, |i, j| self.get(i, j))
    }

    fn off_diagonal_norm(&self) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    s += self.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

/// Closed-form Gram matrix of the lattice exponentials over `dom`.
pub fn gram_matrix(lat: &FrequencyLattice, dom: &SpaceTimeDomain) -> GramMatrix {
    let rel = lat.relation();
    let n = lat.truncation() as i64;
    let modes: Vec<(f64, f64)> = (-n..=n).map(|k| (k as f64, rel.omega(k as f64))).collect();
    let d = modes.len();
    let area = dom.area();

    // upper triangle, one row per task
    let upper: Vec<Vec<Complex64>> = (0..d)
        .into_par_iter()
        .map(|m| {
            let (km, wm) = modes[m];
            (m + 1..d)
                .map(|j| {
                    let (kn, wn) = modes[j];
                    dom.rects()
                        .iter()
                        .map(|r| {
                            segment_integral(km - kn, r.x0, r.x1)
                                * segment_integral(-(wm - wn), r.t0, r.t1)
                        })
                        .sum()
                })
                .collect()
        })
        .collect();

    let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
    for (m, row) in upper.iter().enumerate() {
        entries[m * d + m] = Complex64::new(area, 0.0);
        for (off, &v) in row.iter().enumerate() {
            let j = m + 1 + off;
            entries[m * d + j] = v;
            entries[j * d + m] = v.conj();
        }
    }
    GramMatrix {
        truncation: lat.truncation(),
        entries,
        domain_area: area,
    }
}

/// Extreme eigenvalues of a Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub truncation: usize,
    pub d_minus_raw: f64,
    /// `d_minus_raw`, or 0 when `|d_minus_raw| ≤ 1e-10·area`.
    pub d_minus: f64,
    pub d_plus: f64,
    pub domain_area: f64,
    /// `max ‖Gv - λv‖` over the two extreme eigenpairs.
    pub residual: f64,
}

struct ExtremePairs {
    bounds: FrameBounds,
    min_vector: Vec<Complex64>,
}

fn extreme_pairs(g: &GramMatrix) -> Result<ExtremePairs> {
    let a = g.to_faer();
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NotConverged {
            what: "Hermitian eigensolver".into(),
            residual: g.off_diagonal_norm(),
        })?;
    let s = evd.S();
    let u = evd.U();
    let d = g.dim();
    let lo = s[0].re;
    let hi = s[d - 1].re;

    let residual_of = |col: usize, lambda: f64| {
        let v: Vec<Complex64> = (0..d).map(|i| u[(i, col)]).collect();
        (0..d)
            .map(|i| {
                let gv: Complex64 = (0..d).map(|j| g.get(i, j) * v[j]).sum();
                (gv - v[i] * lambda).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    };
    let residual = residual_of(0, lo).max(residual_of(d - 1, hi));

    let area = g.domain_area;
    let threshold = CLAMP_RELATIVE * area;
    if lo < -threshold {
        return Err(Error::NotConverged {
            what: format!("Gram matrix is not positive semidefinite (d_minus = {lo:.3e})"),
            residual,
        });
    }
    let d_minus = if lo.abs() <= threshold { 0.0 } else { lo };
    Ok(ExtremePairs {
        bounds: FrameBounds {
            truncation: g.truncation,
            d_minus_raw: lo,
            d_minus,
            d_plus: hi,
            domain_area: area,
            residual,
        },
        min_vector: (0..d).map(|i| u[(i, 0)]).collect(),
    })
}

/// Smallest and largest eigenvalue of `g`.
pub fn frame_bounds(g: &GramMatrix) -> Result<FrameBounds> {
    extreme_pairs(g).map(|p| p.bounds)
}

/// `∫_D |u|²` for the solution with initial coefficients `g`.
pub fn restricted_mass(g: &FourierState, rel: &DispersionRelation, dom: &SpaceTimeDomain) -> f64 {
    let lat = FrequencyLattice::new(rel, g.truncation());
    gram_matrix(&lat, dom).restricted_mass(g.coeffs())
}

/// Frame bounds at each truncation in `n_list`, from nested principal blocks
/// of one Gram matrix.
pub fn ucp_certificate(
    rel: &DispersionRelation,
    dom: &SpaceTimeDomain,
    n_list: &[usize],
) -> Result<Vec<FrameBounds>> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("empty truncation list".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "truncation list must be strictly increasing".into(),
        ));
    }
    let n_max = *n_list.last().expect("non-empty");
    let full = gram_matrix(&FrequencyLattice::new(rel, n_max), dom);
    n_list
        .par_iter()
        .map(|&n| frame_bounds(&full.principal_block(n)))
        .collect()
}

/// CSV with header `N,d_minus_raw,d_minus,d_plus,domain_area`.
pub fn write_certificate_csv<W: Write>(mut out: W, rows: &[FrameBounds]) -> io::Result<()> {
    writeln!(out, "N,d_minus_raw,d_minus,d_plus,domain_area")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.truncation, r.d_minus_raw, r.d_minus, r.d_plus, r.domain_area
        )?;
    }
    Ok(())
}

/// The unit-norm state whose restricted mass is smallest, with that mass.
pub fn vanishing_witness(
    rel: &DispersionRelation,
    dom: &SpaceTimeDomain,
    truncation: usize,
) -> Result<(FourierState, f64)> {
    let gram = gram_matrix(&FrequencyLattice::new(rel, truncation), dom);
    let pairs = extreme_pairs(&gram)?;
    // The eigenvector v minimises v*Gv, and v*Gv is the mass of the state with
    // coefficients conj(v) under the convention of `restricted_mass`.
    let norm = pairs
        .min_vector
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let coeffs: Vec<Complex64> = pairs.min_vector.iter().map(|c| c.conj() / norm).collect();
    let mass = gram.restricted_mass(&coeffs);
    Ok((FourierState::new(truncation, coeffs)?, mass))
}
