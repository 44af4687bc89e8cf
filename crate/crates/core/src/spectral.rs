//! Exact Fourier-space solution of `u_t = -iω(D)u` on the circle.
//!
//! A state is the truncated coefficient vector `ĝ_k`, `|k| ≤ N`, of
//! `u(x) = Σ ĝ_k e^{ikx}`. Evolution multiplies each coefficient by
//! `e^{-iω(k)t}`; there is no time stepping.

use std::io::{self, BufRead, Write};
use std::ops::{Add, Mul};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionRelation;
use crate::{Error, Result};

/// Truncated Fourier coefficients indexed by `k = -N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierState {
    truncation: usize,
    coeffs: Vec<Complex64>,
}

impl FourierState {
    pub fn new(truncation: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * truncation + 1 {
            return Err(Error::InvalidParameter(format!(
                "truncation N={truncation} needs {} coefficients, got {}",
                2 * truncation + 1,
                coeffs.len()
            )));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::InvalidParameter(
                "non-finite Fourier coefficient".into(),
            ));
        }
        Ok(Self { truncation, coeffs })
    }

    pub fn zeros(truncation: usize) -> Self {
        Self {
            truncation,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * truncation + 1],
        }
    }

    /// Single mode `e^{ikx}` with unit coefficient.
    pub fn delta(truncation: usize, k: i64) -> Self {
        let mut s = Self::zeros(truncation);
        *s.coeff_mut(k) = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_fn(truncation: usize, f: impl FnMut(i64) -> Complex64) -> Self {
        let n = truncation as i64;
        Self {
            truncation,
            coeffs: (-n..=n).map(f).collect(),
        }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Storage slot of wavenumber `k`.
    pub fn index_of(&self, k: i64) -> usize {
        let n = self.truncation as i64;
        assert!(k.abs() <= n, "wavenumber {k} outside truncation {n}");
        (k + n) as usize
    }

    /// Wavenumber stored in slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        idx as i64 - self.truncation as i64
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[self.index_of(k)]
    }

    pub fn coeff_mut(&mut self, k: i64) -> &mut Complex64 {
        let idx = self.index_of(k);
        &mut self.coeffs[idx]
    }

    /// `(k, ĝ_k)` pairs in increasing `k`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.wavenumber(i), c))
    }

    /// `Σ|ĝ_k|²`, the mass ledger used everywhere.
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn to_ndjson(&self) -> String {
        serde_json::to_string(&StateRecord::from(self)).expect("plain numeric record")
    }

    pub fn from_ndjson(line: &str) -> Result<Self> {
        let rec: StateRecord = serde_json::from_str(line)
            .map_err(|e| Error::InvalidParameter(format!("bad FourierState record: {e}")))?;
        rec.try_into()
    }
}

impl Add for &FourierState {
    type Output = FourierState;

    fn add(self, rhs: &FourierState) -> FourierState {
        assert_eq!(self.truncation, rhs.truncation, "truncation mismatch");
        FourierState {
            truncation: self.truncation,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Mul<&FourierState> for Complex64 {
    type Output = FourierState;

    fn mul(self, rhs: &FourierState) -> FourierState {
        FourierState {
            truncation: rhs.truncation,
            coeffs: rhs.coeffs.iter().map(|c| self * c).collect(),
        }
    }
}

/// NDJSON wire form `{N, re[], im[]}`.
#[derive(Debug, Serialize, Deserialize)]
struct StateRecord {
    #[serde(rename = "N")]
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<&FourierState> for StateRecord {
    fn from(s: &FourierState) -> Self {
        Self {
            n: s.truncation,
            re: s.coeffs.iter().map(|c| c.re).collect(),
            im: s.coeffs.iter().map(|c| c.im).collect(),
        }
    }
}

impl TryFrom<StateRecord> for FourierState {
    type Error = Error;

    fn try_from(rec: StateRecord) -> Result<Self> {
        if rec.re.len() != rec.im.len() {
            return Err(Error::InvalidParameter("re/im length mismatch".into()));
        }
        let coeffs = rec
            .re
            .iter()
            .zip(&rec.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        FourierState::new(rec.n, coeffs)
    }
}

/// Writes one state per line.
pub fn write_states_ndjson<W: Write>(mut out: W, states: &[FourierState]) -> io::Result<()> {
    for s in states {
        writeln!(out, "{}", s.to_ndjson())?;
    }
    Ok(())
}

pub fn read_states_ndjson<R: BufRead>(input: R) -> Result<Vec<FourierState>> {
    let mut states = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::InvalidParameter(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        states.push(FourierState::from_ndjson(&line)?);
    }
    Ok(states)
}

/// Equispaced space–time sampling grid on `[0, 2π) × [t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nt: usize,
    pub t0: f64,
    pub t1: f64,
}

impl GridSpec {
    pub fn space_only(nx: usize) -> Self {
        Self {
            nx,
            nt: 1,
            t0: 0.0,
            t1: 0.0,
        }
    }

    pub fn x_points(&self) -> Vec<f64> {
        let h = 2.0 * std::f64::consts::PI / self.nx as f64;
        (0..self.nx).map(|j| j as f64 * h).collect()
    }

    pub fn t_points(&self) -> Vec<f64> {
        if self.nt <= 1 {
            return vec![self.t0];
        }
        let dt = (self.t1 - self.t0) / (self.nt - 1) as f64;
        (0..self.nt).map(|i| self.t0 + i as f64 * dt).collect()
    }

    fn check_resolves(&self, truncation: usize) -> Result<()> {
        let needed = 2 * truncation + 1;
        if self.nx < needed {
            return Err(Error::Aliasing {
                nx: self.nx,
                truncation,
                needed,
            });
        }
        Ok(())
    }
}

/// Coefficient `k` of the result is `ĝ_k e^{-iω(k)t}`.
pub fn evolve(g: &FourierState, rel: &DispersionRelation, t: f64) -> FourierState {
    let coeffs = g
        .modes()
        .map(|(k, c)| c * Complex64::cis(-rel.omega(k as f64) * t))
        .collect();
    FourierState {
        truncation: g.truncation,
        coeffs,
    }
}

/// Samples `u(x_j) = Σ ĝ_k e^{ikx_j}` on the x-grid of `grid`.
pub fn synthesize(state: &FourierState, grid: &GridSpec) -> Result<Vec<Complex64>> {
    grid.check_resolves(state.truncation)?;
    let nx = grid.nx;
    let mut buf = vec![Complex64::new(0.0, 0.0); nx];
    for (k, c) in state.modes() {
        buf[k.rem_euclid(nx as i64) as usize] += c;
    }
    FftPlanner::new().plan_fft_inverse(nx).process(&mut buf);
    Ok(buf)
}

/// Inverse of [`synthesize`]: recovers `ĝ_k`, `|k| ≤ N`, from `nx ≥ 2N+1` samples.
pub fn analyze(samples: &[Complex64], truncation: usize) -> Result<FourierState> {
    let grid = GridSpec::space_only(samples.len());
    grid.check_resolves(truncation)?;
    let nx = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(nx).process(&mut buf);
    let scale = 1.0 / nx as f64;
    Ok(FourierState::from_fn(truncation, |k| {
        buf[k.rem_euclid(nx as i64) as usize] * scale
    }))
}

/// Direct summation of `u(x,t) = Σ ĝ_k e^{i(kx - ω(k)t)}` at arbitrary points.
pub fn evaluate_solution(
    g: &FourierState,
    rel: &DispersionRelation,
    points: &[(f64, f64)],
) -> Vec<Complex64> {
    let modes: Vec<(f64, f64, Complex64)> = g
        .modes()
        .map(|(k, c)| (k as f64, rel.omega(k as f64), c))
        .collect();
    points
        .par_iter()
        .map(|&(x, t)| {
            modes
                .iter()
                .fold(Complex64::new(0.0, 0.0), |acc, &(k, w, c)| {
                    acc + c * Complex64::cis(k * x - w * t)
                })
        })
        .collect()
}

/// One row of a space–time sample dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub t: f64,
    pub value: Complex64,
}

/// Evolve-then-synthesize at every time of `grid`.
pub fn sample_space_time(
    g: &FourierState,
    rel: &DispersionRelation,
    grid: &GridSpec,
) -> Result<Vec<Sample>> {
    grid.check_resolves(g.truncation)?;
    let xs = grid.x_points();
    let mut out = Vec::with_capacity(grid.nx * grid.nt.max(1));
    for t in grid.t_points() {
        let values = synthesize(&evolve(g, rel, t), grid)?;
        out.extend(
            xs.iter()
                .zip(values)
                .map(|(&x, value)| Sample { x, t, value }),
        );
    }
    Ok(out)
}

/// CSV with header `x,t,re,im`.
pub fn write_samples_csv<W: Write>(mut out: W, samples: &[Sample]) -> io::Result<()> {
    writeln!(out, "x,t,re,im")?;
    for s in samples {
        writeln!(out, "{},{},{},{}", s.x, s.t, s.value.re, s.value.im)?;
    }
    Ok(())
}
