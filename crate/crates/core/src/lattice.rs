//! The frequency lattice Λ = {(k, ω(k)) : |k| ≤ N} and Beurling-type counting.
//!
//! The counting function `N(r) = sup #(Λ ∩ B_r(x))` is taken over centres
//! escaping to infinity. At finite truncation this is operationalised as a
//! maximum over a far-field window: centres on the square grid of step `r/4`
//! inside `[-X, X]²` with `|x| ≥ X/2`.

use std::collections::HashSet;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionRelation;
use crate::{Error, Result};

/// Which time-frequency coordinate the lattice stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `(k, ω(k))`
    Physical,
    /// `(k, -ω(k))`, the exponent convention `kx - ω(k)t` of the solver.
    Solver,
}

#[derive(Debug, Clone)]
pub struct FrequencyLattice {
    rel: DispersionRelation,
    truncation: usize,
    points: Vec<[f64; 2]>,
    sign: SignConvention,
}

impl FrequencyLattice {
    pub fn new(rel: &DispersionRelation, truncation: usize) -> Self {
        Self::with_convention(rel, truncation, SignConvention::Physical)
    }

    pub fn with_convention(
        rel: &DispersionRelation,
        truncation: usize,
        sign: SignConvention,
    ) -> Self {
        let n = truncation as i64;
        let flip = match sign {
            SignConvention::Physical => 1.0,
            SignConvention::Solver => -1.0,
        };
        let points = (-n..=n)
            .map(|k| {
                let k = k as f64;
                [k, flip * rel.omega(k)]
            })
            .collect();
        Self {
            rel: rel.clone(),
            truncation,
            points,
            sign,
        }
    }

    /// The same lattice reflected across the k-axis.
    pub fn mirrored(&self) -> Self {
        let sign = match self.sign {
            SignConvention::Physical => SignConvention::Solver,
            SignConvention::Solver => SignConvention::Physical,
        };
        Self::with_convention(&self.rel, self.truncation, sign)
    }

    pub fn relation(&self) -> &DispersionRelation {
        &self.rel
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn sign_convention(&self) -> SignConvention {
        self.sign
    }

    /// Points sorted by k.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `max_k max(|k|, |ω(k)|)`: the smallest admissible centre window.
    pub fn extent(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(0.0, f64::max)
    }

    /// Exact minimum pairwise Euclidean distance.
    ///
    /// First coordinates are consecutive integers, so once `|k_i - k_j|`
    /// reaches the current minimum no later pair can beat it.
    pub fn separation(&self) -> Result<f64> {
        if self.points.len() < 2 {
            return Err(Error::InvalidParameter(
                "separation needs at least two points".into(),
            ));
        }
        let mut best2 = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                let dx = q[0] - p[0];
                if dx * dx >= best2 {
                    break;
                }
                let dy = q[1] - p[1];
                best2 = best2.min(dx * dx + dy * dy);
            }
        }
        Ok(best2.sqrt())
    }

    /// Number of lattice points at Euclidean distance `≤ r` from `center`.
    pub fn count_in_ball(&self, center: [f64; 2], r: f64) -> usize {
        let n = self.truncation as i64;
        let lo = ((center[0] - r).ceil() as i64).max(-n);
        let hi = ((center[0] + r).floor() as i64).min(n);
        if lo > hi {
            return 0;
        }
        let r2 = r * r;
        self.points[(lo + n) as usize..=(hi + n) as usize]
            .iter()
            .filter(|p| {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= r2
            })
            .count()
    }

    /// Far-field maximum of [`count_in_ball`](Self::count_in_ball).
    ///
    /// Only grid centres within `r` of some lattice point can see a nonzero
    /// count, so those are the only ones enumerated.
    pub fn counting_function(&self, r: f64, x_max: f64) -> Result<FarFieldCount> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {r}"
            )));
        }
        let extent = self.extent();
        if !(x_max >= extent) || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "centre window X_max={x_max} does not cover the lattice extent {extent}"
            )));
        }
        let step = r / 4.0;
        let imax = (x_max / step).floor() as i64;
        let near = x_max / 2.0;
        if (imax as f64 * step) * std::f64::consts::SQRT_2 < near {
            return Err(Error::InvalidParameter(format!(
                "centre window X_max={x_max} holds no far-field grid centres at step {step}"
            )));
        }
        let near2 = near * near;
        let r2 = r * r;

        let mut candidates = HashSet::new();
        for p in &self.points {
            if p[0].hypot(p[1]) + r < near {
                continue;
            }
            let i_lo = (((p[0] - r) / step).ceil() as i64).max(-imax);
            let i_hi = (((p[0] + r) / step).floor() as i64).min(imax);
            let j_lo = (((p[1] - r) / step).ceil() as i64).max(-imax);
            let j_hi = (((p[1] + r) / step).floor() as i64).min(imax);
            for i in i_lo..=i_hi {
                let cx = i as f64 * step;
                for j in j_lo..=j_hi {
                    let cy = j as f64 * step;
                    let (dx, dy) = (cx - p[0], cy - p[1]);
                    if dx * dx + dy * dy <= r2 && cx * cx + cy * cy >= near2 {
                        candidates.insert((i, j));
                    }
                }
            }
        }
        let mut candidates: Vec<(i64, i64)> = candidates.into_iter().collect();
        candidates.sort_unstable();

        let best = candidates
            .par_iter()
            .map(|&(i, j)| {
                let c = [i as f64 * step, j as f64 * step];
                (self.count_in_ball(c, r), std::cmp::Reverse((i, j)))
            })
            .max();
        let (count, center) = match best {
            Some((count, std::cmp::Reverse((i, j)))) => (count, [i as f64 * step, j as f64 * step]),
            None => (0, [imax as f64 * step, imax as f64 * step]),
        };
        Ok(FarFieldCount {
            count,
            center,
            grid_step: step,
            window: x_max,
        })
    }
}

/// Result of a far-field counting query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarFieldCount {
    pub count: usize,
    /// A maximising centre (lexicographically smallest grid index on ties).
    pub center: [f64; 2],
    /// Grid step; the effective radius is uncertain by this much.
    pub grid_step: f64,
    pub window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BeurlingVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub relation: String,
    pub truncation: usize,
    pub radii: Vec<f64>,
    pub n_of_r: Vec<usize>,
    pub ratios: Vec<f64>,
    pub center_window: f64,
    pub center_grid_steps: Vec<f64>,
    pub verdict: BeurlingVerdict,
}

impl CountingReport {
    /// CSV with header `r,N_of_r,ratio`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "r,N_of_r,ratio")?;
        for ((r, n), q) in self.radii.iter().zip(&self.n_of_r).zip(&self.ratios) {
            writeln!(out, "{r},{n},{q}")?;
        }
        Ok(())
    }

    /// Metadata record carrying the verdict.
    pub fn metadata_ndjson(&self) -> String {
        serde_json::json!({
            "relation": self.relation,
            "truncation": self.truncation,
            "center_window": self.center_window,
            "center_grid_steps": self.center_grid_steps,
            "verdict": self.verdict,
        })
        .to_string()
    }
}

/// Classifies a ratio curve `N(r)/r`.
///
/// PASS: non-increasing over the last three radii and the final ratio is below
/// half the first. FAIL: the last three ratios agree within 5% of the final
/// ratio, allowing one count of slack (`1/r`) since `N(r)` is an integer.
pub fn classify_ratios(radii: &[f64], ratios: &[f64]) -> BeurlingVerdict {
    let n = ratios.len();
    if n < 3 {
        return BeurlingVerdict::Inconclusive;
    }
    let tail = n - 3..n;
    let last = ratios[n - 1];
    let non_increasing = ratios[tail.clone()].windows(2).all(|w| w[1] <= w[0]);
    if non_increasing && last < 0.5 * ratios[0] {
        return BeurlingVerdict::Pass;
    }
    let stable = last > 0.0
        && tail
            .clone()
            .all(|i| (ratios[i] - last).abs() <= 0.05 * last + 1.0 / radii[i]);
    if stable {
        BeurlingVerdict::Fail
    } else {
        BeurlingVerdict::Inconclusive
    }
}

/// Far-field counting at each radius, with the window set to the lattice extent.
pub fn beurling_ratio_curve(
    rel: &DispersionRelation,
    truncation: usize,
    radii: &[f64],
) -> Result<CountingReport> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("no radii given".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "radii must be strictly increasing".into(),
        ));
    }
    let r_max = radii[radii.len() - 1];
    if r_max > truncation as f64 / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "truncation N={truncation} too small for radius {r_max} (need r <= N/4)"
        )));
    }
    let lat = FrequencyLattice::new(rel, truncation);
    let window = lat.extent();
    let counts = radii
        .iter()
        .map(|&r| lat.counting_function(r, window))
        .collect::<Result<Vec<_>>>()?;
    let n_of_r: Vec<usize> = counts.iter().map(|c| c.count).collect();
    let ratios: Vec<f64> = n_of_r
        .iter()
        .zip(radii)
        .map(|(&n, &r)| n as f64 / r)
        .collect();
    let verdict = classify_ratios(radii, &ratios);
    Ok(CountingReport {
        relation: rel.name().to_string(),
        truncation,
        radii: radii.to_vec(),
        n_of_r,
        ratios,
        center_window: window,
        center_grid_steps: counts.iter().map(|c| c.grid_step).collect(),
        verdict,
    })
}

fn check_annulus(x_abs: f64, r: f64) -> Result<()> {
    if !(r > 0.0 && r < x_abs) || !x_abs.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "annulus needs 0 < r < |x|, got r={r}, |x|={x_abs}"
        )));
    }
    Ok(())
}

/// `d(k) = √((|x|+r)² - k²) - √((|x|-r)² - k²)`, the vertical extent of the
/// annulus `|x|-r ≤ |y| ≤ |x|+r` along the line `y₁ = k`.
pub fn annulus_vertical_extent(x_abs: f64, r: f64, k: f64) -> Result<f64> {
    check_annulus(x_abs, r)?;
    let outer = (x_abs + r).powi(2);
    let inner = (x_abs - r).powi(2);
    let k2 = k * k;
    if k2 > inner {
        return Err(Error::Domain(format!(
            "line y1 = {k} misses the inner circle of radius {}",
            x_abs - r
        )));
    }
    Ok((outer - k2).sqrt() - (inner - k2).sqrt())
}

/// `D = √((|x|+r)² - (|x|-r)²/2) - √((|x|-r)²/2)`: the longest vertical
/// segment of the annulus above the diagonal. Tends to `√8·r`.
pub fn max_vertical_extent(x_abs: f64, r: f64) -> Result<f64> {
    check_annulus(x_abs, r)?;
    let half_inner = (x_abs - r).powi(2) / 2.0;
    Ok(((x_abs + r).powi(2) - half_inner).sqrt() - half_inner.sqrt())
}
