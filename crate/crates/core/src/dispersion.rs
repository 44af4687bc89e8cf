//! Dispersion relations and the structural hypotheses placed on them.
//!
//! A [`DispersionRelation`] is a real symbol ω(k) evaluated at real `k`.
//! The unique-continuation argument needs three things from it: that it is
//! real valued, that it obeys a symbol bound
//! `|dⁿω(k)| ≤ Cₙ (1 + k²)^{(m-n)/2}`, and that `|ω(k)|/|k| → ∞`.
//! The last two are only checkable on samples; [`check_symbol_bound`] and
//! [`check_superlinear`] implement those sampled checks.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Symbol families understood by the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// ω(k) = |k|^p, p ≥ 1.
    Power { p: f64 },
    /// ω(k) = c·k.
    Transport { c: f64 },
    /// ω(k) = k².
    Schrodinger,
    /// ω(k) = -k³.
    KdvLinear,
    /// ω(k) = sign(k)·√((g|k| + S|k|³)·tanh(|k|H)).
    GravityCapillary { g: f64, s: f64, h: f64 },
}

impl Family {
    fn default_name(&self) -> &'static str {
        match self {
            Family::Power { .. } => "power",
            Family::Transport { .. } => "transport",
            Family::Schrodinger => "schrodinger",
            Family::KdvLinear => "kdv_linear",
            Family::GravityCapillary { .. } => "gravity_capillary",
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )))
            }
        };
        match *self {
            Family::Power { p } => {
                finite("p", p)?;
                if p < 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power family needs p >= 1, got {p}"
                    )));
                }
            }
            Family::Transport { c } => finite("c", c)?,
            Family::Schrodinger | Family::KdvLinear => {}
            Family::GravityCapillary { g, s, h } => {
                finite("g", g)?;
                finite("S", s)?;
                finite("H", h)?;
                if g < 0.0 || s < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "gravity_capillary needs g >= 0 and S >= 0, got g={g}, S={s}"
                    )));
                }
                if g + s <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "gravity_capillary needs g + S > 0".into(),
                    ));
                }
                if h <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "gravity_capillary needs H > 0, got {h}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A named, validated dispersion relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionRelation {
    name: String,
    family: Family,
}

impl DispersionRelation {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(Self {
            name: family.default_name().to_string(),
            family,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn schrodinger() -> Self {
        Self::new(Family::Schrodinger).expect("always valid")
    }

    pub fn kdv_linear() -> Self {
        Self::new(Family::KdvLinear).expect("always valid")
    }

    pub fn transport(c: f64) -> Result<Self> {
        Self::new(Family::Transport { c })
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(Family::Power { p })
    }

    pub fn gravity_capillary(g: f64, s: f64, h: f64) -> Result<Self> {
        Self::new(Family::GravityCapillary { g, s, h })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Symbol order m.
    pub fn order(&self) -> f64 {
        match self.family {
            Family::Power { p } => p,
            Family::Transport { .. } => 1.0,
            Family::Schrodinger => 2.0,
            Family::KdvLinear => 3.0,
            Family::GravityCapillary { s, .. } => {
                if s > 0.0 {
                    1.5
                } else {
                    0.5
                }
            }
        }
    }

    /// Evaluates ω(k).
    pub fn omega(&self, k: f64) -> f64 {
        match self.family {
            Family::Power { p } => k.abs().powf(p),
            Family::Transport { c } => c * k,
            Family::Schrodinger => k * k,
            Family::KdvLinear => -k * k * k,
            Family::GravityCapillary { g, s, h } => {
                let a = k.abs();
                let radicand = (g * a + s * a * a * a) * (a * h).tanh();
                // Parameters are validated, so the radicand is never negative.
                debug_assert!(radicand >= 0.0);
                if k < 0.0 {
                    -radicand.sqrt()
                } else {
                    radicand.sqrt()
                }
            }
        }
    }

    /// The n-th derivative of ω at `k`, for `n` in 0..=2.
    ///
    /// Closed forms are used for every family except gravity–capillary, which
    /// uses central differences with step `max(1e-5, 1e-5·|k|)`.
    ///
    /// # Panics
    /// If `n > 2`.
    pub fn derivative(&self, k: f64, n: u8) -> f64 {
        assert!(n <= 2, "only derivatives of order 0, 1, 2 are available");
        if n == 0 {
            return self.omega(k);
        }
        match self.family {
            Family::Power { p } => power_derivative(p, k, n),
            Family::Transport { c } => {
                if n == 1 {
                    c
                } else {
                    0.0
                }
            }
            Family::Schrodinger => {
                if n == 1 {
                    2.0 * k
                } else {
                    2.0
                }
            }
            Family::KdvLinear => {
                if n == 1 {
                    -3.0 * k * k
                } else {
                    -6.0 * k
                }
            }
            Family::GravityCapillary { .. } => {
                let h = (1e-5 * k.abs()).max(1e-5);
                let fp = self.omega(k + h);
                let fm = self.omega(k - h);
                if n == 1 {
                    (fp - fm) / (2.0 * h)
                } else {
                    (fp - 2.0 * self.omega(k) + fm) / (h * h)
                }
            }
        }
    }
}

fn power_derivative(p: f64, k: f64, n: u8) -> f64 {
    let a = k.abs();
    if n == 1 {
        if a == 0.0 {
            return 0.0;
        }
        p * a.powf(p - 1.0) * k.signum()
    } else {
        let coef = p * (p - 1.0);
        if coef == 0.0 {
            return 0.0;
        }
        if a == 0.0 {
            return if p == 2.0 {
                coef
            } else if p > 2.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        coef * a.powf(p - 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SuperlinearityVerdict {
    Superlinear,
    NotSuperlinear,
    Inconclusive,
}

/// Dyadic samples of the phase-speed ratio `|ω(±2ʲ)|/2ʲ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperlinearityReport {
    pub wavenumbers: Vec<f64>,
    pub ratios_positive: Vec<f64>,
    pub ratios_negative: Vec<f64>,
    pub verdict: SuperlinearityVerdict,
}

/// Samples `|ω(±2ʲ)|/2ʲ` for `j = 0..=⌊log₂ k_max⌋` and classifies growth.
///
/// SUPERLINEAR needs both signs strictly increasing over the last five samples
/// with an overall growth factor above 10. NOT_SUPERLINEAR is returned when on
/// either sign the last five samples never rise more than 1% above the first
/// of them, which covers both constant ratios (transport) and decaying ones
/// (pure gravity waves).
pub fn check_superlinear(rel: &DispersionRelation, k_max: f64) -> Result<SuperlinearityReport> {
    if !(k_max >= 64.0) || !k_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "k_max must be finite and at least 2^6, got {k_max}"
        )));
    }
    let j_max = k_max.log2().floor() as i32;
    let wavenumbers: Vec<f64> = (0..=j_max).map(|j| 2f64.powi(j)).collect();
    let ratios_positive: Vec<f64> = wavenumbers
        .iter()
        .map(|&k| rel.omega(k).abs() / k)
        .collect();
    let ratios_negative: Vec<f64> = wavenumbers
        .iter()
        .map(|&k| rel.omega(-k).abs() / k)
        .collect();

    let grows = |r: &[f64]| {
        let tail = &r[r.len() - 5..];
        tail.windows(2).all(|w| w[1] > w[0]) && r[r.len() - 1] / r[0] > 10.0
    };
    let bounded = |r: &[f64]| {
        let tail = &r[r.len() - 5..];
        let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max <= 1.01 * tail[0]
    };
    let verdict = if grows(&ratios_positive) && grows(&ratios_negative) {
        SuperlinearityVerdict::Superlinear
    } else if bounded(&ratios_positive) || bounded(&ratios_negative) {
        SuperlinearityVerdict::NotSuperlinear
    } else {
        SuperlinearityVerdict::Inconclusive
    };
    Ok(SuperlinearityReport {
        wavenumbers,
        ratios_positive,
        ratios_negative,
        verdict,
    })
}

/// Outcome of a sampled symbol-bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolBoundReport {
    pub holds: bool,
    /// Smallest constant that works on the samples, for n = 0, 1, 2.
    pub smallest_constants: [f64; 3],
}

/// Checks `|dⁿω(k)| ≤ C (1 + k²)^{(m-n)/2}` for n = 0, 1, 2 at every sample.
pub fn check_symbol_bound(
    rel: &DispersionRelation,
    order_m: f64,
    c: f64,
    k_samples: &[f64],
) -> Result<SymbolBoundReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bound constant must be positive, got {c}"
        )));
    }
    let mut smallest = [0.0f64; 3];
    for &k in k_samples {
        for n in 0..=2u8 {
            let weight = (1.0 + k * k).powf((order_m - f64::from(n)) / 2.0);
            let needed = rel.derivative(k, n).abs() / weight;
            smallest[n as usize] = smallest[n as usize].max(needed);
        }
    }
    Ok(SymbolBoundReport {
        holds: smallest.iter().all(|&s| s <= c),
        smallest_constants: smallest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gc(g: f64, s: f64, h: f64) -> DispersionRelation {
        DispersionRelation::gravity_capillary(g, s, h).unwrap()
    }

    #[test]
    fn catalog_values() {
        assert_eq!(DispersionRelation::schrodinger().omega(3.0), 9.0);
        assert_eq!(DispersionRelation::kdv_linear().omega(2.0), -8.0);
        // direct evaluation of √((g k + S k³) tanh(kH)) at g=1, S=0, H=1, k=1
        let expected = ((1.0f64 * 1.0 + 0.0) * 1.0f64.tanh()).sqrt();
        assert_relative_eq!(gc(1.0, 0.0, 1.0).omega(1.0), expected, max_relative = 1e-15);
        assert_relative_eq!(expected, 0.87270, epsilon = 1e-5);
    }

    #[test]
    fn analytic_derivatives() {
        assert_eq!(DispersionRelation::schrodinger().derivative(5.0, 1), 10.0);
        assert_eq!(
            DispersionRelation::transport(2.0)
                .unwrap()
                .derivative(7.0, 2),
            0.0
        );
        assert_eq!(DispersionRelation::kdv_linear().derivative(1.0, 2), -6.0);
    }

    #[test]
    fn gravity_capillary_is_odd() {
        let rel = gc(9.81, 0.072, 1.0);
        for k in [0.0, 1e-3, 0.5, 1.0, 3.7, 10.0, 123.0, 1e4, 1e6] {
            assert_eq!(rel.omega(-k), -rel.omega(k));
            assert!(rel.omega(k).is_finite());
        }
    }

    #[test]
    fn first_derivative_matches_finite_difference() {
        let rels = [
            DispersionRelation::schrodinger(),
            DispersionRelation::kdv_linear(),
            DispersionRelation::transport(-1.3).unwrap(),
            DispersionRelation::power(2.5).unwrap(),
        ];
        for rel in &rels {
            for k in [-100.0, -10.0, -1.0, 1.0, 10.0, 100.0] {
                let h = 1e-6 * f64::max(1.0, f64::abs(k));
                let fd = (rel.omega(k + h) - rel.omega(k - h)) / (2.0 * h);
                assert_relative_eq!(rel.derivative(k, 1), fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn gravity_capillary_derivative_against_closed_form() {
        // d/dk √(f(k)) = f'(k) / (2√f(k)) with f = (gk + Sk³) tanh(kH)
        let (g, s, h) = (1.0, 1.0, 1.0);
        let rel = gc(g, s, h);
        for k in [0.5f64, 1.0, 10.0, 100.0] {
            let f = (g * k + s * k.powi(3)) * (k * h).tanh();
            let fp = (g + 3.0 * s * k * k) * (k * h).tanh()
                + (g * k + s * k.powi(3)) * h / (k * h).cosh().powi(2);
            assert_relative_eq!(
                rel.derivative(k, 1),
                fp / (2.0 * f.sqrt()),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn invalid_gravity_capillary_parameters() {
        assert!(DispersionRelation::gravity_capillary(1.0, 0.0, 0.0).is_err());
        assert!(DispersionRelation::gravity_capillary(0.0, 0.0, 1.0).is_err());
        assert!(DispersionRelation::gravity_capillary(-1.0, 0.5, 1.0).is_err());
        assert!(DispersionRelation::power(0.5).is_err());
    }

    #[test]
    fn superlinearity_verdicts() {
        use SuperlinearityVerdict::*;
        let k = 1024.0;
        assert_eq!(
            check_superlinear(&DispersionRelation::schrodinger(), k)
                .unwrap()
                .verdict,
            Superlinear
        );
        assert_eq!(
            check_superlinear(&DispersionRelation::kdv_linear(), k)
                .unwrap()
                .verdict,
            Superlinear
        );
        assert_eq!(
            check_superlinear(&gc(1.0, 1.0, 1.0), k).unwrap().verdict,
            Superlinear
        );
        assert_eq!(
            check_superlinear(&gc(1.0, 0.0, 1.0), k).unwrap().verdict,
            NotSuperlinear
        );
        assert_eq!(
            check_superlinear(&gc(9.81, 0.0, 4.0), k).unwrap().verdict,
            NotSuperlinear
        );
        for c in [-3.0, -1.0, 0.5, 1.0, 7.0] {
            let rel = DispersionRelation::transport(c).unwrap();
            assert_eq!(check_superlinear(&rel, k).unwrap().verdict, NotSuperlinear);
        }
        assert!(check_superlinear(&DispersionRelation::schrodinger(), 32.0).is_err());
    }

    #[test]
    fn capillary_ratio_tracks_sqrt_sk() {
        // tanh(kH) → 1, so |ω(k)|/k ≈ √(S k) for large k
        let report = check_superlinear(&gc(1.0, 1.0, 1.0), 1024.0).unwrap();
        let last = *report.ratios_positive.last().unwrap();
        assert_relative_eq!(last, (1024.0f64).sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn symbol_bound_examples() {
        let schr = DispersionRelation::schrodinger();
        let samples = [0.0, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0];
        assert!(check_symbol_bound(&schr, 2.0, 3.0, &samples).unwrap().holds);
        assert!(
            !check_symbol_bound(&schr, 1.0, 1.0, &[100.0, -100.0])
                .unwrap()
                .holds
        );
        let tr = DispersionRelation::transport(1.0).unwrap();
        assert!(
            check_symbol_bound(&tr, 1.0, 2.0, &[0.0, 1e4, -1e4])
                .unwrap()
                .holds
        );
        assert!(check_symbol_bound(&tr, 1.0, 0.0, &[0.0]).is_err());
    }

    #[test]
    fn smallest_constants_are_tight() {
        // for k² with m = 2: sup k²/(1+k²) over samples, sup 2|k|/√(1+k²), and 2
        let schr = DispersionRelation::schrodinger();
        let report = check_symbol_bound(&schr, 2.0, 10.0, &[10.0]).unwrap();
        assert_relative_eq!(
            report.smallest_constants[0],
            100.0 / 101.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            report.smallest_constants[1],
            20.0 / 101f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(report.smallest_constants[2], 2.0, max_relative = 1e-14);
    }
}
