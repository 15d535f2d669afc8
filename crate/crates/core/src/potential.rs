//! Radial potentials of S¹-invariant metrics on `O(m)` over the Riemann sphere.
//!
//! A metric is recorded by `φ(t)` with `t = log|z|²` and `|1|² = e^{-φ}` on the
//! standard chart.  The curvature current is `dd^c φ`, normalised so that
//! `dd^c max(0, t)` is the unit Dirac at `t = 0`; on the t-line it is simply the
//! distributional second derivative `φ''`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridData;
use crate::metrics::CexProfile;

/// Smoothness class of a potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    Smooth,
    ContinuousPiecewise,
    Continuous,
}

impl Regularity {
    fn meet(self, other: Regularity) -> Regularity {
        use Regularity::*;
        match (self, other) {
            (Continuous, _) | (_, Continuous) => Continuous,
            (ContinuousPiecewise, _) | (_, ContinuousPiecewise) => ContinuousPiecewise,
            _ => Smooth,
        }
    }
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularity::Smooth => "smooth",
            Regularity::ContinuousPiecewise => "continuous-piecewise",
            Regularity::Continuous => "continuous",
        })
    }
}

#[derive(Debug)]
pub(crate) enum Shape {
    Constant(f64),
    FubiniStudy { m: f64 },
    Canonical { m: f64 },
    LogSumExp { m: f64, eps: f64 },
    Mollified { m: f64, eps: f64 },
    Zhang { base: RadialPotential, scale: f64 },
    Counterexample(CexProfile),
    Grid(GridData),
    Combination(Vec<(f64, RadialPotential)>),
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^{-x})`.
#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[inline]
fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Breakpoints resolving a feature of width `scale` centred at `center`.
pub(crate) fn ladder(center: f64, scale: f64) -> Vec<f64> {
    let mut v = vec![center];
    for k in [1.0, 4.0, 16.0, 64.0] {
        v.push(center - k * scale);
        v.push(center + k * scale);
    }
    v
}

/// Softmax weights of `(0, a/2, a)`.
fn lse3_weights(a: f64) -> (f64, f64, f64) {
    let top = a.max(0.5 * a).max(0.0);
    let w0 = (-top).exp();
    let w1 = (0.5 * a - top).exp();
    let w2 = (a - top).exp();
    let z = w0 + w1 + w2;
    (w0 / z, w1 / z, w2 / z)
}

impl Shape {
    fn phi(&self, t: f64) -> f64 {
        match self {
            Shape::Constant(c) => *c,
            Shape::FubiniStudy { m } => m * softplus(t),
            Shape::Canonical { m } => m * t.max(0.0),
            Shape::LogSumExp { m, eps } => {
                let a = t / eps;
                let top = a.max(0.0);
                m * eps * (top + ((-top).exp() + (0.5 * a - top).exp() + (a - top).exp()).ln())
            }
            Shape::Mollified { m, eps } => {
                let x = t / eps;
                m * (t * normal_cdf(x) + eps * normal_pdf(x))
            }
            Shape::Zhang { base, scale } => {
                let st = scale * t;
                if st.is_finite() {
                    base.phi(st) / scale
                } else {
                    base.degree as f64 * t.max(0.0)
                }
            }
            Shape::Counterexample(c) => c.value(t),
            Shape::Grid(g) => g.value(t),
            Shape::Combination(parts) => parts.iter().map(|(k, p)| k * p.phi(t)).sum(),
        }
    }

    fn slope(&self, t: f64) -> f64 {
        match self {
            Shape::Constant(_) => 0.0,
            Shape::FubiniStudy { m } => m * logistic(t),
            Shape::Canonical { m } => {
                if t >= 0.0 {
                    *m
                } else {
                    0.0
                }
            }
            Shape::LogSumExp { m, eps } => {
                let (_, w1, w2) = lse3_weights(t / eps);
                m * (0.5 * w1 + w2)
            }
            Shape::Mollified { m, eps } => m * normal_cdf(t / eps),
            Shape::Zhang { base, scale } => {
                let st = scale * t;
                if st.is_finite() {
                    base.slope(st)
                } else if t > 0.0 {
                    base.degree as f64
                } else {
                    0.0
                }
            }
            Shape::Counterexample(c) => c.slope(t),
            Shape::Grid(g) => g.slope(t),
            Shape::Combination(parts) => parts.iter().map(|(k, p)| k * p.slope(t)).sum(),
        }
    }

    fn density(&self, t: f64) -> f64 {
        match self {
            Shape::Constant(_) | Shape::Canonical { .. } => 0.0,
            Shape::FubiniStudy { m } => {
                let s = logistic(t);
                let c = logistic(-t);
                m * s * c
            }
            Shape::LogSumExp { m, eps } => {
                let (_, w1, w2) = lse3_weights(t / eps);
                let mean = 0.5 * w1 + w2;
                let second = 0.25 * w1 + w2;
                m * (second - mean * mean).max(0.0) / eps
            }
            Shape::Mollified { m, eps } => m * normal_pdf(t / eps) / eps,
            Shape::Zhang { base, scale } => {
                let st = scale * t;
                if st.is_finite() {
                    scale * base.density(st)
                } else {
                    0.0
                }
            }
            Shape::Counterexample(c) => c.second(t),
            Shape::Grid(g) => g.second(t),
            Shape::Combination(parts) => parts.iter().map(|(k, p)| k * p.density(t)).sum(),
        }
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Shape::Canonical { m } if *m != 0.0 => vec![(0.0, *m)],
            Shape::Zhang { base, scale } => base.atoms().into_iter().map(|(t, w)| (t / scale, w)).collect(),
            Shape::Grid(g) => g.atoms(),
            Shape::Combination(parts) => {
                let mut out: Vec<(f64, f64)> = Vec::new();
                for (k, p) in parts {
                    for (t, w) in p.atoms() {
                        match out.iter_mut().find(|(s, _)| *s == t) {
                            Some(slot) => slot.1 += k * w,
                            None => out.push((t, k * w)),
                        }
                    }
                }
                out.retain(|(_, w)| *w != 0.0);
                out.sort_by(|a, b| a.0.total_cmp(&b.0));
                out
            }
            _ => Vec::new(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Shape::Constant(_) => Vec::new(),
            Shape::FubiniStudy { .. } => ladder(0.0, 1.0),
            Shape::Canonical { .. } => vec![0.0],
            Shape::LogSumExp { eps, .. } | Shape::Mollified { eps, .. } => ladder(0.0, *eps),
            Shape::Zhang { base, scale } => base
                .breakpoints()
                .into_iter()
                .map(|t| t / scale)
                .filter(|t| t.is_finite())
                .collect(),
            Shape::Counterexample(c) => c.breakpoints(),
            Shape::Grid(g) => g.breakpoints(),
            Shape::Combination(parts) => parts.iter().flat_map(|(_, p)| p.breakpoints()).collect(),
        }
    }
}

/// A radial metric potential on `O(degree)`.
///
/// Cheap to clone: the shape is shared.
#[derive(Clone)]
pub struct RadialPotential {
    pub degree: i64,
    pub regularity: Regularity,
    pub positive: bool,
    pub(crate) shape: Arc<Shape>,
    pub(crate) label: Arc<str>,
}

impl fmt::Debug for RadialPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialPotential")
            .field("label", &self.label)
            .field("degree", &self.degree)
            .field("regularity", &self.regularity)
            .field("positive", &self.positive)
            .finish()
    }
}

impl RadialPotential {
    pub(crate) fn from_shape(
        degree: i64,
        regularity: Regularity,
        positive: bool,
        shape: Shape,
        label: impl Into<String>,
    ) -> Self {
        RadialPotential {
            degree,
            regularity,
            positive,
            shape: Arc::new(shape),
            label: Arc::from(label.into()),
        }
    }

    /// Potential identically equal to `c` on the trivial bundle.
    pub fn constant(c: f64) -> Self {
        Self::from_shape(0, Regularity::Smooth, true, Shape::Constant(c), format!("const:{c}"))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.shape.phi(t)
    }

    /// `φ'(t)`; at a kink this is the right derivative.
    pub fn slope(&self, t: f64) -> f64 {
        self.shape.slope(t)
    }

    /// Absolutely continuous part of `φ''(t)`.
    pub fn density(&self, t: f64) -> f64 {
        self.shape.density(t)
    }

    /// Point masses of `φ''`, sorted by location.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut a = self.shape.atoms();
        a.sort_by(|x, y| x.0.total_cmp(&y.0));
        a
    }

    /// Points where `φ` or its low derivatives change character, plus ladders
    /// around narrow features.  Used to split quadratures.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.shape.breakpoints();
        b.extend(self.atoms().into_iter().map(|(t, _)| t));
        b.retain(|t| t.is_finite());
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `φ(t) − m·max(0, t)`, bounded for every valid potential.
    pub fn offset(&self, t: f64) -> f64 {
        self.phi(t) - self.degree as f64 * t.max(0.0)
    }

    /// Returns the Fubini–Study degree if this is exactly a catalog FS potential.
    pub fn as_fubini_study(&self) -> Option<i64> {
        match &*self.shape {
            Shape::FubiniStudy { .. } => Some(self.degree),
            Shape::Constant(c) if *c == 0.0 => Some(0),
            _ => None,
        }
    }

    pub(crate) fn combine(parts: Vec<(f64, RadialPotential)>, label: String) -> Self {
        let degree = parts.iter().map(|(k, p)| (*k as i64) * p.degree).sum::<i64>();
        let regularity = parts.iter().fold(Regularity::Smooth, |r, (_, p)| r.meet(p.regularity));
        let positive = parts.iter().all(|(k, p)| *k >= 0.0 && p.positive);
        Self::from_shape(degree, regularity, positive, Shape::Combination(parts), label)
    }

    /// Checks the potential invariants on a wide sampling grid: finiteness,
    /// bounded offset from `m·max(0,t)`, and convexity when flagged positive.
    pub fn validate(&self) -> Result<()> {
        let samples: Vec<f64> = (-4000..=4000).map(|i| i as f64 * 0.05).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in &samples {
            let v = self.phi(t);
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{}: φ({t}) is not finite", self.label)));
            }
            let o = self.offset(t);
            lo = lo.min(o);
            hi = hi.max(o);
        }
        // The offset must settle at both ends.
        for &(a, b) in &[(-200.0, -100.0), (100.0, 200.0)] {
            let d = (self.offset(a) - self.offset(b)).abs();
            if d > 1e-6 * (1.0 + hi.abs().max(lo.abs())) {
                return Err(Error::InvalidInput(format!(
                    "{}: φ − {}·max(0,t) is not bounded (drift {d:.3e} between t={a} and t={b})",
                    self.label, self.degree
                )));
            }
        }
        if self.positive {
            self.check_convex(&samples)?;
        }
        Ok(())
    }

    fn check_convex(&self, samples: &[f64]) -> Result<()> {
        let mut pts: Vec<f64> = samples.to_vec();
        for b in self.breakpoints() {
            if b.abs() < 200.0 {
                pts.push(b);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        for w in pts.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            let (fa, fb, fc) = (self.phi(a), self.phi(b), self.phi(c));
            let lin = fa + (fc - fa) * (b - a) / (c - a);
            let tol = 1e-9 * (1.0 + fa.abs().max(fb.abs()).max(fc.abs()));
            if fb > lin + tol {
                return Err(Error::NotPositive(format!(
                    "{}: flagged positive but not convex near t={b}",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn lse_weights_sum_to_one() {
        for a in [-800.0, -3.0, 0.0, 2.5, 900.0] {
            let (x, y, z) = lse3_weights(a);
            assert!((x + y + z - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_has_no_curvature() {
        let p = RadialPotential::constant(1.5);
        assert_eq!(p.phi(3.0), 1.5);
        assert_eq!(p.density(0.2), 0.0);
        assert!(p.atoms().is_empty());
        p.validate().unwrap();
    }

    #[test]
    fn unbounded_offset_is_rejected() {
        let p = RadialPotential::from_shape(
            1,
            Regularity::Smooth,
            false,
            Shape::FubiniStudy { m: 2.0 },
            "mislabelled",
        );
        assert!(p.validate().is_err());
    }
}
