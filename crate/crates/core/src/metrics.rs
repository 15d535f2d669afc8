//! Catalog of metric families on `O(m)`: Fubini–Study, canonical, Zhang
//! iterates, smoothings of the canonical metric, and the non-positive
//! counterexample family.  Plus tensor/dual algebra and uniform distance.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{ladder, RadialPotential, Regularity, Shape};

pub fn fubini_study(m: i64) -> RadialPotential {
    if m == 0 {
        return zero();
    }
    RadialPotential::from_shape(
        m,
        Regularity::Smooth,
        m >= 0,
        Shape::FubiniStudy { m: m as f64 },
        format!("fs:{m}"),
    )
}

pub fn canonical(m: i64) -> RadialPotential {
    RadialPotential::from_shape(
        m,
        Regularity::ContinuousPiecewise,
        m >= 0,
        Shape::Canonical { m: m as f64 },
        format!("canonical:{m}"),
    )
}

/// The flat potential on the trivial bundle.
pub fn zero() -> RadialPotential {
    RadialPotential::constant(0.0)
}

/// `p^{-n} φ(p^n t)`: the potential-level pullback under `z ↦ z^{p^n}` followed
/// by the `p^n`-th root.
pub fn zhang_iterate(base: &RadialPotential, p: u32, n: u32) -> Result<RadialPotential> {
    if p < 2 {
        return Err(Error::ParameterConstraint(format!(
            "zhang iteration needs p ≥ 2, got {p}"
        )));
    }
    if !base.positive {
        return Err(Error::NotPositive(format!(
            "zhang iteration needs a positive base, {} is not",
            base.label()
        )));
    }
    if n == 0 || matches!(&*base.shape, Shape::Canonical { .. } | Shape::Constant(_)) {
        return Ok(base.clone());
    }
    let scale = (p as f64).powi(n as i32);
    if !scale.is_finite() {
        return Err(Error::ParameterConstraint(format!("p^n = {p}^{n} overflows")));
    }
    Ok(RadialPotential::from_shape(
        base.degree,
        base.regularity,
        true,
        Shape::Zhang {
            base: base.clone(),
            scale,
        },
        format!("zhang:base={},p={p},n={n}", base.label()),
    ))
}

/// `m ε log(1 + e^{t/(2ε)} + e^{t/ε})`, within `m ε log 3` of `m·max(0,t)`.
pub fn log_sum_exp(m: i64, eps: f64) -> Result<RadialPotential> {
    check_scale(eps)?;
    Ok(RadialPotential::from_shape(
        m,
        Regularity::Smooth,
        m >= 0,
        Shape::LogSumExp { m: m as f64, eps },
        format!("lse:m={m},eps={eps}"),
    ))
}

/// Gaussian mollification of `m·max(0,t)` at width `eps`.
pub fn mollified_max(m: i64, eps: f64) -> Result<RadialPotential> {
    check_scale(eps)?;
    Ok(RadialPotential::from_shape(
        m,
        Regularity::Smooth,
        m >= 0,
        Shape::Mollified { m: m as f64, eps },
        format!("mollified:m={m},eps={eps}"),
    ))
}

fn check_scale(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterConstraint(format!(
            "smoothing width must be positive, got {eps}"
        )))
    }
}

fn flatten(coef: f64, p: &RadialPotential, out: &mut Vec<(f64, RadialPotential)>) {
    match &*p.shape {
        Shape::Combination(parts) => {
            for (k, q) in parts {
                flatten(coef * k, q, out);
            }
        }
        _ => match out.iter_mut().find(|(_, q)| Arc::ptr_eq(&q.shape, &p.shape)) {
            Some(slot) => slot.0 += coef,
            None => out.push((coef, p.clone())),
        },
    }
}

fn collect(parts: Vec<(f64, RadialPotential)>, label: String) -> RadialPotential {
    let mut flat = Vec::new();
    for (k, p) in &parts {
        flatten(*k, p, &mut flat);
    }
    flat.retain(|(k, _)| *k != 0.0);
    match flat.len() {
        0 => zero(),
        1 if flat[0].0 == 1.0 => flat.pop().map(|(_, p)| p).unwrap_or_else(zero),
        _ => {
            let flat_only = flat.iter().all(|(_, p)| matches!(&*p.shape, Shape::Constant(_)));
            let mut q = RadialPotential::combine(flat, label);
            if flat_only {
                q.positive = true;
            }
            q
        }
    }
}

/// Metric on `L₁ ⊗ L₂`: potentials and degrees add.
pub fn tensor(a: &RadialPotential, b: &RadialPotential) -> RadialPotential {
    collect(
        vec![(1.0, a.clone()), (1.0, b.clone())],
        format!("({})⊗({})", a.label(), b.label()),
    )
}

/// Metric on `L⁻¹`.
pub fn dual(a: &RadialPotential) -> RadialPotential {
    collect(vec![(-1.0, a.clone())], format!("({})^-1", a.label()))
}

/// `φ + c`, the metric scaled by `e^{-c}`.
pub fn shifted(a: &RadialPotential, c: f64) -> RadialPotential {
    if c == 0.0 {
        return a.clone();
    }
    let mut q = collect(
        vec![(1.0, a.clone()), (1.0, RadialPotential::constant(c))],
        format!("{}+{c}", a.label()),
    );
    q.positive = a.positive;
    q.regularity = a.regularity;
    q
}

/// `sup_t |a.φ(t) − b.φ(t)|`.
pub fn sup_distance(a: &RadialPotential, b: &RadialPotential) -> Result<f64> {
    if a.degree != b.degree {
        return Err(Error::DegreeMismatch {
            left: a.degree,
            right: b.degree,
        });
    }
    let gap = |t: f64| (a.phi(t) - b.phi(t)).abs();
    let mut pts: Vec<f64> = (-1200..=1200).map(|i| i as f64 * 0.05).collect();
    for x in [100.0, 200.0, 400.0, 800.0] {
        pts.push(x);
        pts.push(-x);
    }
    for bp in a.breakpoints().into_iter().chain(b.breakpoints()) {
        pts.push(bp);
        for k in 1..=8 {
            let h = bp.abs().max(1.0) * 1e-3 * k as f64;
            pts.push(bp - h);
            pts.push(bp + h);
        }
    }
    pts.retain(|t| t.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let vals: Vec<f64> = pts.iter().map(|&t| gap(t)).collect();
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // Golden-section refinement on both neighbouring intervals.
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for (lo, hi) in [
        (pts[best_i.saturating_sub(1)], pts[best_i]),
        (pts[best_i], pts[(best_i + 1).min(pts.len() - 1)]),
    ] {
        let (mut x0, mut x1) = (lo, hi);
        for _ in 0..80 {
            if x1 - x0 <= 1e-15 * x0.abs().max(1e-300) {
                break;
            }
            let c = x1 - phi * (x1 - x0);
            let d = x0 + phi * (x1 - x0);
            if gap(c) >= gap(d) {
                x1 = d;
            } else {
                x0 = c;
            }
            best = best.max(gap(c)).max(gap(d));
        }
    }
    Ok(best)
}

/// Parameters of the counterexample family `f_{c,δ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CexParams {
    pub c: f64,
    pub delta: f64,
    pub eps: f64,
    pub gamma: f64,
    /// Width of each smoothing piece, in `r`.
    pub glue: f64,
}

impl CexParams {
    /// Defaults `ε = 0.2`, `γ = min(0.01, (ε−δ)/8)`, glue width `δ`.
    pub fn new(c: f64, delta: f64) -> Self {
        let eps = 0.2;
        CexParams {
            c,
            delta,
            eps,
            gamma: (0.01f64).min((eps - delta) / 8.0),
            glue: delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let CexParams {
            c,
            delta,
            eps,
            gamma,
            glue,
        } = *self;
        let fail = |msg: String| Err(Error::ParameterConstraint(msg));
        if !(c > 0.0 && c.is_finite()) {
            return fail(format!("c must be positive, got {c}"));
        }
        if !(eps > 0.0 && eps < 0.5) {
            return fail(format!("need 0 < ε < 0.5, got ε = {eps}"));
        }
        if !(delta > 0.0 && delta < eps / 4.0) {
            return fail(format!("need 0 < δ < ε/4, got δ = {delta}, ε = {eps}"));
        }
        if !(gamma > 0.0 && gamma < (eps - delta) / 4.0) {
            return fail(format!("need 0 < γ < (ε−δ)/4, got γ = {gamma}"));
        }
        if !(glue > 0.0 && glue <= 5.0 * delta) {
            return fail(format!("glue width must lie in (0, 5δ], got {glue}"));
        }
        if 1.0 - eps - glue <= 0.0 {
            return fail("support must stay away from r = 0".into());
        }
        if 1.0 - eps + delta + glue > 1.0 - gamma {
            return fail("glue overlaps the plateau [1−γ, 1+γ]".into());
        }
        Ok(())
    }
}

// x³(−4 + 7x − 3x²): joins 0 (flat) to slope 1 at x = 1, C² at both ends.
fn rise(x: f64) -> (f64, f64, f64) {
    let x2 = x * x;
    (
        x2 * x * (-4.0 + 7.0 * x - 3.0 * x2),
        x2 * (-12.0 + 28.0 * x - 15.0 * x2),
        x * (-24.0 + 84.0 * x - 60.0 * x2),
    )
}

// x − 6x³ + 8x⁴ − 3x⁵: leaves slope 1 at x = 0, flat at x = 1, C² at both ends.
fn settle(x: f64) -> (f64, f64, f64) {
    let x2 = x * x;
    (
        x - 6.0 * x2 * x + 8.0 * x2 * x2 - 3.0 * x2 * x2 * x,
        1.0 - 18.0 * x2 + 32.0 * x2 * x - 15.0 * x2 * x2,
        -36.0 * x + 96.0 * x2 - 60.0 * x2 * x,
    )
}

/// The counterexample profile, defined in `r = |z|` and symmetric about `r = 1`.
#[derive(Clone, Debug)]
pub struct CexProfile {
    pub params: CexParams,
    slope: f64,
    height: f64,
    knots: [f64; 4],
}

impl CexProfile {
    pub fn new(params: CexParams) -> Result<Self> {
        params.validate()?;
        let CexParams {
            c, delta, eps, glue, ..
        } = params;
        let a1 = 1.0 - eps;
        let a2 = a1 + delta;
        Ok(CexProfile {
            params,
            slope: c / delta.sqrt(),
            height: c * delta.sqrt(),
            knots: [a1 - glue, a1, a2, a2 + glue],
        })
    }

    /// Left half on `[0, 1]`: `(f, f', f'')` in `r`.
    fn left(&self, r: f64) -> (f64, f64, f64) {
        let [a0, a1, a2, a3] = self.knots;
        let w = self.params.glue;
        let s = self.slope;
        if r <= a0 {
            (0.0, 0.0, 0.0)
        } else if r < a1 {
            let (h, dh, ddh) = rise((r - a0) / w);
            (s * w * h, s * dh, s * ddh / w)
        } else if r < a2 {
            (s * (r - a1), s, 0.0)
        } else if r < a3 {
            let (h, dh, ddh) = settle((r - a2) / w);
            (self.height + s * w * h, s * dh, s * ddh / w)
        } else {
            (self.height, 0.0, 0.0)
        }
    }

    /// `(f, ∂f/∂r, ∂²f/∂r²)` at radius `r ≥ 0`.
    pub fn radial(&self, r: f64) -> (f64, f64, f64) {
        if r <= 1.0 {
            self.left(r)
        } else {
            let (f, d, dd) = self.left(2.0 - r);
            (f, -d, dd)
        }
    }

    /// Radii where the definition changes, in increasing order.
    pub fn radial_knots(&self) -> [f64; 8] {
        let [a0, a1, a2, a3] = self.knots;
        [a0, a1, a2, a3, 2.0 - a3, 2.0 - a2, 2.0 - a1, 2.0 - a0]
    }

    /// The two linear ramps `[1−ε, 1−ε+δ]` and `[1+ε−δ, 1+ε]`.
    pub fn ramps(&self) -> [(f64, f64); 2] {
        let [_, a1, a2, _] = self.knots;
        [(a1, a2), (2.0 - a2, 2.0 - a1)]
    }

    /// Plateau value `c√δ`.
    pub fn height(&self) -> f64 {
        self.height
    }

    /// Ramp slope `c/√δ`.
    pub fn ramp_slope(&self) -> f64 {
        self.slope
    }

    fn support_t(&self) -> (f64, f64) {
        let k = self.radial_knots();
        (2.0 * k[0].ln(), 2.0 * k[7].ln())
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        let (lo, hi) = self.support_t();
        if t <= lo || t >= hi {
            return 0.0;
        }
        self.radial((0.5 * t).exp()).0
    }

    pub(crate) fn slope(&self, t: f64) -> f64 {
        let (lo, hi) = self.support_t();
        if t <= lo || t >= hi {
            return 0.0;
        }
        let r = (0.5 * t).exp();
        0.5 * r * self.radial(r).1
    }

    pub(crate) fn second(&self, t: f64) -> f64 {
        let (lo, hi) = self.support_t();
        if t <= lo || t >= hi {
            return 0.0;
        }
        let r = (0.5 * t).exp();
        let (_, d, dd) = self.radial(r);
        0.25 * r * (d + r * dd)
    }

    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.radial_knots().iter().map(|r| 2.0 * r.ln()).collect();
        b.push(0.0);
        b
    }
}

/// The degree-0, non-positive potential `f_{c,δ}`.
pub fn counterexample_potential(params: CexParams) -> Result<RadialPotential> {
    let prof = CexProfile::new(params)?;
    Ok(RadialPotential::from_shape(
        0,
        Regularity::ContinuousPiecewise,
        false,
        Shape::Counterexample(prof),
        format!(
            "cex:c={},delta={},eps={},gamma={},glue={}",
            params.c, params.delta, params.eps, params.gamma, params.glue
        ),
    ))
}

impl RadialPotential {
    /// The counterexample profile, if this potential is one.
    pub fn counterexample_profile(&self) -> Option<&CexProfile> {
        match &*self.shape {
            Shape::Counterexample(p) => Some(p),
            _ => None,
        }
    }
}

/// A parsed family string such as `fs:2` or `zhang:base=fs:1,p=2,n=5`.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricFamilyParams {
    Zero,
    FubiniStudy {
        m: i64,
    },
    Canonical {
        m: i64,
    },
    Zhang {
        base: Box<MetricFamilyParams>,
        p: u32,
        n: u32,
    },
    LogSumExp {
        m: i64,
        eps: f64,
    },
    Mollified {
        m: i64,
        eps: f64,
    },
    Counterexample(CexParams),
    Grid {
        path: PathBuf,
    },
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse `{v}` as value of `{key}`")))
}

fn key_values(body: &str) -> Result<Vec<(&str, &str)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

impl FromStr for MetricFamilyParams {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (tag, body) = spec.split_once(':').unwrap_or((spec, ""));
        match tag {
            "zero" | "trivial" => Ok(MetricFamilyParams::Zero),
            "fs" => Ok(MetricFamilyParams::FubiniStudy {
                m: parse_num("m", body)?,
            }),
            "canonical" | "can" => Ok(MetricFamilyParams::Canonical {
                m: parse_num("m", body)?,
            }),
            "zhang" => {
                // `base=` may itself contain `:`; it runs up to `,p=`.
                let rest = body
                    .strip_prefix("base=")
                    .ok_or_else(|| Error::Parse("zhang spec must start with base=".into()))?;
                let split = rest
                    .find(",p=")
                    .or_else(|| rest.find(",n="))
                    .ok_or_else(|| Error::Parse("zhang spec needs p= and n=".into()))?;
                let base: MetricFamilyParams = rest[..split].parse()?;
                let (mut p, mut n) = (None, None);
                for (k, v) in key_values(&rest[split + 1..])? {
                    match k {
                        "p" => p = Some(parse_num(k, v)?),
                        "n" => n = Some(parse_num(k, v)?),
                        _ => return Err(Error::Parse(format!("unknown zhang key `{k}`"))),
                    }
                }
                Ok(MetricFamilyParams::Zhang {
                    base: Box::new(base),
                    p: p.ok_or_else(|| Error::Parse("zhang spec missing p".into()))?,
                    n: n.ok_or_else(|| Error::Parse("zhang spec missing n".into()))?,
                })
            }
            "lse" | "mollified" => {
                let (mut m, mut eps) = (None, None);
                for (k, v) in key_values(body)? {
                    match k {
                        "m" => m = Some(parse_num(k, v)?),
                        "eps" => eps = Some(parse_num(k, v)?),
                        _ => return Err(Error::Parse(format!("unknown {tag} key `{k}`"))),
                    }
                }
                let m = m.ok_or_else(|| Error::Parse(format!("{tag} spec missing m")))?;
                let eps = eps.ok_or_else(|| Error::Parse(format!("{tag} spec missing eps")))?;
                Ok(if tag == "lse" {
                    MetricFamilyParams::LogSumExp { m, eps }
                } else {
                    MetricFamilyParams::Mollified { m, eps }
                })
            }
            "cex" => {
                let mut c = None;
                let mut delta = None;
                let mut eps = None;
                let mut gamma = None;
                let mut glue = None;
                for (k, v) in key_values(body)? {
                    let slot = match k {
                        "c" => &mut c,
                        "delta" => &mut delta,
                        "eps" => &mut eps,
                        "gamma" => &mut gamma,
                        "glue" => &mut glue,
                        _ => return Err(Error::Parse(format!("unknown cex key `{k}`"))),
                    };
                    *slot = Some(parse_num::<f64>(k, v)?);
                }
                let c = c.ok_or_else(|| Error::Parse("cex spec missing c".into()))?;
                let delta = delta.ok_or_else(|| Error::Parse("cex spec missing delta".into()))?;
                let mut params = CexParams::new(c, delta);
                if let Some(e) = eps {
                    params.eps = e;
                    params.gamma = (0.01f64).min((e - delta) / 8.0);
                }
                if let Some(g) = gamma {
                    params.gamma = g;
                }
                if let Some(w) = glue {
                    params.glue = w;
                }
                params.validate()?;
                Ok(MetricFamilyParams::Counterexample(params))
            }
            "grid" => {
                if body.is_empty() {
                    return Err(Error::Parse("grid spec needs a path".into()));
                }
                Ok(MetricFamilyParams::Grid {
                    path: PathBuf::from(body),
                })
            }
            _ => Err(Error::Parse(format!("unknown metric family `{tag}` in `{spec}`"))),
        }
    }
}

impl fmt::Display for MetricFamilyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricFamilyParams::Zero => write!(f, "zero"),
            MetricFamilyParams::FubiniStudy { m } => write!(f, "fs:{m}"),
            MetricFamilyParams::Canonical { m } => write!(f, "canonical:{m}"),
            MetricFamilyParams::Zhang { base, p, n } => write!(f, "zhang:base={base},p={p},n={n}"),
            MetricFamilyParams::LogSumExp { m, eps } => write!(f, "lse:m={m},eps={eps}"),
            MetricFamilyParams::Mollified { m, eps } => write!(f, "mollified:m={m},eps={eps}"),
            MetricFamilyParams::Counterexample(p) => write!(
                f,
                "cex:c={},delta={},eps={},gamma={},glue={}",
                p.c, p.delta, p.eps, p.gamma, p.glue
            ),
            MetricFamilyParams::Grid { path } => write!(f, "grid:{}", path.display()),
        }
    }
}

impl MetricFamilyParams {
    pub fn build(&self) -> Result<RadialPotential> {
        match self {
            MetricFamilyParams::Zero => Ok(zero()),
            MetricFamilyParams::FubiniStudy { m } => Ok(fubini_study(*m)),
            MetricFamilyParams::Canonical { m } => Ok(canonical(*m)),
            MetricFamilyParams::Zhang { base, p, n } => zhang_iterate(&base.build()?, *p, *n),
            MetricFamilyParams::LogSumExp { m, eps } => log_sum_exp(*m, *eps),
            MetricFamilyParams::Mollified { m, eps } => mollified_max(*m, *eps),
            MetricFamilyParams::Counterexample(p) => counterexample_potential(*p),
            MetricFamilyParams::Grid { path } => crate::grid::load_grid(path),
        }
    }
}

/// Breakpoint ladder used by callers that build their own feature-resolving
/// quadratures around a narrow structure.
pub fn feature_breakpoints(center: f64, width: f64) -> Vec<f64> {
    ladder(center, width)
}
