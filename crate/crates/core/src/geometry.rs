//! Radial calculus on P¹: curvature measures on the t-line, Monge–Ampère
//! pairings, volume forms and their area measures.
//!
//! A volume form `ω = (i/2π) e^{-ψ} dz∧dz̄` is recorded by the degree-2
//! potential `ψ` of the dual metric on `TP¹`.  On the t-line its area measure
//! is `e^{t − ψ(t)} dt` and its Ricci current `c₁(TP¹, ω)` is `ψ''`.

use std::sync::Arc;

use crate::convergence::{self, ConvergenceReport};
use crate::error::{Error, Result};
use crate::metrics::{self, sup_distance};
use crate::potential::RadialPotential;
use crate::quadrature::{integrate_line, Estimate, Tolerance};

/// A real function of `t`, optionally carrying the points where it is not smooth.
pub trait RadialFunction: Sync {
    fn eval(&self, t: f64) -> f64;
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: Fn(f64) -> f64 + Sync> RadialFunction for F {
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

impl RadialFunction for RadialPotential {
    fn eval(&self, t: f64) -> f64 {
        self.phi(t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        RadialPotential::breakpoints(self)
    }
}

/// A closure together with its non-smooth points.
pub struct WithBreaks<F> {
    pub f: F,
    pub breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> RadialFunction for WithBreaks<F> {
    fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// `a.φ − b.φ`, the log-ratio of two metrics on the same bundle.
pub struct Difference<'a>(pub &'a RadialPotential, pub &'a RadialPotential);

impl RadialFunction for Difference<'_> {
    fn eval(&self, t: f64) -> f64 {
        self.0.phi(t) - self.1.phi(t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.0.breakpoints();
        b.extend(self.1.breakpoints());
        b
    }
}

/// A signed measure on the t-line: atoms plus an absolutely continuous part.
#[derive(Clone)]
pub struct RadialMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub breakpoints: Vec<f64>,
    pub total_mass: f64,
}

impl std::fmt::Debug for RadialMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialMeasure")
            .field("atoms", &self.atoms)
            .field("total_mass", &self.total_mass)
            .finish()
    }
}

impl RadialMeasure {
    /// `∫ f dμ`.
    pub fn integrate(&self, f: &dyn RadialFunction, tol: &Tolerance) -> Result<Estimate> {
        let atoms: f64 = self.atoms.iter().map(|&(t, w)| w * f.eval(t)).sum();
        let mut bps = self.breakpoints.clone();
        bps.extend(f.breakpoints());
        let density = &self.density;
        let body = integrate_line(
            |t| {
                let d = density(t);
                if d == 0.0 {
                    0.0
                } else {
                    d * f.eval(t)
                }
            },
            &bps,
            tol,
        )?;
        Ok(body + Estimate::exact(atoms))
    }

    /// Smallest value of the density over a sampling grid and the atoms.
    pub fn most_negative(&self) -> f64 {
        let mut pts: Vec<f64> = (-2000..=2000).map(|i| i as f64 * 0.01).collect();
        pts.extend(self.breakpoints.iter().copied());
        let dens = pts.iter().map(|&t| (self.density)(t)).fold(f64::INFINITY, f64::min);
        let atoms = self.atoms.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
        dens.min(atoms)
    }
}

/// The curvature measure `dd^c φ` of a potential.
pub fn c1_measure(p: &RadialPotential) -> Result<RadialMeasure> {
    c1_measure_with(p, &Tolerance::default())
}

pub fn c1_measure_with(p: &RadialPotential, tol: &Tolerance) -> Result<RadialMeasure> {
    let atoms = p.atoms();
    let q = p.clone();
    let density: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |t| q.density(t));
    let breakpoints = p.breakpoints();
    let d = &density;
    let body = integrate_line(|t| d(t), &breakpoints, tol).map_err(|e| match e {
        Error::Numerical { diagnostic, .. } => {
            Error::InvalidInput(format!("curvature of {} is not integrable: {diagnostic}", p.label()))
        }
        other => other,
    })?;
    let total_mass = body.value + atoms.iter().map(|a| a.1).sum::<f64>();
    Ok(RadialMeasure {
        atoms,
        density,
        breakpoints,
        total_mass,
    })
}

/// `∫ f dd^c φ`.
pub fn pair(f: &dyn RadialFunction, p: &RadialPotential) -> Result<f64> {
    pair_with(f, p, &Tolerance::default()).map(|e| e.value)
}

pub fn pair_with(f: &dyn RadialFunction, p: &RadialPotential, tol: &Tolerance) -> Result<Estimate> {
    let atoms: f64 = p.atoms().iter().map(|&(t, w)| w * f.eval(t)).sum();
    let mut bps = p.breakpoints();
    bps.extend(f.breakpoints());
    let body = integrate_line(
        |t| {
            let d = p.density(t);
            if d == 0.0 {
                0.0
            } else {
                d * f.eval(t)
            }
        },
        &bps,
        tol,
    )?;
    Ok(body + Estimate::exact(atoms))
}

/// A volume form on P¹ given by the potential of its metric on `TP¹`.
#[derive(Clone, Debug)]
pub struct VolumeForm {
    pub potential: RadialPotential,
    /// Total area when this is a Fubini–Study form, known in closed form.
    fs_area: Option<f64>,
    label: String,
}

impl VolumeForm {
    pub fn from_potential(psi: RadialPotential) -> Result<Self> {
        if psi.degree != 2 {
            return Err(Error::InvalidInput(format!(
                "a metric on TP¹ has degree 2, got degree {} for {}",
                psi.degree,
                psi.label()
            )));
        }
        let label = format!("potential:{}", psi.label());
        Ok(VolumeForm {
            potential: psi,
            fs_area: None,
            label,
        })
    }

    /// `ω∞ = (i/2π) dz∧dz̄ / max(1, |z|⁴)`, total area 2.
    pub fn canonical() -> Self {
        VolumeForm {
            potential: metrics::canonical(2),
            fs_area: None,
            label: "canonical".into(),
        }
    }

    /// Round metric of total area 2.
    pub fn fubini_study() -> Self {
        Self::fubini_study_with_area(2.0)
    }

    /// Round metric scaled to total area `area`.
    pub fn fubini_study_with_area(area: f64) -> Self {
        let psi = metrics::shifted(&metrics::fubini_study(2), -area.ln());
        VolumeForm {
            potential: psi,
            fs_area: Some(area),
            label: if area == 2.0 {
                "fs".into()
            } else {
                format!("fs:area={area}")
            },
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Area of the round metric when this form is one.
    pub fn fubini_study_area(&self) -> Option<f64> {
        self.fs_area
    }

    /// Density of the area measure on the t-line.
    pub fn area_density(&self, t: f64) -> f64 {
        (t - self.potential.phi(t)).exp()
    }

    /// The Ricci current `c₁(TP¹, ω)`, of mass 2.
    pub fn ricci(&self) -> Result<RadialMeasure> {
        c1_measure(&self.potential)
    }

    pub fn area(&self) -> Result<f64> {
        integrate_volume(&|_t: f64| 1.0, self)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.potential.breakpoints()
    }
}

impl std::str::FromStr for VolumeForm {
    type Err = Error;

    /// `canonical`, `fs`, `fs:area=A`, or `potential:SPEC` with `SPEC` any
    /// degree-2 metric family spec such as `lse:m=2,eps=0.3`.
    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "canonical" => return Ok(VolumeForm::canonical()),
            "fs" => return Ok(VolumeForm::fubini_study()),
            _ => {}
        }
        if let Some(area) = spec.strip_prefix("fs:area=") {
            let a: f64 = area
                .parse()
                .map_err(|_| Error::Parse(format!("cannot parse `{area}` as an area")))?;
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::ParameterConstraint(format!("area must be positive, got {a}")));
            }
            return Ok(VolumeForm::fubini_study_with_area(a));
        }
        let body = spec.strip_prefix("potential:").unwrap_or(spec);
        let family: metrics::MetricFamilyParams = body.parse()?;
        VolumeForm::from_potential(family.build()?)
    }
}

/// `∫_{P¹} g ω`.
pub fn integrate_volume(g: &dyn RadialFunction, w: &VolumeForm) -> Result<f64> {
    integrate_volume_with(g, w, &Tolerance::default()).map(|e| e.value)
}

pub fn integrate_volume_with(g: &dyn RadialFunction, w: &VolumeForm, tol: &Tolerance) -> Result<Estimate> {
    let mut bps = w.breakpoints();
    bps.extend(g.breakpoints());
    integrate_line(
        |t| {
            let v = g.eval(t);
            if v == 0.0 {
                0.0
            } else {
                v * w.area_density(t)
            }
        },
        &bps,
        tol,
    )
}

/// Pairing differences of a uniformly convergent sequence against a fixed test
/// function.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct BedfordTaylorReport {
    pub pairings: Vec<f64>,
    pub limit_pairing: f64,
    pub sup_distances: Vec<f64>,
    /// Index after which the pairing differences are non-increasing.
    pub monotone_from: Option<usize>,
    pub report: ConvergenceReport,
}

pub fn bedford_taylor_check(
    pot_seq: &[RadialPotential],
    test_fn: &dyn RadialFunction,
    limit: &RadialPotential,
    epsilon: f64,
    tol: &Tolerance,
) -> Result<BedfordTaylorReport> {
    let limit_pairing = pair_with(test_fn, limit, tol)?.value;
    let mut pairings = Vec::with_capacity(pot_seq.len());
    let mut sup_distances = Vec::with_capacity(pot_seq.len());
    for p in pot_seq {
        pairings.push(pair_with(test_fn, p, tol)?.value);
        sup_distances.push(sup_distance(p, limit)?);
    }
    let report = convergence::against_limit(&pairings, limit_pairing, epsilon, 2);
    let floor = 10.0 * tol.abs;
    let monotone_from = convergence::monotone_after_prefix(&report.gaps, floor);
    Ok(BedfordTaylorReport {
        pairings,
        limit_pairing,
        sup_distances,
        monotone_from,
        report,
    })
}
