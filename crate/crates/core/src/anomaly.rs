//! Anomaly integrals: how the log-Quillen metric moves when the bundle metric
//! or the volume form changes.
//!
//! With `log h_Q = log det Gram + T`, for metrics `φ, φ'` on `O(m)` and volume
//! forms `ω, ω'` with potentials `ψ, ψ'`:
//!
//! ```text
//! log h_Q(φ, ω) − log h_Q(φ', ω) = −∫ (φ − φ') [ ½ Ric_ω + ½ (dd^c φ + dd^c φ') ]
//! log h_Q(φ, ω) − log h_Q(φ, ω') = −∫ (ψ − ψ') [ ½ dd^c φ + (Ric_ω + Ric_ω') / 12 ]
//! ```
//!
//! The bracketed integrals are what [`bundle_anomaly`] and [`volume_anomaly`]
//! return.  Both only need continuous potentials: every term is a pairing of a
//! bounded continuous function against a curvature measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pair_with, Difference, VolumeForm};
use crate::potential::RadialPotential;
use crate::quadrature::{Estimate, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyKind {
    Bundle,
    Volume,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyTerm {
    pub kind: AnomalyKind,
    pub value: f64,
    pub err: f64,
    /// `("todd", …)` is the part paired against the Ricci forms, `("chern", …)`
    /// the part paired against the bundle curvature.
    pub contributions: Vec<(String, f64)>,
}

/// `∫ (φ − φ') [½ Ric_ω + ½ (dd^c φ + dd^c φ')]`.
pub fn bundle_anomaly(p: &RadialPotential, p2: &RadialPotential, w: &VolumeForm) -> Result<AnomalyTerm> {
    bundle_anomaly_with(p, p2, w, &Tolerance::default())
}

pub fn bundle_anomaly_with(
    p: &RadialPotential,
    p2: &RadialPotential,
    w: &VolumeForm,
    tol: &Tolerance,
) -> Result<AnomalyTerm> {
    if p.degree != p2.degree {
        return Err(Error::DegreeMismatch {
            left: p.degree,
            right: p2.degree,
        });
    }
    let u = Difference(p, p2);
    let todd = pair_with(&u, &w.potential, tol)? * 0.5;
    let chern = (pair_with(&u, p, tol)? + pair_with(&u, p2, tol)?) * 0.5;
    Ok(finish(AnomalyKind::Bundle, todd, chern))
}

/// `∫ (ψ − ψ') [½ dd^c φ + (Ric_ω + Ric_ω')/12]`.
pub fn volume_anomaly(p: &RadialPotential, w: &VolumeForm, w2: &VolumeForm) -> Result<AnomalyTerm> {
    volume_anomaly_with(p, w, w2, &Tolerance::default())
}

pub fn volume_anomaly_with(
    p: &RadialPotential,
    w: &VolumeForm,
    w2: &VolumeForm,
    tol: &Tolerance,
) -> Result<AnomalyTerm> {
    let v = Difference(&w.potential, &w2.potential);
    let chern = pair_with(&v, p, tol)? * 0.5;
    let todd = (pair_with(&v, &w.potential, tol)? + pair_with(&v, &w2.potential, tol)?) * (1.0 / 12.0);
    Ok(finish(AnomalyKind::Volume, todd, chern))
}

fn finish(kind: AnomalyKind, todd: Estimate, chern: Estimate) -> AnomalyTerm {
    let total = todd + chern;
    AnomalyTerm {
        kind,
        value: total.value,
        err: total.error,
        contributions: vec![("todd".into(), todd.value), ("chern".into(), chern.value)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{canonical, fubini_study, log_sum_exp, mollified_max, shifted, zhang_iterate};

    fn tol() -> Tolerance {
        Tolerance::with_abs(1e-12)
    }

    #[test]
    fn vanishes_on_identical_data() {
        let w = VolumeForm::fubini_study();
        let p = fubini_study(2);
        assert_eq!(bundle_anomaly(&p, &p, &w).unwrap().value, 0.0);
        assert_eq!(volume_anomaly(&p, &w, &w).unwrap().value, 0.0);
    }

    #[test]
    fn constant_shift_is_mass() {
        // u ≡ a: ½·2a from the Ricci mass, ½·2m·a from the curvature masses.
        let w = VolumeForm::fubini_study();
        for m in 0..5 {
            let p = fubini_study(m);
            let a = 0.3;
            let t = bundle_anomaly_with(&shifted(&p, a), &p, &w, &tol()).unwrap();
            assert!((t.value - a * (m as f64 + 1.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn antisymmetry() {
        let w = VolumeForm::canonical();
        let a = fubini_study(2);
        let b = zhang_iterate(&fubini_study(2), 2, 3).unwrap();
        let x = bundle_anomaly_with(&a, &b, &w, &tol()).unwrap().value;
        let y = bundle_anomaly_with(&b, &a, &w, &tol()).unwrap().value;
        assert!((x + y).abs() < 1e-10);
        let w2 = VolumeForm::fubini_study();
        let x = volume_anomaly_with(&a, &w, &w2, &tol()).unwrap().value;
        let y = volume_anomaly_with(&a, &w2, &w, &tol()).unwrap().value;
        assert!((x + y).abs() < 1e-10);
    }

    #[test]
    fn bundle_cocycle() {
        let w = VolumeForm::fubini_study();
        let a = fubini_study(3);
        let b = log_sum_exp(3, 0.3).unwrap();
        let c = mollified_max(3, 0.2).unwrap();
        let ab = bundle_anomaly_with(&a, &b, &w, &tol()).unwrap().value;
        let bc = bundle_anomaly_with(&b, &c, &w, &tol()).unwrap().value;
        let ac = bundle_anomaly_with(&a, &c, &w, &tol()).unwrap().value;
        assert!((ab + bc - ac).abs() < 1e-9);
    }

    #[test]
    fn volume_cocycle() {
        let p = canonical(2);
        let a = VolumeForm::fubini_study();
        let b = VolumeForm::canonical();
        let c = VolumeForm::from_potential(log_sum_exp(2, 0.25).unwrap()).unwrap();
        let ab = volume_anomaly_with(&p, &a, &b, &tol()).unwrap().value;
        let bc = volume_anomaly_with(&p, &b, &c, &tol()).unwrap().value;
        let ac = volume_anomaly_with(&p, &a, &c, &tol()).unwrap().value;
        assert!((ab + bc - ac).abs() < 1e-9);
    }

    #[test]
    fn degree_mismatch() {
        let w = VolumeForm::fubini_study();
        assert!(bundle_anomaly(&fubini_study(1), &fubini_study(2), &w).is_err());
    }
}
