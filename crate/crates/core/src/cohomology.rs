//! L² metrics on `det H⁰(P¹, O(m))` in the monomial basis `1, z, …, z^m`.
//!
//! Radial metrics make the monomials orthogonal, so the Gram matrix is diagonal
//! with `g_k = ∫ e^{(k+1)t − φ(t) − ψ(t)} dt`, where `ψ` is the volume-form
//! potential.  The L² metric of the wedge of the basis is `det = ∏ g_k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convergence::{self, ConvergenceReport};
use crate::error::{Error, Result};
use crate::geometry::VolumeForm;
use crate::metrics::sup_distance;
use crate::potential::RadialPotential;
use crate::quadrature::{integrate, integrate_line, Estimate, Tolerance};
use crate::special::ln_factorial;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramData {
    pub m: i64,
    pub entries: Vec<f64>,
    pub entry_errors: Vec<f64>,
    pub det: f64,
    pub log_det: f64,
    /// Absolute error bound on `log_det`.
    pub err: f64,
}

impl GramData {
    /// Builds Gram data from given diagonal entries (no quadrature).
    pub fn from_entries(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidInput("Gram entries must be positive and finite".into()));
        }
        let log_det = entries.iter().map(|g| g.ln()).sum();
        Ok(GramData {
            m: entries.len() as i64 - 1,
            entry_errors: vec![0.0; entries.len()],
            det: entries.iter().product(),
            log_det,
            entries,
            err: 0.0,
        })
    }
}

pub(crate) fn require_sections(p: &RadialPotential) -> Result<usize> {
    if p.degree < 0 {
        return Err(Error::InvalidInput(format!(
            "O({}) has no sections; L² and torsion computations need m ≥ 0",
            p.degree
        )));
    }
    Ok(p.degree as usize)
}

/// `g_k` for one `k`.
pub fn gram_entry(p: &RadialPotential, w: &VolumeForm, k: usize, tol: &Tolerance) -> Result<Estimate> {
    let mut bps = p.breakpoints();
    bps.extend(w.breakpoints());
    let kk = (k + 1) as f64;
    integrate_line(|t| (kk * t - p.phi(t) - w.potential.phi(t)).exp(), &bps, tol).map_err(|e| match e {
        Error::Numerical { diagnostic, .. } => {
            Error::numerical(format!("gram entry k={k} for {}", p.label()), diagnostic)
        }
        other => other,
    })
}

pub fn gram(p: &RadialPotential, w: &VolumeForm) -> Result<GramData> {
    gram_with(p, w, &Tolerance::default())
}

pub fn gram_with(p: &RadialPotential, w: &VolumeForm, tol: &Tolerance) -> Result<GramData> {
    let m = require_sections(p)?;
    let est: Vec<Estimate> = (0..=m)
        .into_par_iter()
        .map(|k| gram_entry(p, w, k, tol))
        .collect::<Result<_>>()?;
    let entries: Vec<f64> = est.iter().map(|e| e.value).collect();
    if entries.iter().any(|g| g.is_nan() || *g <= 0.0) {
        return Err(Error::numerical("gram", format!("non-positive entry in {entries:?}")));
    }
    let log_det = entries.iter().map(|g| g.ln()).sum();
    let err = est.iter().map(|e| e.error / e.value).sum();
    Ok(GramData {
        m: m as i64,
        det: entries.iter().product(),
        entry_errors: est.iter().map(|e| e.error).collect(),
        log_det,
        entries,
        err,
    })
}

/// The L² metric of the monomial wedge, `det Gram`.
pub fn l2_det_metric(g: &GramData) -> f64 {
    g.det
}

/// `log det` of the Gram matrix of `O(m)_FS` against the round metric of area
/// `area`, in closed form: `g_k = area · k!(m−k)!/(m+1)!`.
pub fn fubini_study_log_det(m: u64, area: f64) -> f64 {
    (0..=m)
        .map(|k| area.ln() + ln_factorial(k) + ln_factorial(m - k) - ln_factorial(m + 1))
        .sum()
}

/// `log((m+2)^{m+1} / ((m+1)!)²)`, the log Gram determinant of the canonical
/// metric against `ω∞`.
pub fn canonical_log_det(m: u64) -> f64 {
    (m + 1) as f64 * ((m + 2) as f64).ln() - 2.0 * ln_factorial(m + 1)
}

/// Brute-force `(z^j, z^k)_{L²}` by 2-D quadrature in `(r, θ)`; the real part
/// only, since for radial data the imaginary part is odd in `θ`.
pub fn gram_entry_polar(p: &RadialPotential, w: &VolumeForm, j: usize, k: usize, tol: &Tolerance) -> Result<f64> {
    let n = j as f64 - k as f64;
    let power = (j + k) as f64;
    let angular = |_r: f64| -> Result<f64> {
        if n == 0.0 {
            Ok(2.0 * std::f64::consts::PI)
        } else {
            integrate(|th: f64| (n * th).cos(), 0.0, 2.0 * std::f64::consts::PI, tol).map(|e| e.value)
        }
    };
    // ω = (1/π) e^{-ψ} r dr dθ; the weight e^{-φ} comes from the bundle metric.
    let radial = |r: f64| -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let t = 2.0 * r.ln();
        (power * r.ln() - p.phi(t) - w.potential.phi(t)).exp() * r / std::f64::consts::PI
    };
    let ang = angular(1.0)?;
    // Split at r = 1 and map [1, ∞) through r = 1/s.
    let mut bps_r: Vec<f64> = p
        .breakpoints()
        .into_iter()
        .chain(w.breakpoints())
        .map(|t| (0.5 * t).exp())
        .filter(|r| *r > 0.0 && *r < 1.0)
        .collect();
    bps_r.push(0.0);
    bps_r.push(1.0);
    bps_r.sort_by(f64::total_cmp);
    bps_r.dedup();
    let mut inner = 0.0;
    for win in bps_r.windows(2) {
        inner += integrate(radial, win[0], win[1], tol)?.value;
    }
    let mut bps_s: Vec<f64> = p
        .breakpoints()
        .into_iter()
        .chain(w.breakpoints())
        .map(|t| (-0.5 * t).exp())
        .filter(|s| *s > 0.0 && *s < 1.0)
        .collect();
    bps_s.push(0.0);
    bps_s.push(1.0);
    bps_s.sort_by(f64::total_cmp);
    bps_s.dedup();
    let mut outer = 0.0;
    for win in bps_s.windows(2) {
        outer += integrate(
            |s: f64| if s <= 0.0 { 0.0 } else { radial(1.0 / s) / (s * s) },
            win[0],
            win[1],
            tol,
        )?
        .value;
    }
    Ok(ang * (inner + outer))
}

/// Gram determinants along a uniformly convergent sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramConvergence {
    pub log_dets: Vec<f64>,
    pub limit_log_det: f64,
    pub det_differences: Vec<f64>,
    pub sup_distances: Vec<f64>,
    /// `|log det_n − log det_∞| ≤ (m+1)·sup|φ_n − φ_∞|` held for every index.
    pub sandwich_holds: bool,
    pub report: ConvergenceReport,
}

pub fn gram_convergence(
    p_seq: &[RadialPotential],
    limit: &RadialPotential,
    w: &VolumeForm,
    epsilon: f64,
    tol: &Tolerance,
) -> Result<GramConvergence> {
    let lim = gram_with(limit, w, tol)?;
    let mut log_dets = Vec::new();
    let mut diffs = Vec::new();
    let mut sups = Vec::new();
    let mut ok = true;
    for p in p_seq {
        if p.degree != limit.degree {
            return Err(Error::DegreeMismatch {
                left: p.degree,
                right: limit.degree,
            });
        }
        let g = gram_with(p, w, tol)?;
        let d = sup_distance(p, limit)?;
        let bound = (lim.m + 1) as f64 * d;
        if (g.log_det - lim.log_det).abs() > bound + g.err + lim.err + 1e-12 {
            ok = false;
        }
        diffs.push((g.det - lim.det).abs());
        log_dets.push(g.log_det);
        sups.push(d);
    }
    let dets: Vec<f64> = log_dets.iter().map(|l| l.exp()).collect();
    let report = convergence::against_limit(&dets, lim.det, epsilon, 2);
    Ok(GramConvergence {
        log_dets,
        limit_log_det: lim.log_det,
        det_differences: diffs,
        sup_distances: sups,
        sandwich_holds: ok,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{canonical, fubini_study, shifted, zero};

    fn tol() -> Tolerance {
        Tolerance {
            abs: 1e-13,
            rel: 1e-13,
            max_subdivisions: 4000,
        }
    }

    #[test]
    fn canonical_entries_closed_form() {
        let w = VolumeForm::canonical();
        for m in 0..=6u64 {
            let g = gram_with(&canonical(m as i64), &w, &tol()).unwrap();
            for (k, gk) in g.entries.iter().enumerate() {
                // ∫₀¹ + ∫₁^∞ split in r: 1/(k+1) + 1/(m+1−k), times the factor 1 from (1/π)·2π·½
                let exact = 1.0 / (k as f64 + 1.0) + 1.0 / (m as f64 + 1.0 - k as f64);
                assert!((gk - exact).abs() < 1e-12, "m={m} k={k}");
            }
            assert!((g.log_det - canonical_log_det(m)).abs() < 1e-11);
        }
    }

    #[test]
    fn fubini_study_entries_closed_form() {
        for &area in &[1.0, 2.0] {
            let w = VolumeForm::fubini_study_with_area(area);
            for m in 0..=5u64 {
                let g = gram_with(&fubini_study(m as i64), &w, &tol()).unwrap();
                assert!((g.log_det - fubini_study_log_det(m, area)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn trivial_bundle_gives_area() {
        let g = gram(&zero(), &VolumeForm::canonical()).unwrap();
        assert!((g.entries[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn palindrome_for_inversion_symmetric_data() {
        let g = gram_with(&canonical(5), &VolumeForm::canonical(), &tol()).unwrap();
        for k in 0..=5 {
            assert!((g.entries[k] - g.entries[5 - k]).abs() < 1e-10);
        }
        let g = gram_with(&fubini_study(4), &VolumeForm::fubini_study(), &tol()).unwrap();
        for k in 0..=4 {
            assert!((g.entries[k] - g.entries[4 - k]).abs() < 1e-10);
        }
    }

    #[test]
    fn scaling_the_metric() {
        let a = 0.37;
        let w = VolumeForm::fubini_study();
        for m in 0..4 {
            let p = fubini_study(m);
            let g0 = gram_with(&p, &w, &tol()).unwrap();
            let g1 = gram_with(&shifted(&p, a), &w, &tol()).unwrap();
            // h → e^{-a} h multiplies each entry by e^{-a}
            assert!((g1.log_det - g0.log_det + a * (m + 1) as f64).abs() < 1e-11);
        }
    }

    #[test]
    fn unit_diagonal() {
        let g = GramData::from_entries(vec![1.0; 4]).unwrap();
        assert_eq!(l2_det_metric(&g), 1.0);
        assert!(GramData::from_entries(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn negative_degree_rejected() {
        assert!(gram(&fubini_study(-1), &VolumeForm::canonical()).is_err());
    }

    #[test]
    fn polar_brute_force_matches() {
        let t = Tolerance {
            abs: 1e-11,
            rel: 1e-11,
            max_subdivisions: 4000,
        };
        for m in 0..=3i64 {
            for (p, w) in [
                (fubini_study(m), VolumeForm::fubini_study()),
                (fubini_study(m), VolumeForm::canonical()),
            ] {
                let g = gram_with(&p, &w, &t).unwrap();
                for k in 0..=m as usize {
                    let b = gram_entry_polar(&p, &w, k, k, &t).unwrap();
                    assert!((b - g.entries[k]).abs() < 1e-7, "m={m} k={k}");
                }
                if m >= 1 {
                    let off = gram_entry_polar(&p, &w, 0, 1, &t).unwrap();
                    assert!(off.abs() < 1e-12, "{off}");
                }
            }
        }
    }
}
