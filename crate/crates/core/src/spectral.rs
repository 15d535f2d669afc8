//! Zeta-regularised torsion of `O(m)` with the Fubini–Study metrics.
//!
//! For the round metric of area 1 the ∂̄-Laplacian on `(0,1)`-forms with values
//! in `O(m)`, `m ≥ 0`, has positive spectrum `λ_k = k(k+m+1)` with multiplicity
//! `2k+m+1`, `k ≥ 1`.  Scaling the area by `A` divides the spectrum by `A`.
//! The torsion is `ζ'(0)` of that spectrum.
//!
//! Writing `x = k + a` with `a = (m+1)/2` gives `λ_k = x² − a²`, multiplicity
//! `2x`, and the binomial expansion of `(1 − a²/x²)^{-s}` turns the tail
//! `k > K` into Hurwitz zeta values at `q = K + 1 + a`:
//!
//! ```text
//! Z'(0)  = 4 ζ_H'(−1, q) − 2a² ψ(q) + Σ_{j≥2} (2a^{2j}/j) ζ_H(2j−1, q)
//! Z(0)   = 2 ζ_H(−1, q) + a²
//! ```
//!
//! The first `K` eigenvalues are summed directly.  With `q ≥ 3a + 3` the
//! `j`-series ratio is at most `1/9`.

use crate::error::{Error, Result};
use crate::special::{digamma, hurwitz_zeta, hurwitz_zeta_deriv};

/// `(λ_k, multiplicity)` on the round sphere of area `area`.
pub fn fs_eigenvalue(m: u64, area: f64, k: u64) -> (f64, u64) {
    let kf = k as f64;
    (kf * (kf + m as f64 + 1.0) / area, 2 * k + m + 1)
}

/// Spectral zeta data: `ζ(0)` and `ζ'(0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZetaAtZero {
    pub value: f64,
    pub derivative: f64,
}

/// `ζ(0)` and `ζ'(0)` of the spectrum, area-1 scale, with `K` direct terms.
pub fn zeta_at_zero_with_shift(m: u64, shift: u64) -> Result<ZetaAtZero> {
    let a = 0.5 * (m as f64 + 1.0);
    let mut value = 0.0;
    let mut derivative = 0.0;
    for k in 1..=shift {
        let (lam, mult) = fs_eigenvalue(m, 1.0, k);
        value += mult as f64;
        derivative -= mult as f64 * lam.ln();
    }
    let q = shift as f64 + 1.0 + a;
    let a2 = a * a;
    value += 2.0 * hurwitz_zeta(-1.0, q) + a2;
    derivative += 4.0 * hurwitz_zeta_deriv(-1.0, q) - 2.0 * a2 * digamma(q);
    let mut a2j = a2;
    let mut converged = false;
    for j in 2..400 {
        a2j *= a2;
        let term = 2.0 * a2j / j as f64 * hurwitz_zeta((2 * j - 1) as f64, q);
        derivative += term;
        if term.abs() <= 1e-17 * derivative.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged || !derivative.is_finite() {
        return Err(Error::numerical(
            "spectral zeta continuation",
            format!("binomial series did not settle for m={m}, K={shift}"),
        ));
    }
    Ok(ZetaAtZero { value, derivative })
}

/// `Σ_k mult·λ_k^{-s}` (area 1) continued to real `s`, away from `s = 1` and
/// the points where `2s + 2j − 1 = 1`.
pub fn spectral_zeta(m: u64, s: f64, shift: u64) -> f64 {
    let a = 0.5 * (m as f64 + 1.0);
    let mut total = 0.0;
    for k in 1..=shift {
        let (lam, mult) = fs_eigenvalue(m, 1.0, k);
        total += mult as f64 * lam.powf(-s);
    }
    let q = shift as f64 + 1.0 + a;
    let a2 = a * a;
    // (s)_j / j! · a^{2j} · 2 ζ_H(2s + 2j − 1, q)
    let mut coef = 1.0;
    let mut a2j = 1.0;
    for j in 0..400 {
        if j > 0 {
            coef *= (s + j as f64 - 1.0) / j as f64;
            a2j *= a2;
        }
        let term = coef * a2j * 2.0 * hurwitz_zeta(2.0 * s + 2.0 * j as f64 - 1.0, q);
        total += term;
        if j > 2 && term.abs() <= 1e-17 * total.abs().max(1.0) {
            break;
        }
    }
    total
}

fn default_shift(m: u64) -> u64 {
    // ceil(2a) + 2 keeps (a/q)² below 1/9.
    m + 3
}

/// `ζ(0)`, `ζ'(0)` for the round metric of the given area.
pub fn fs_zeta_at_zero(m: u64, area: f64) -> Result<ZetaAtZero> {
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::InvalidInput(format!("area must be positive, got {area}")));
    }
    let z = zeta_at_zero_with_shift(m, default_shift(m))?;
    // λ ↦ λ/A multiplies ζ(s) by A^{s}, so ζ'(0) gains ζ(0)·log A.
    Ok(ZetaAtZero {
        value: z.value,
        derivative: z.derivative + z.value * area.ln(),
    })
}

/// Torsion of `O(m)_FS` on the round sphere of area `area`.
pub fn fs_reference_torsion_with_area(m: i64, area: f64) -> Result<f64> {
    if m < 0 {
        return Err(Error::InvalidInput(format!(
            "reference torsion is tabulated for m ≥ 0, got m = {m}"
        )));
    }
    Ok(fs_zeta_at_zero(m as u64, area)?.derivative)
}

/// Torsion of `O(m)_FS` for the area-2 round metric, the reference volume form
/// used throughout the crate.
pub fn fs_reference_torsion(m: i64) -> Result<f64> {
    fs_reference_torsion_with_area(m, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::zeta_prime_minus_one;

    #[test]
    fn zeta_at_zero_value() {
        // ζ(0) = −(m+1)/2 − 1/6: the constant heat-coefficient of the spectrum.
        for m in 0..8 {
            let z = zeta_at_zero_with_shift(m, default_shift(m)).unwrap();
            let expected = -(m as f64 + 1.0) / 2.0 - 1.0 / 6.0;
            assert!((z.value - expected).abs() < 1e-12, "m={m}: {}", z.value);
        }
    }

    #[test]
    fn sphere_value() {
        // eigenvalues k(k+1), multiplicity 2k+1: ζ'(0) = 4ζ'(−1) − 1/2
        let t = fs_reference_torsion_with_area(0, 1.0).unwrap();
        assert!((t - (4.0 * zeta_prime_minus_one() - 0.5)).abs() < 1e-13);
    }

    #[test]
    fn independent_of_shift() {
        for m in 0..6u64 {
            let base = zeta_at_zero_with_shift(m, default_shift(m)).unwrap();
            for k in [default_shift(m) + 1, default_shift(m) + 7, 40] {
                let other = zeta_at_zero_with_shift(m, k).unwrap();
                assert!((other.derivative - base.derivative).abs() < 1e-11, "m={m} K={k}");
                assert!((other.value - base.value).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn area_scaling_law() {
        for m in 0..4 {
            let t1 = fs_reference_torsion_with_area(m, 1.0).unwrap();
            let t2 = fs_reference_torsion(m).unwrap();
            let z0 = -(m as f64 + 1.0) / 2.0 - 1.0 / 6.0;
            assert!((t2 - t1 - z0 * 2f64.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn continuation_matches_direct_sums() {
        // For s > 1 the series converges; compare against brute force plus an
        // integral tail for the remainder.
        for m in [0u64, 1, 3] {
            for s in [1.5f64, 2.0, 3.0] {
                let n = 200000u64;
                let mut direct = 0.0;
                for k in 1..=n {
                    let (lam, mult) = fs_eigenvalue(m, 1.0, k);
                    direct += mult as f64 * lam.powf(-s);
                }
                // Σ_{k>n} 2x·x^{-2s}(1 + s a²/x²) ≈ ∫ with x = k + a
                let a = 0.5 * (m as f64 + 1.0);
                let x = n as f64 + 0.5 + a;
                direct +=
                    2.0 * x.powf(2.0 - 2.0 * s) / (2.0 * s - 2.0) + 2.0 * s * a * a * x.powf(-2.0 * s) / (2.0 * s);
                let cont = spectral_zeta(m, s, default_shift(m));
                assert!(
                    (cont - direct).abs() < 1e-9 * direct.abs(),
                    "m={m} s={s}: {cont} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for m in [0u64, 2, 5] {
            let h = 1e-4;
            let k = default_shift(m);
            let z = |s: f64| spectral_zeta(m, s, k);
            let fd = (8.0 * (z(h) - z(-h)) - (z(2.0 * h) - z(-2.0 * h))) / (12.0 * h);
            let exact = zeta_at_zero_with_shift(m, k).unwrap();
            assert!(
                (fd - exact.derivative).abs() < 1e-8,
                "m={m}: {fd} vs {}",
                exact.derivative
            );
        }
    }
}
