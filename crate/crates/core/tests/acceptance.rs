//! Acceptance report: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use quillen_core::anomaly::{bundle_anomaly_with, volume_anomaly_with};
use quillen_core::cohomology::gram_with;
use quillen_core::config::NumericConfig;
use quillen_core::convergence::Verdict;
use quillen_core::error::Error;
use quillen_core::experiments::{run_bedford_taylor, run_counterexample, ApproxFamily, TestFunction};
use quillen_core::geometry::VolumeForm;
use quillen_core::metrics::{
    canonical, counterexample_potential, fubini_study, log_sum_exp, mollified_max, shifted, zero, zhang_iterate,
    CexParams,
};
use quillen_core::quadrature::Tolerance;
use quillen_core::special::zeta_prime_minus_one;
use quillen_core::spectral::fs_reference_torsion_with_area;
use quillen_core::torsion::{generalized_quillen_limit, quillen_with, torsion_with, LimitSettings, Route};
use quillen_core::RadialPotential;

/// Glaisher–Kinkelin constant.
const GLAISHER: f64 =
    1.282_427_129_100_622_636_875_342_568_869_791_727_767_688_927_325_001_192_063_740_021_740_406_308_858_826_46;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `log((m+2)^{m+1}/((m+1)!)²)` from integer arithmetic.
fn log_canonical_ratio(m: u64) -> f64 {
    (m as f64 + 1.0) * (m as f64 + 2.0).ln() - 2.0 * ln_factorial(m + 1)
}

fn criterion_1() -> Outcome {
    let zp = zeta_prime_minus_one();
    let glaisher_gap = (zp - (1.0 / 12.0 - GLAISHER.ln())).abs();
    let tol = Tolerance::default();
    let w = VolumeForm::canonical();
    let mut worst_stated: f64 = 0.0;
    let mut worst_opposite: f64 = 0.0;
    let mut per_m = Vec::new();
    for m in 0..=5u64 {
        let t = torsion_with(&canonical(m as i64), &w, Some(Route::DirectIntegrable), &tol)
            .expect("torsion of the canonical metric")
            .value;
        let stated = 4.0 * zp - 1.0 / 6.0 + log_canonical_ratio(m);
        let opposite = 4.0 * zp - 1.0 / 6.0 - log_canonical_ratio(m);
        worst_stated = worst_stated.max((t - stated).abs());
        worst_opposite = worst_opposite.max((t - opposite).abs());
        per_m.push(format!("m={m} T={t:.12} Δ={:.3e}", t - stated));
    }
    outcome(
        glaisher_gap < 1e-12 && worst_stated < 1e-6,
        format!(
            "closed-form sweep m=0..5, max |Δ| = {worst_stated:.3e} (tol 1e-6); ζ'(−1) = {zp:.15} vs Glaisher gap {glaisher_gap:.1e}; \
             with −log in place of +log max |Δ| = {worst_opposite:.1e}; [{}]",
            per_m.join(", ")
        ),
    )
}

fn criterion_2() -> Outcome {
    let tol = Tolerance::default();
    let w = VolumeForm::canonical();
    let mut worst_det: f64 = 0.0;
    let mut worst_entry: f64 = 0.0;
    for m in 0..=8u64 {
        let g = gram_with(&canonical(m as i64), &w, &tol).expect("gram");
        let exact_det = log_canonical_ratio(m).exp();
        worst_det = worst_det.max((g.det - exact_det).abs());
        for (k, &e) in g.entries.iter().enumerate() {
            let k = k as f64;
            let mf = m as f64;
            worst_entry = worst_entry.max((e - (mf + 2.0) / ((k + 1.0) * (mf + 1.0 - k))).abs());
        }
    }
    outcome(
        worst_det < 1e-8 && worst_entry < 1e-9,
        format!("gram of canonical(m) on ω∞, m=0..8: max |det − exact| = {worst_det:.2e} (tol 1e-8), max |entry − exact| = {worst_entry:.2e} (tol 1e-9)"),
    )
}

fn criterion_3() -> Outcome {
    let cfg = NumericConfig::default();
    let table =
        run_counterexample(1.0, &[1e-2, 1e-3, 1e-4], &VolumeForm::fubini_study(), &cfg).expect("counterexample");
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "δ={:.0e}: ΔT={:.6} bound={:.6} sup={:.4}≤{:.4} energy={:.9} = −2 − {:.9} (resid {:.1e})",
                r.delta,
                r.gap,
                r.bound,
                r.sup_distance,
                r.sup_bound,
                r.polar_energy,
                r.remainder,
                r.energy_identity_residual
            )
        })
        .collect();
    let v = &table.verdicts;
    outcome(
        v.gap_bound && v.uniform_convergence && v.energy_identity,
        format!(
            "counterexample c=1, M={:.6}: gap bound {}, sup ≤ 2√δ → 0 {}, energy identity to 1e-6 {}; [{}]",
            table.m_constant,
            ok(v.gap_bound),
            ok(v.uniform_convergence),
            ok(v.energy_identity),
            rows.join("; ")
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

/// `log h_Q` of a constant shift of the round metric, with the Gram matrix by
/// quadrature and the torsion from the spectrum (a constant shift leaves the
/// Laplacian unchanged).
fn independent_quillen(p: &RadialPotential, m: i64, w: &VolumeForm, tol: &Tolerance) -> f64 {
    let area = w.fubini_study_area().expect("round volume form");
    gram_with(p, w, tol).expect("gram").log_det + fs_reference_torsion_with_area(m, area).expect("spectral")
}

fn criterion_4() -> Outcome {
    let tol = Tolerance::with_abs(1e-12);
    let pairs: [(i64, f64, f64, f64); 6] = [
        (0, 0.7, 0.0, 2.0),
        (1, -0.4, 0.25, 2.0),
        (2, 1.3, -0.5, 2.0),
        (3, 0.05, 0.6, 1.0),
        (4, -1.1, 0.3, 3.5),
        (2, 2.0, 1.0, 0.5),
    ];
    let mut worst: f64 = 0.0;
    for (m, a, b, area) in pairs {
        let w = VolumeForm::fubini_study_with_area(area);
        let fs = fubini_study(m);
        let p = shifted(&fs, a);
        let p2 = shifted(&fs, b);
        let lhs = independent_quillen(&p, m, &w, &tol) - independent_quillen(&p2, m, &w, &tol);
        let rhs = -bundle_anomaly_with(&p, &p2, &w, &tol).expect("anomaly").value;
        worst = worst.max((lhs - rhs).abs());
    }
    // Same identity on the volume slot: round metrics of different areas.
    let mut worst_volume: f64 = 0.0;
    for (m, a1, a2) in [(0i64, 2.0, 1.0), (1, 0.5, 3.0), (3, 2.0, 7.0)] {
        let p = fubini_study(m);
        let w1 = VolumeForm::fubini_study_with_area(a1);
        let w2 = VolumeForm::fubini_study_with_area(a2);
        let lhs = independent_quillen(&p, m, &w1, &tol) - independent_quillen(&p, m, &w2, &tol);
        let rhs = -volume_anomaly_with(&p, &w1, &w2, &tol).expect("anomaly").value;
        worst_volume = worst_volume.max((lhs - rhs).abs());
    }
    let w = VolumeForm::fubini_study();
    let a = fubini_study(3);
    let b = log_sum_exp(3, 0.3).unwrap();
    let c = zhang_iterate(&fubini_study(3), 2, 2).unwrap();
    let bundle_cocycle = (bundle_anomaly_with(&a, &b, &w, &tol).unwrap().value
        + bundle_anomaly_with(&b, &c, &w, &tol).unwrap().value
        - bundle_anomaly_with(&a, &c, &w, &tol).unwrap().value)
        .abs();
    let p = mollified_max(2, 0.3).unwrap();
    let v1 = VolumeForm::fubini_study();
    let v2 = VolumeForm::canonical();
    let v3 = VolumeForm::from_potential(log_sum_exp(2, 0.2).unwrap()).unwrap();
    let volume_cocycle = (volume_anomaly_with(&p, &v1, &v2, &tol).unwrap().value
        + volume_anomaly_with(&p, &v2, &v3, &tol).unwrap().value
        - volume_anomaly_with(&p, &v1, &v3, &tol).unwrap().value)
        .abs();
    outcome(
        worst < 1e-8 && bundle_cocycle < 1e-9 && volume_cocycle < 1e-9,
        format!(
            "{} bundle pairs, max |Δlog h_Q + ∫ch̃Td| = {worst:.2e} (tol 1e-8); volume slot {worst_volume:.2e}; \
             cocycles: bundle {bundle_cocycle:.1e}, volume {volume_cocycle:.1e} (tol 1e-9)",
            pairs.len()
        ),
    )
}

fn zhang_sequence(m: i64, indices: &[u32]) -> Vec<RadialPotential> {
    indices
        .iter()
        .map(|&n| {
            if m == 0 {
                zero()
            } else {
                zhang_iterate(&fubini_study(m), 4, n).unwrap()
            }
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let settings = LimitSettings {
        epsilon: 1e-6,
        ..LimitSettings::default()
    };
    let indices: Vec<u32> = (0..=16).collect();
    let w = VolumeForm::canonical();
    let direct = quillen_with(&canonical(1), &w, Some(Route::DirectIntegrable), &settings.tol)
        .expect("direct")
        .log_quillen;
    let mut values = vec![("direct".to_string(), direct)];
    let mut converged = true;
    for extra in [0i64, 1, 2] {
        let e1 = zhang_sequence(1 + extra, &indices);
        let e2 = zhang_sequence(extra, &indices);
        let (limit, report) = generalized_quillen_limit(&e1, &e2, &w, &settings).expect("limit");
        converged &= report.verdict == Verdict::Converged;
        values.push((
            format!("O({})⊗O({})⁻¹ tail {:.1e}", 1 + extra, extra, report.tail_gap),
            limit,
        ));
    }
    let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        hi - lo < 1e-6 && converged,
        format!(
            "log h_Q(O(1), canonical, ω∞): spread {:.2e} (tol 1e-6), Cauchy verdicts {}; [{}]",
            hi - lo,
            if converged { "converged" } else { "not all converged" },
            values
                .iter()
                .map(|(k, v)| format!("{k}: {v:.12}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = NumericConfig::default();
    let indices: Vec<u32> = (0..=16).collect();
    let families = [
        ApproxFamily::Zhang { p: 2 },
        ApproxFamily::Mollified { p: 2 },
        ApproxFamily::LogSumExp { p: 2 },
    ];
    let rows = run_bedford_taylor(2, &families, &TestFunction::ALL, &indices, 1e-7, &cfg).expect("bedford-taylor");
    let worst = rows.iter().map(|r| r.final_difference).fold(0.0, f64::max);
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}/{}", r.family, r.test_function))
        .collect();
    outcome(
        failed.is_empty() && rows.len() == 9,
        format!(
            "{} family/test pairs, worst final difference {worst:.2e} (tol 1e-7), monotone tails {}{}",
            rows.len(),
            if failed.is_empty() { "all" } else { "not all" },
            if failed.is_empty() {
                String::new()
            } else {
                format!(", failing: {}", failed.join(", "))
            }
        ),
    )
}

fn criterion_7(started: Instant) -> Outcome {
    let seq: Vec<RadialPotential> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&d| counterexample_potential(CexParams::new(1.0, d)).unwrap())
        .collect();
    let zeros = vec![zero(); seq.len()];
    let rejected = matches!(
        generalized_quillen_limit(&seq, &zeros, &VolumeForm::fubini_study(), &LimitSettings::default()),
        Err(Error::NotPositive(_))
    );
    let cfg = NumericConfig::default();
    let table =
        run_counterexample(1.0, &[1e-2, 1e-3, 1e-4], &VolumeForm::fubini_study(), &cfg).expect("counterexample");
    let diverges = table.verdicts.torsion_diverges && table.verdicts.uniform_convergence;
    let elapsed = started.elapsed().as_secs_f64();
    outcome(
        rejected && diverges && elapsed < 300.0,
        format!(
            "non-positive input rejected {}, torsion gap stays at {:.6} while sup → {:.4} {}, suite runtime {elapsed:.1}s (budget 300s)",
            ok(rejected),
            table.rows.last().unwrap().gap,
            table.rows.last().unwrap().sup_distance,
            ok(diverges)
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(started),
    ];
    let mut all = true;
    for (i, r) in results.iter().enumerate() {
        all &= r.pass;
        println!(
            "{} criterion {}: {}",
            if r.pass { "PASS" } else { "FAIL" },
            i + 1,
            r.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
