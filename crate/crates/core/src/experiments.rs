//! Scripted studies: the counterexample gap, the closed-form sweep, double
//! limits with A/B comparisons, and Bedford–Taylor convergence tables.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohomology::canonical_log_det;
use crate::cohomology::{gram_convergence, gram_with};
use crate::config::NumericConfig;
use crate::convergence::{self, ConvergenceReport, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{bedford_taylor_check, pair_with, RadialFunction, VolumeForm, WithBreaks};
use crate::metrics::{
    canonical, counterexample_potential, fubini_study, log_sum_exp, mollified_max, sup_distance, zero, zhang_iterate,
    CexParams, CexProfile,
};
use crate::potential::RadialPotential;
use crate::quadrature::{integrate, Tolerance};
use crate::special::zeta_prime_minus_one;
use crate::torsion::{canonical_torsion_closed_form, generalized_torsion_curve, torsion_with, Route};

/// One row of the counterexample table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub delta: f64,
    pub sup_distance: f64,
    pub sup_bound: f64,
    pub torsion: f64,
    pub torsion_limit: f64,
    /// `T(h∞) − T(h_{c,δ})`.
    pub gap: f64,
    /// `½ ∫ f c₁(TP¹, ω)`.
    pub ricci_term: f64,
    /// `∫ f dd^c f` in the t-line normalisation.
    pub pairing: f64,
    /// `2 ∫ f dd^c f = −∫ r (∂f/∂r)² dr`, the polar Dirichlet energy.
    pub polar_energy: f64,
    /// Exact ramp contribution `∫_ramps r (∂f/∂r)² dr`, equal to `2c²`.
    pub ramp_energy: f64,
    /// `∫_{outside ramps} r (∂f/∂r)² dr`, by quadrature in `r`.
    pub remainder: f64,
    /// `log(g₀(h_{c,δ}) / g₀(h∞))`.
    pub log_l2_ratio: f64,
    pub gram_limit: f64,
    pub gram: f64,
    /// `|∫ f c₁(TP¹, ω)| / (c √δ)`.
    pub m_measured: f64,
    /// `−2c² + M √δ c` with the table-wide `M`.
    pub bound: f64,
    pub bound_holds: bool,
    pub energy_identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleVerdicts {
    /// Sup distance to `h∞` within `2c√δ` and shrinking.
    pub uniform_convergence: bool,
    /// `gap ≤ −2c² + M√δ c` for every row.
    pub gap_bound: bool,
    /// The gap does not tend to zero.
    pub torsion_diverges: bool,
    /// `gap ≤ M²/8` for every row.
    pub boundedness: bool,
    /// L² factors converge to the limit.
    pub l2_converges: bool,
    /// Polar energy equals `−2c² − remainder` to 1e-6 with a positive remainder.
    pub energy_identity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTable {
    pub c: f64,
    pub volume: String,
    pub m_constant: f64,
    pub rows: Vec<CounterexampleRow>,
    pub verdicts: CounterexampleVerdicts,
}

/// `∫ r (∂f/∂r)² dr` over the glue pieces, integrated in `r`.
pub fn glue_energy(prof: &CexProfile, tol: &Tolerance) -> Result<f64> {
    let k = prof.radial_knots();
    let pieces = [(k[0], k[1]), (k[2], k[3]), (k[4], k[5]), (k[6], k[7])];
    let mut total = 0.0;
    for (a, b) in pieces {
        total += integrate(
            |r| {
                let d = prof.radial(r).1;
                r * d * d
            },
            a,
            b,
            tol,
        )?
        .value;
    }
    Ok(total)
}

/// `∫_ramps r (∂f/∂r)² dr` from the exact antiderivative `s² r²/2`.
pub fn ramp_energy(prof: &CexProfile) -> f64 {
    let s = prof.ramp_slope();
    prof.ramps().iter().map(|(a, b)| s * s * (b * b - a * a) / 2.0).sum()
}

pub fn run_counterexample(c: f64, deltas: &[f64], w: &VolumeForm, cfg: &NumericConfig) -> Result<CounterexampleTable> {
    cfg.validate()?;
    if deltas.is_empty() {
        return Err(Error::InvalidInput("need at least one δ".into()));
    }
    if deltas.windows(2).any(|d| d[1] >= d[0]) {
        return Err(Error::InvalidInput("δ values must decrease".into()));
    }
    let tol = cfg.tolerance();
    let limit = zero();
    let t_inf = torsion_with(&limit, w, None, &tol)?.value;
    let g_inf = gram_with(&limit, w, &tol)?.entries[0];
    struct Partial {
        delta: f64,
        sup: f64,
        torsion: f64,
        ricci_term: f64,
        pairing: f64,
        ramp: f64,
        remainder: f64,
        gram: f64,
        m_measured: f64,
    }
    let family: Vec<RadialPotential> = deltas
        .iter()
        .map(|&d| counterexample_potential(CexParams::new(c, d)))
        .collect::<Result<_>>()?;
    let l2 = gram_convergence(&family, &limit, w, cfg.epsilon, &tol)?;
    let partial: Vec<Partial> = deltas
        .par_iter()
        .zip(family.par_iter())
        .map(|(&delta, f)| -> Result<Partial> {
            let prof = f.counterexample_profile().expect("counterexample potential").clone();
            let sup = sup_distance(f, &limit)?;
            let torsion = torsion_with(f, w, None, &tol)?.value;
            let ric = pair_with(f, &w.potential, &tol)?.value;
            let pairing = pair_with(f, f, &tol)?.value;
            let gram = gram_with(f, w, &tol)?.entries[0];
            Ok(Partial {
                delta,
                sup,
                torsion,
                ricci_term: 0.5 * ric,
                pairing,
                ramp: ramp_energy(&prof),
                remainder: glue_energy(&prof, &tol)?,
                gram,
                m_measured: ric.abs() / (c * delta.sqrt()),
            })
        })
        .collect::<Result<_>>()?;
    let m_constant = partial.iter().map(|p| p.m_measured).fold(0.0, f64::max);
    let rows: Vec<CounterexampleRow> = partial
        .into_iter()
        .map(|p| {
            let gap = t_inf - p.torsion;
            let bound = -2.0 * c * c + m_constant * p.delta.sqrt() * c;
            let polar_energy = 2.0 * p.pairing;
            CounterexampleRow {
                delta: p.delta,
                sup_distance: p.sup,
                sup_bound: 2.0 * c * p.delta.sqrt(),
                torsion: p.torsion,
                torsion_limit: t_inf,
                gap,
                ricci_term: p.ricci_term,
                pairing: p.pairing,
                polar_energy,
                ramp_energy: p.ramp,
                remainder: p.remainder,
                log_l2_ratio: (p.gram / g_inf).ln(),
                gram_limit: g_inf,
                gram: p.gram,
                m_measured: p.m_measured,
                bound,
                bound_holds: gap <= bound,
                energy_identity_residual: polar_energy - (-p.ramp - p.remainder),
            }
        })
        .collect();
    let uniform_convergence = rows.iter().all(|r| r.sup_distance <= r.sup_bound)
        && rows.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance);
    let last = rows.last().expect("non-empty");
    let torsion_diverges =
        last.gap.abs() > 0.1 * c * c && rows.windows(2).all(|w| w[1].gap.abs() > 0.5 * w[0].gap.abs());
    // The Gram determinant is squeezed by the sup distance, so it converges
    // along the family while the torsion does not.
    let l2_converges = l2.sandwich_holds && l2.det_differences.windows(2).all(|d| d[1] < d[0]);
    let verdicts = CounterexampleVerdicts {
        uniform_convergence,
        gap_bound: rows.iter().all(|r| r.bound_holds),
        torsion_diverges,
        boundedness: rows.iter().all(|r| r.gap <= m_constant * m_constant / 8.0),
        l2_converges,
        energy_identity: rows
            .iter()
            .all(|r| r.energy_identity_residual.abs() < 1e-6 && r.remainder > 0.0),
    };
    Ok(CounterexampleTable {
        c,
        volume: w.label().to_string(),
        m_constant,
        rows,
        verdicts,
    })
}

/// Positive approximations of the canonical metric indexed by `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum ApproxFamily {
    /// `zhang(FS(m), p, n)`.
    Zhang { p: u32 },
    /// Gaussian mollification at width `p^{-n}`.
    Mollified { p: u32 },
    /// Three-term log-sum-exp at width `p^{-n}`.
    LogSumExp { p: u32 },
    /// The canonical metric itself at every index.
    Constant,
}

impl ApproxFamily {
    pub fn name(&self) -> String {
        match self {
            ApproxFamily::Zhang { p } => format!("zhang(p={p})"),
            ApproxFamily::Mollified { p } => format!("mollified(p={p})"),
            ApproxFamily::LogSumExp { p } => format!("lse(p={p})"),
            ApproxFamily::Constant => "constant".into(),
        }
    }

    /// The `n`-th approximation of `canonical(m)`, `m ≥ 0`.
    pub fn member(&self, m: i64, n: u32) -> Result<RadialPotential> {
        if m == 0 {
            return Ok(zero());
        }
        let width = |p: u32| (p as f64).powi(-(n as i32));
        match self {
            ApproxFamily::Zhang { p } => zhang_iterate(&fubini_study(m), *p, n),
            ApproxFamily::Mollified { p } => mollified_max(m, width(*p)),
            ApproxFamily::LogSumExp { p } => log_sum_exp(m, width(*p)),
            ApproxFamily::Constant => Ok(canonical(m)),
        }
    }

    pub fn sequence(&self, m: i64, indices: &[u32]) -> Result<Vec<RadialPotential>> {
        indices.iter().map(|&n| self.member(m, n)).collect()
    }
}

impl FromStr for ApproxFamily {
    type Err = Error;

    /// `zhang:P`, `mollified:P`, `lse:P` or `constant`.
    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "constant" {
            return Ok(ApproxFamily::Constant);
        }
        let (tag, p) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected FAMILY:P or `constant`, got `{spec}`")))?;
        let p: u32 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("cannot parse `{p}` as the ratio of `{tag}`")))?;
        if p < 2 {
            return Err(Error::ParameterConstraint(format!("ratio must be at least 2, got {p}")));
        }
        match tag {
            "zhang" => Ok(ApproxFamily::Zhang { p }),
            "mollified" => Ok(ApproxFamily::Mollified { p }),
            "lse" => Ok(ApproxFamily::LogSumExp { p }),
            _ => Err(Error::Parse(format!("unknown approximation family `{tag}`"))),
        }
    }
}

impl fmt::Display for ApproxFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxFamily::Zhang { p } => write!(f, "zhang:{p}"),
            ApproxFamily::Mollified { p } => write!(f, "mollified:{p}"),
            ApproxFamily::LogSumExp { p } => write!(f, "lse:{p}"),
            ApproxFamily::Constant => f.write_str("constant"),
        }
    }
}

/// A positive decomposition `L = E₁ ⊗ E₂⁻¹` of `O(m)` with `E₂ = O(extra)`,
/// both approximated by the same family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub family: ApproxFamily,
    pub extra: i64,
}

impl Decomposition {
    pub fn sequences(&self, m: i64, indices: &[u32]) -> Result<(Vec<RadialPotential>, Vec<RadialPotential>)> {
        Ok((
            self.family.sequence(m + self.extra, indices)?,
            self.family.sequence(self.extra, indices)?,
        ))
    }
}

impl FromStr for Decomposition {
    type Err = Error;

    /// `FAMILY` or `FAMILY@EXTRA`, e.g. `zhang:4@1` for `O(m+1) ⊗ O(1)⁻¹`.
    fn from_str(spec: &str) -> Result<Self> {
        let (family, extra) = match spec.split_once('@') {
            Some((f, e)) => (
                f,
                e.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Parse(format!("cannot parse `{e}` as a degree")))?,
            ),
            None => (spec, 0),
        };
        if extra < 0 {
            return Err(Error::ParameterConstraint(format!(
                "decomposition degree must be ≥ 0, got {extra}"
            )));
        }
        Ok(Decomposition {
            family: family.parse()?,
            extra,
        })
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.family, self.extra)
    }
}

/// Inputs of a double-limit study `T((P¹, ω_k); (O(m), h_n))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleLimitSpec {
    pub m: i64,
    pub indices: Vec<u32>,
    pub bundle: Decomposition,
    pub volume: Decomposition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleLimitOutcome {
    pub label: String,
    pub limit: f64,
    pub richardson: Option<f64>,
    pub report: ConvergenceReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleLimitStudy {
    pub m: i64,
    pub closed_form: f64,
    pub outcomes: Vec<DoubleLimitOutcome>,
    /// Largest difference between outcome limits.
    pub spread: f64,
    pub all_converged: bool,
}

fn richardson_rate(family: ApproxFamily) -> Option<f64> {
    match family {
        ApproxFamily::Zhang { p } | ApproxFamily::Mollified { p } | ApproxFamily::LogSumExp { p } => {
            Some(1.0 / p as f64)
        }
        ApproxFamily::Constant => None,
    }
}

pub fn run_double_limit(spec: &DoubleLimitSpec, cfg: &NumericConfig) -> Result<DoubleLimitOutcome> {
    cfg.validate()?;
    if spec.m < 0 {
        return Err(Error::InvalidInput("double limits need m ≥ 0".into()));
    }
    if spec.volume.extra < 0 || spec.bundle.extra < 0 {
        return Err(Error::InvalidInput("decomposition degrees must be non-negative".into()));
    }
    let (b1, b2) = spec.bundle.sequences(spec.m, &spec.indices)?;
    let (v1, v2) = spec.volume.sequences(2, &spec.indices)?;
    let (limit, report) = generalized_torsion_curve((&b1, &b2), (&v1, &v2), &cfg.limit_settings())?;
    let diag: Vec<f64> = (0..spec.indices.len())
        .map(|i| report.values[i * spec.indices.len() + i])
        .collect();
    let richardson = richardson_rate(spec.bundle.family)
        .filter(|_| spec.bundle.family == spec.volume.family)
        .and_then(|r| convergence::richardson(&diag, r));
    Ok(DoubleLimitOutcome {
        label: format!(
            "bundle={}/O({}) volume={}/O({})",
            spec.bundle.family.name(),
            spec.bundle.extra,
            spec.volume.family.name(),
            spec.volume.extra
        ),
        limit,
        richardson,
        report,
    })
}

/// Runs several specs for the same `m` and compares their limits.
pub fn run_double_limit_study(specs: &[DoubleLimitSpec], cfg: &NumericConfig) -> Result<DoubleLimitStudy> {
    let m = specs
        .first()
        .map(|s| s.m)
        .ok_or_else(|| Error::InvalidInput("no double-limit specs given".into()))?;
    if specs.iter().any(|s| s.m != m) {
        return Err(Error::InvalidInput("all specs of a study must share m".into()));
    }
    let outcomes: Vec<DoubleLimitOutcome> = specs.iter().map(|s| run_double_limit(s, cfg)).collect::<Result<_>>()?;
    let lo = outcomes.iter().map(|o| o.limit).fold(f64::INFINITY, f64::min);
    let hi = outcomes.iter().map(|o| o.limit).fold(f64::NEG_INFINITY, f64::max);
    Ok(DoubleLimitStudy {
        m,
        closed_form: canonical_torsion_closed_form(m as u64),
        spread: hi - lo,
        all_converged: outcomes.iter().all(|o| o.report.verdict == Verdict::Converged),
        outcomes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRow {
    pub m: u64,
    pub direct: f64,
    pub limit: Option<f64>,
    /// `4ζ'(−1) − 1/6 − log((m+2)^{m+1}/((m+1)!)²)`.
    pub closed_form: f64,
    /// The same expression with `+log`.
    pub closed_form_plus: f64,
    pub diff: f64,
    pub diff_plus: f64,
    pub route_spread: f64,
}

/// Torsion of the canonical metric on `(P¹, ω∞)` by the direct route and, when
/// `limit_indices` is given, by a Zhang double sequence.
pub fn run_closed_form(ms: &[u64], limit_indices: Option<&[u32]>, cfg: &NumericConfig) -> Result<Vec<ClosedFormRow>> {
    cfg.validate()?;
    let tol = cfg.tolerance();
    let w = VolumeForm::canonical();
    ms.par_iter()
        .map(|&m| {
            let direct = torsion_with(&canonical(m as i64), &w, Some(Route::DirectIntegrable), &tol)?.value;
            let limit = match limit_indices {
                Some(idx) => {
                    let spec = DoubleLimitSpec {
                        m: m as i64,
                        indices: idx.to_vec(),
                        bundle: Decomposition {
                            family: ApproxFamily::Zhang { p: 4 },
                            extra: 0,
                        },
                        volume: Decomposition {
                            family: ApproxFamily::Zhang { p: 4 },
                            extra: 0,
                        },
                    };
                    Some(run_double_limit(&spec, cfg)?.limit)
                }
                None => None,
            };
            let base = 4.0 * zeta_prime_minus_one() - 1.0 / 6.0;
            let closed_form = canonical_torsion_closed_form(m);
            let closed_form_plus = base + canonical_log_det(m);
            let mut values = vec![direct];
            values.extend(limit);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(ClosedFormRow {
                m,
                direct,
                limit,
                closed_form,
                closed_form_plus,
                diff: (direct - closed_form).abs(),
                diff_plus: (direct - closed_form_plus).abs(),
                route_spread: hi - lo,
            })
        })
        .collect()
}

/// Named test functions for Bedford–Taylor checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// `e^{-t²}`.
    Gaussian,
    /// `exp(−1/(1−x²))` with `x = t/1.5`, supported in `|t| < 1.5`.
    Bump,
    /// `exp(−1/(1−x²))` with `x = t − 0.4`, supported in `(−0.6, 1.4)`.
    OffCenterBump,
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::Gaussian, TestFunction::Bump, TestFunction::OffCenterBump];

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Gaussian => "gaussian",
            TestFunction::Bump => "bump",
            TestFunction::OffCenterBump => "off-center-bump",
        }
    }

    pub fn function(&self) -> Box<dyn RadialFunction> {
        match self {
            TestFunction::Gaussian => Box::new(|t: f64| (-t * t).exp()),
            TestFunction::Bump => Box::new(WithBreaks {
                f: |t: f64| bump(t / 1.5),
                breaks: vec![-1.5, 1.5],
            }),
            TestFunction::OffCenterBump => Box::new(WithBreaks {
                f: |t: f64| bump(t - 0.4),
                breaks: vec![-0.6, 1.4],
            }),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|t| t.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown test function `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BedfordTaylorRow {
    pub family: String,
    pub test_function: String,
    pub indices: Vec<u32>,
    pub differences: Vec<f64>,
    pub sup_distances: Vec<f64>,
    pub monotone_from: Option<usize>,
    pub final_difference: f64,
    pub passed: bool,
}

/// Pairings of each family against each test function, compared with the
/// pairing against `canonical(m)`.
pub fn run_bedford_taylor(
    m: i64,
    families: &[ApproxFamily],
    tests: &[TestFunction],
    indices: &[u32],
    threshold: f64,
    cfg: &NumericConfig,
) -> Result<Vec<BedfordTaylorRow>> {
    cfg.validate()?;
    let tol = cfg.tolerance();
    let limit = canonical(m);
    let jobs: Vec<(ApproxFamily, TestFunction)> = families
        .iter()
        .flat_map(|f| tests.iter().map(move |t| (*f, *t)))
        .collect();
    jobs.par_iter()
        .map(|(family, test)| {
            let seq = family.sequence(m, indices)?;
            let g = test.function();
            let r = bedford_taylor_check(&seq, g.as_ref(), &limit, threshold, &tol)?;
            let final_difference = *r.report.gaps.last().unwrap_or(&f64::NAN);
            let passed =
                final_difference < threshold && r.monotone_from.map(|i| i + 1 < indices.len()).unwrap_or(false);
            Ok(BedfordTaylorRow {
                family: family.name(),
                test_function: test.name().into(),
                indices: indices.to_vec(),
                differences: r.report.gaps.clone(),
                sup_distances: r.sup_distances,
                monotone_from: r.monotone_from,
                final_difference,
                passed,
            })
        })
        .collect()
}

/// `∫ f_δ dd^c f_δ` along a δ-sequence: the pairing of the counterexample with
/// itself stays below `−c²` while `f_δ → 0` uniformly.
pub fn counterexample_self_pairings(c: f64, deltas: &[f64], tol: &Tolerance) -> Result<Vec<(f64, f64, f64)>> {
    deltas
        .iter()
        .map(|&d| {
            let f = counterexample_potential(CexParams::new(c, d))?;
            let sup = sup_distance(&f, &zero())?;
            Ok((d, sup, pair_with(&f, &f, tol)?.value))
        })
        .collect()
}
