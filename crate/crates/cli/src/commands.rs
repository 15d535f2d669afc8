use anyhow::{Context, Result};
use serde::Serialize;

use quillen_core::anomaly::{bundle_anomaly_with, volume_anomaly_with};
use quillen_core::cohomology::{gram_entry_polar, gram_with};
use quillen_core::config::NumericConfig;
use quillen_core::convergence::Verdict;
use quillen_core::experiments::{
    run_bedford_taylor, run_closed_form, run_counterexample, run_double_limit_study, ApproxFamily, Decomposition,
    DoubleLimitSpec, TestFunction,
};
use quillen_core::geometry::VolumeForm;
use quillen_core::metrics::{canonical, sup_distance, zhang_iterate, MetricFamilyParams};
use quillen_core::torsion::{quillen_with, torsion_with, Route, TorsionResult};
use quillen_core::RadialPotential;

use crate::cli::{AnomalyKindArg, Command, RouteArg, ZhangReport};
use crate::output::Report;

fn metric(spec: &str) -> Result<RadialPotential> {
    let family: MetricFamilyParams = spec.parse().with_context(|| format!("metric spec `{spec}`"))?;
    family.build().with_context(|| format!("building `{spec}`"))
}

fn volume(spec: &str) -> Result<VolumeForm> {
    spec.parse().with_context(|| format!("volume spec `{spec}`"))
}

fn route(r: Option<RouteArg>) -> Option<Route> {
    r.map(|r| match r {
        RouteArg::Spectral => Route::Spectral,
        RouteArg::AnomalyTransfer => Route::AnomalyTransfer,
        RouteArg::DirectIntegrable => Route::DirectIntegrable,
    })
}

#[derive(Serialize)]
struct Component {
    name: String,
    value: f64,
}

fn component_rows(t: &TorsionResult) -> Vec<Component> {
    t.components
        .iter()
        .map(|(k, v)| Component {
            name: k.clone(),
            value: *v,
        })
        .collect()
}

pub fn run(cmd: &Command, cfg: &NumericConfig) -> Result<Report> {
    let tol = cfg.tolerance();
    match cmd {
        Command::Torsion {
            bundle,
            volume: vol,
            route: r,
        } => {
            let t = torsion_with(&metric(bundle)?, &volume(vol)?, route(*r), &tol)?;
            let ok = t.value.is_finite() && t.bookkeeping_residual() == 0.0;
            let mut rows = component_rows(&t);
            rows.push(Component {
                name: "value".into(),
                value: t.value,
            });
            rows.push(Component {
                name: "err".into(),
                value: t.err,
            });
            Ok(Report::new(&t)?
                .with_rows(&rows)?
                .check("value equals the sum of its components", ok))
        }
        Command::Quillen {
            bundle,
            volume: vol,
            route: r,
        } => {
            let q = quillen_with(&metric(bundle)?, &volume(vol)?, route(*r), &tol)?;
            #[derive(Serialize)]
            struct Body<'a> {
                value: f64,
                log_l2: f64,
                err: f64,
                torsion: &'a TorsionResult,
            }
            #[derive(Serialize)]
            struct Row {
                log_quillen: f64,
                log_l2: f64,
                torsion: f64,
                route: String,
                err: f64,
            }
            let ok = q.log_quillen.is_finite() && q.log_quillen == q.log_l2 + q.torsion.value;
            Ok(Report::new(&Body {
                value: q.log_quillen,
                log_l2: q.log_l2,
                err: q.err,
                torsion: &q.torsion,
            })?
            .with_rows(&[Row {
                log_quillen: q.log_quillen,
                log_l2: q.log_l2,
                torsion: q.torsion.value,
                route: q.torsion.route.to_string(),
                err: q.err,
            }])?
            .check("log h_Q = log L² + T", ok))
        }
        Command::Gram {
            bundle,
            volume: vol,
            polar,
        } => {
            let p = metric(bundle)?;
            let w = volume(vol)?;
            let g = gram_with(&p, &w, &tol)?;
            let polar_entries = if *polar {
                Some(
                    (0..g.entries.len())
                        .map(|k| gram_entry_polar(&p, &w, k, k, &tol))
                        .collect::<quillen_core::Result<Vec<f64>>>()?,
                )
            } else {
                None
            };
            #[derive(Serialize)]
            struct Row {
                k: usize,
                entry: f64,
                error: f64,
                polar: Option<f64>,
            }
            let rows: Vec<Row> = g
                .entries
                .iter()
                .zip(&g.entry_errors)
                .enumerate()
                .map(|(k, (e, err))| Row {
                    k,
                    entry: *e,
                    error: *err,
                    polar: polar_entries.as_ref().map(|v| v[k]),
                })
                .collect();
            let routes_agree = polar_entries
                .as_ref()
                .map(|v| {
                    v.iter()
                        .zip(&g.entries)
                        .all(|(a, b)| (a - b).abs() <= 1e-8 * b.abs().max(1.0))
                })
                .unwrap_or(true);
            #[derive(Serialize)]
            struct Body<'a> {
                #[serde(flatten)]
                gram: &'a quillen_core::cohomology::GramData,
                polar_entries: Option<Vec<f64>>,
            }
            let positive = g.det > 0.0 && g.entries.iter().all(|e| *e > 0.0);
            Ok(Report::new(&Body {
                gram: &g,
                polar_entries,
            })?
            .with_rows(&rows)?
            .check("entries and determinant positive", positive)
            .check("polar quadrature agrees to 1e-8", routes_agree))
        }
        Command::Anomaly {
            kind,
            bundle,
            bundle2,
            volume: vol,
            volume2,
        } => {
            let p = metric(bundle)?;
            let w = volume(vol)?;
            let term = match kind {
                AnomalyKindArg::Bundle => {
                    let other = bundle2
                        .as_deref()
                        .context("bundle anomaly needs --bundle2")
                        .map_err(usage)?;
                    bundle_anomaly_with(&p, &metric(other)?, &w, &tol)?
                }
                AnomalyKindArg::Volume => {
                    let other = volume2
                        .as_deref()
                        .context("volume anomaly needs --volume2")
                        .map_err(usage)?;
                    volume_anomaly_with(&p, &w, &volume(other)?, &tol)?
                }
            };
            #[derive(Serialize)]
            struct Row {
                kind: String,
                value: f64,
                err: f64,
                todd: f64,
                chern: f64,
            }
            let part = |name: &str| {
                term.contributions
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| *v)
                    .unwrap_or(0.0)
            };
            let row = Row {
                kind: format!("{:?}", term.kind).to_lowercase(),
                value: term.value,
                err: term.err,
                todd: part("todd"),
                chern: part("chern"),
            };
            let finite = term.value.is_finite();
            Ok(Report::new(&term)?.with_rows(&[row])?.check("finite value", finite))
        }
        Command::Zhang {
            base,
            p,
            n,
            report,
            t_max,
            samples,
        } => {
            let b = metric(base)?;
            let limit = canonical(b.degree);
            let it = zhang_iterate(&b, *p, *n)?;
            let d0 = sup_distance(&b, &limit)?;
            let dn = sup_distance(&it, &limit)?;
            let predicted = d0 / (*p as f64).powi(*n as i32);
            let contraction = dn <= predicted * (1.0 + 1e-9) + 1e-12;
            #[derive(Serialize)]
            struct Step {
                n: u32,
                sup_distance: f64,
            }
            #[derive(Serialize)]
            struct Sample {
                t: f64,
                phi: f64,
            }
            #[derive(Serialize)]
            struct Body<'a> {
                base: &'a str,
                p: u32,
                n: u32,
                sup_distance: f64,
                base_sup_distance: f64,
                predicted: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                rows: Option<serde_json::Value>,
            }
            fn build(body: Body<'_>, csv: &[impl Serialize]) -> Result<Report> {
                Report::new(&body)?.with_rows(csv)
            }
            let head = |rows: Option<serde_json::Value>| Body {
                base,
                p: *p,
                n: *n,
                sup_distance: dn,
                base_sup_distance: d0,
                predicted,
                rows,
            };
            let r = match report {
                ZhangReport::Sup => build(
                    head(None),
                    &[Step {
                        n: *n,
                        sup_distance: dn,
                    }],
                )?,
                ZhangReport::Steps => {
                    let rows: Vec<Step> = (0..=*n)
                        .map(|k| {
                            Ok(Step {
                                n: k,
                                sup_distance: sup_distance(&zhang_iterate(&b, *p, k)?, &limit)?,
                            })
                        })
                        .collect::<quillen_core::Result<_>>()?;
                    build(head(Some(serde_json::to_value(&rows)?)), &rows)?
                }
                ZhangReport::Potential => {
                    if *samples < 2 || t_max.is_nan() || *t_max <= 0.0 {
                        return Err(usage(anyhow::anyhow!("--samples must be ≥ 2 and --t-max positive")));
                    }
                    let rows: Vec<Sample> = (0..*samples)
                        .map(|i| {
                            let t = -t_max + 2.0 * t_max * i as f64 / (*samples - 1) as f64;
                            Sample { t, phi: it.phi(t) }
                        })
                        .collect();
                    build(head(Some(serde_json::to_value(&rows)?)), &rows)?
                }
            };
            Ok(r.check("sup distance contracts by p per step", contraction))
        }
        Command::Counterexample { c, deltas, volume: vol } => {
            let table = run_counterexample(*c, deltas, &volume(vol)?, cfg)?;
            let v = table.verdicts.clone();
            Ok(Report::new(&table)?
                .with_rows(&table.rows)?
                .check("(a) sup distance ≤ 2c√δ and decreasing", v.uniform_convergence)
                .check("(b) torsion gap ≤ −2c² + M√δ c", v.gap_bound)
                .check("(c) torsion gap does not tend to 0", v.torsion_diverges)
                .check("gap ≤ M²/8", v.boundedness)
                .check("L² factor converges", v.l2_converges)
                .check("Dirichlet energy = −2c² − remainder to 1e-6", v.energy_identity))
        }
        Command::ClosedForm { ms, n_max } => {
            let idx: Vec<u32> = (0..=*n_max).collect();
            let rows = run_closed_form(ms, (*n_max > 0).then_some(&idx[..]), cfg)?;
            let stated = rows.iter().all(|r| r.diff_plus < 1e-6);
            let derived = rows.iter().all(|r| r.diff < 1e-6);
            let spread = rows.iter().all(|r| r.route_spread < 1e-6);
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [quillen_core::experiments::ClosedFormRow],
            }
            Ok(Report::new(&Body { rows: &rows })?
                .with_rows(&rows)?
                .check("matches 4ζ'(−1) − 1/6 + log((m+2)^{m+1}/((m+1)!)²) to 1e-6", stated)
                .check("matches 4ζ'(−1) − 1/6 − log((m+2)^{m+1}/((m+1)!)²) to 1e-6", derived)
                .check("route spread < 1e-6", spread))
        }
        Command::DoubleLimit { m, n_max, pairs } => {
            let indices: Vec<u32> = (0..=*n_max).collect();
            let pairs: Vec<(Decomposition, Decomposition)> = if pairs.is_empty() {
                default_pairs()
            } else {
                pairs.iter().map(|s| parse_pair(s)).collect::<Result<_>>()?
            };
            let specs: Vec<DoubleLimitSpec> = pairs
                .into_iter()
                .map(|(bundle, volume)| DoubleLimitSpec {
                    m: *m,
                    indices: if bundle.family == ApproxFamily::Constant && volume.family == ApproxFamily::Constant {
                        indices.iter().copied().take(2).collect()
                    } else {
                        indices.clone()
                    },
                    bundle,
                    volume,
                })
                .collect();
            let study = run_double_limit_study(&specs, cfg)?;
            #[derive(Serialize)]
            struct Row {
                label: String,
                limit: f64,
                richardson: Option<f64>,
                verdict: Verdict,
                tail_gap: f64,
                minus_closed_form: f64,
            }
            let rows: Vec<Row> = study
                .outcomes
                .iter()
                .map(|o| Row {
                    label: o.label.clone(),
                    limit: o.limit,
                    richardson: o.richardson,
                    verdict: o.report.verdict,
                    tail_gap: o.report.tail_gap,
                    minus_closed_form: o.limit - study.closed_form,
                })
                .collect();
            let converged = study.all_converged;
            let spread = study.spread < 1e-6;
            Ok(Report::new(&study)?
                .with_rows(&rows)?
                .check("every double sequence converged", converged)
                .check("limits agree to 1e-6", spread))
        }
        Command::BtCheck {
            m,
            families,
            tests,
            n_max,
            threshold,
        } => {
            let fams: Vec<ApproxFamily> = families
                .iter()
                .map(|s| s.parse().with_context(|| format!("family `{s}`")))
                .collect::<Result<_>>()?;
            let tests: Vec<TestFunction> = tests
                .iter()
                .map(|s| s.parse().with_context(|| format!("test function `{s}`")))
                .collect::<Result<_>>()?;
            let idx: Vec<u32> = (0..=*n_max).collect();
            let rows = run_bedford_taylor(*m, &fams, &tests, &idx, *threshold, cfg)?;
            #[derive(Serialize)]
            struct Row<'a> {
                family: &'a str,
                test_function: &'a str,
                final_difference: f64,
                monotone_from: Option<usize>,
                passed: bool,
            }
            let flat: Vec<Row> = rows
                .iter()
                .map(|r| Row {
                    family: &r.family,
                    test_function: &r.test_function,
                    final_difference: r.final_difference,
                    monotone_from: r.monotone_from,
                    passed: r.passed,
                })
                .collect();
            let all = rows.iter().all(|r| r.passed);
            #[derive(Serialize)]
            struct Body<'a> {
                m: i64,
                threshold: f64,
                rows: &'a [quillen_core::experiments::BedfordTaylorRow],
            }
            Ok(Report::new(&Body {
                m: *m,
                threshold: *threshold,
                rows: &rows,
            })?
            .with_rows(&flat)?
            .check("pairings monotone after a prefix and below the threshold", all))
        }
    }
}

/// Marks an error as a usage error.
pub fn usage(e: anyhow::Error) -> anyhow::Error {
    e.context(UsageError)
}

#[derive(Debug)]
pub struct UsageError;

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("usage error")
    }
}

fn parse_pair(s: &str) -> Result<(Decomposition, Decomposition)> {
    let (b, v) = s
        .split_once('/')
        .with_context(|| format!("pair `{s}` must be BUNDLE/VOLUME"))
        .map_err(usage)?;
    Ok((
        b.parse().with_context(|| format!("bundle side of `{s}`"))?,
        v.parse().with_context(|| format!("volume side of `{s}`"))?,
    ))
}

/// Zhang/Zhang, both decompositions moved up by one, mollified bundle with
/// Zhang volume, and constant/constant.
fn default_pairs() -> Vec<(Decomposition, Decomposition)> {
    let d = |family, extra| Decomposition { family, extra };
    let z = ApproxFamily::Zhang { p: 4 };
    vec![
        (d(z, 0), d(z, 0)),
        (d(z, 1), d(z, 1)),
        (d(ApproxFamily::Mollified { p: 4 }, 0), d(z, 0)),
        (d(ApproxFamily::Constant, 0), d(ApproxFamily::Constant, 0)),
    ]
}
