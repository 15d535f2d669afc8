//! Cauchy-style diagnostics for single and double sequences.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converged,
    Diverged,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::Diverged => "diverged",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Result of a convergence study.
///
/// `index[i]` labels `values[i]`; single sequences use `(n, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub index: Vec<(usize, usize)>,
    pub values: Vec<f64>,
    /// Successive gaps along the sequence (or along the diagonal).
    pub gaps: Vec<f64>,
    /// Max pairwise gap over the tail window.
    pub tail_gap: f64,
    /// Fitted log-rate: gaps behave like `C·e^{rate·n}`.
    pub decay_rate: Option<f64>,
    pub limit: f64,
    /// Aitken Δ² estimate from the last three diagonal values, when defined.
    pub extrapolated: Option<f64>,
    pub epsilon: f64,
    pub window: usize,
    pub verdict: Verdict,
}

/// Least-squares slope of `ln y` against position, skipping non-positive entries.
pub fn log_linear_rate(ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ys
        .iter()
        .enumerate()
        .filter(|(_, y)| **y > 0.0 && y.is_finite())
        .map(|(i, y)| (i as f64, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Aitken's Δ² on the last three terms.
pub fn aitken(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let (a, b, c) = (values[n - 3], values[n - 2], values[n - 1]);
    let denom = c - 2.0 * b + a;
    if denom.abs() <= 1e-300 || !denom.is_finite() {
        return None;
    }
    let est = c - (c - b).powi(2) / denom;
    est.is_finite().then_some(est)
}

/// One Richardson step for errors of the form `C·ratio^n`.
pub fn richardson(values: &[f64], ratio: f64) -> Option<f64> {
    let n = values.len();
    if n < 2 || ratio <= 0.0 || ratio >= 1.0 {
        return None;
    }
    Some((values[n - 1] - ratio * values[n - 2]) / (1.0 - ratio))
}

/// First index from which `diffs` is non-increasing.  Entries below `floor`
/// count as zero so round-off noise at the bottom does not break monotonicity.
pub fn monotone_after_prefix(diffs: &[f64], floor: f64) -> Option<usize> {
    if diffs.is_empty() {
        return None;
    }
    let clip = |x: f64| if x.abs() < floor { 0.0 } else { x.abs() };
    let mut start = 0;
    for i in 1..diffs.len() {
        if clip(diffs[i]) > clip(diffs[i - 1]) {
            start = i;
        }
    }
    Some(start)
}

fn pairwise_spread(xs: &[f64]) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

fn judge(tail_gap: f64, epsilon: f64, rate: Option<f64>) -> Verdict {
    if tail_gap < epsilon {
        Verdict::Converged
    } else if matches!(rate, Some(r) if r > -0.05) || rate.is_none() {
        Verdict::Diverged
    } else {
        Verdict::Inconclusive
    }
}

/// Cauchy report for a single sequence.
pub fn single(values: &[f64], epsilon: f64, window: usize) -> ConvergenceReport {
    let window = window.max(2);
    let gaps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let tail = &values[values.len().saturating_sub(window)..];
    let tail_gap = pairwise_spread(tail);
    let decay_rate = log_linear_rate(&gaps);
    ConvergenceReport {
        index: (0..values.len()).map(|n| (n, 0)).collect(),
        values: values.to_vec(),
        tail_gap,
        decay_rate,
        limit: values.last().copied().unwrap_or(f64::NAN),
        extrapolated: aitken(values),
        epsilon,
        window,
        verdict: judge(tail_gap, epsilon, decay_rate),
        gaps,
    }
}

/// Report on `|values[k] − limit|`; converged when the tail of the distances is
/// below `epsilon`.
pub fn against_limit(values: &[f64], limit: f64, epsilon: f64, window: usize) -> ConvergenceReport {
    let window = window.max(2);
    let dist: Vec<f64> = values.iter().map(|v| (v - limit).abs()).collect();
    let tail_gap = dist[dist.len().saturating_sub(window)..]
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let decay_rate = log_linear_rate(&dist);
    ConvergenceReport {
        index: (0..values.len()).map(|n| (n, 0)).collect(),
        values: values.to_vec(),
        gaps: dist,
        tail_gap,
        decay_rate,
        limit,
        extrapolated: aitken(values),
        epsilon,
        window,
        verdict: judge(tail_gap, epsilon, decay_rate),
    }
}

/// Cauchy report for a square double sequence `grid[n][k]`.  The tail box is
/// `n, k ≥ N − window`; the limit is the last diagonal value.
pub fn double(grid: &[Vec<f64>], epsilon: f64, window: usize) -> ConvergenceReport {
    let window = window.max(2);
    let size = grid.len();
    let mut index = Vec::new();
    let mut values = Vec::new();
    for (n, row) in grid.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            index.push((n, k));
            values.push(*v);
        }
    }
    let start = size.saturating_sub(window);
    let tail: Vec<f64> = grid[start..]
        .iter()
        .flat_map(|row| row[start.min(row.len())..].iter().copied())
        .collect();
    let diag: Vec<f64> = (0..size).filter_map(|i| grid[i].get(i).copied()).collect();
    let gaps: Vec<f64> = diag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let tail_gap = pairwise_spread(&tail);
    let decay_rate = log_linear_rate(&gaps);
    ConvergenceReport {
        index,
        values,
        tail_gap,
        decay_rate,
        limit: diag.last().copied().unwrap_or(f64::NAN),
        extrapolated: aitken(&diag),
        epsilon,
        window,
        verdict: judge(tail_gap, epsilon, decay_rate),
        gaps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn geometric_sequence_converges() {
        let v: Vec<f64> = (0..30).map(|n| 1.0 + 0.5f64.powi(n)).collect();
        let r = single(&v, 1e-6, 4);
        assert_eq!(r.verdict, Verdict::Converged);
        assert!((r.decay_rate.unwrap() - 0.5f64.ln()).abs() < 1e-9);
        assert!((r.extrapolated.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oscillation_diverges() {
        let v: Vec<f64> = (0..20).map(|n| if n % 2 == 0 { 0.0 } else { 1.0 }).collect();
        assert_eq!(single(&v, 1e-6, 4).verdict, Verdict::Diverged);
    }

    #[test]
    fn slow_convergence_is_inconclusive() {
        let v: Vec<f64> = (0..10).map(|n| 0.5f64.powi(n)).collect();
        assert_eq!(single(&v, 1e-6, 4).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn constant_double_sequence() {
        let grid = vec![vec![3.0; 5]; 5];
        let r = double(&grid, 1e-6, 4);
        assert_eq!(r.verdict, Verdict::Converged);
        assert_eq!(r.tail_gap, 0.0);
        assert_eq!(r.limit, 3.0);
    }

    #[test]
    fn double_sequence_tail_box() {
        let grid: Vec<Vec<f64>> = (0..12)
            .map(|n| (0..12).map(|k| 2.0 + 0.1f64.powi(n) - 0.1f64.powi(k)).collect())
            .collect();
        let r = double(&grid, 1e-6, 4);
        assert_eq!(r.verdict, Verdict::Converged);
        assert!((r.limit - 2.0).abs() < 1e-10);
    }

    #[test]
    fn richardson_removes_geometric_error() {
        let v: Vec<f64> = (0..6).map(|n| 7.0 + 3.0 * 0.25f64.powi(n)).collect();
        assert!((richardson(&v, 0.25).unwrap() - 7.0).abs() < 1e-13);
    }

    #[test]
    fn monotone_prefix() {
        assert_eq!(monotone_after_prefix(&[1.0, 2.0, 1.5, 1.0, 0.5], 0.0), Some(1));
        assert_eq!(monotone_after_prefix(&[1e-3, 1e-17, 2e-17], 1e-15), Some(0));
    }

    proptest! {
        #[test]
        fn converged_means_small_tail(vals in proptest::collection::vec(-1.0f64..1.0, 3..30), eps in 1e-8f64..1.0) {
            let r = single(&vals, eps, 4);
            if r.verdict == Verdict::Converged {
                prop_assert!(r.tail_gap < eps);
            }
            let grid: Vec<Vec<f64>> = vals.chunks(1).map(|c| vec![c[0]; vals.len()]).collect();
            let d = double(&grid, eps, 3);
            if d.verdict == Verdict::Converged {
                prop_assert!(d.tail_gap < eps);
            }
        }
    }
}
