//! Sampled potentials: `t,phi` CSV plus a JSON sidecar, interpolated with
//! monotone piecewise-cubic Hermite (PCHIP) pieces between declared kinks.
//!
//! Outside the sampled range the potential is continued linearly with slope 0
//! on the left and slope `m` on the right, as required for a metric extending
//! over `z = 0` and `z = ∞`.  Slope jumps at the ends and at declared kinks
//! become atoms of the curvature measure.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{RadialPotential, Regularity, Shape};

/// Sidecar metadata for a sampled potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub degree: i64,
    pub regularity: Regularity,
    pub positive: bool,
    #[serde(default)]
    pub kinks: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Piece {
    t: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Debug)]
pub(crate) struct GridData {
    degree: f64,
    pieces: Vec<Piece>,
    t_min: f64,
    t_max: f64,
    y_min: f64,
    y_max: f64,
}

fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n == 2 {
        let s = (y[1] - y[0]) / (t[1] - t[0]);
        return vec![s, s];
    }
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| -> f64 {
        let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if d * m0 <= 0.0 {
            0.0
        } else if m0 * m1 <= 0.0 && d.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            d
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

impl Piece {
    fn new(t: Vec<f64>, y: Vec<f64>) -> Self {
        let d = pchip_slopes(&t, &y);
        Piece { t, y, d }
    }

    fn locate(&self, x: f64) -> usize {
        match self.t.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.t.len() - 2),
        }
    }

    /// Value, first and second derivative of the Hermite cubic at `x`.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let i = self.locate(x);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let v = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * s * s - 2.0 * s;
        let dv = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
        let ddh00 = 12.0 * s - 6.0;
        let ddh10 = 6.0 * s - 4.0;
        let ddh01 = -ddh00;
        let ddh11 = 6.0 * s - 2.0;
        let ddv = (ddh00 * y0 + ddh10 * d0 + ddh01 * y1 + ddh11 * d1) / (h * h);
        (v, dv, ddv)
    }
}

impl GridData {
    pub(crate) fn new(t: Vec<f64>, y: Vec<f64>, meta: &GridMeta) -> Result<Self> {
        if t.len() < 3 || t.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 3 points with matching columns (got {} t, {} phi)",
                t.len(),
                y.len()
            )));
        }
        if t.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid contains non-finite values".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("grid t values must be strictly increasing".into()));
        }
        let mut cuts = vec![0usize];
        for &k in &meta.kinks {
            match t.iter().position(|&v| v == k) {
                Some(i) if i > 0 && i + 1 < t.len() => cuts.push(i),
                Some(_) => {}
                None => return Err(Error::InvalidInput(format!("declared kink {k} is not a grid node"))),
            }
        }
        cuts.push(t.len() - 1);
        cuts.sort_unstable();
        cuts.dedup();
        let pieces = cuts
            .windows(2)
            .map(|w| Piece::new(t[w[0]..=w[1]].to_vec(), y[w[0]..=w[1]].to_vec()))
            .collect();
        Ok(GridData {
            degree: meta.degree as f64,
            pieces,
            t_min: t[0],
            t_max: t[t.len() - 1],
            y_min: y[0],
            y_max: y[y.len() - 1],
        })
    }

    fn piece(&self, x: f64) -> &Piece {
        let i = self
            .pieces
            .iter()
            .position(|p| x < p.t[p.t.len() - 1])
            .unwrap_or(self.pieces.len() - 1);
        &self.pieces[i]
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        if x <= self.t_min {
            self.y_min
        } else if x >= self.t_max {
            self.y_max + self.degree * (x - self.t_max)
        } else {
            self.piece(x).eval(x).0
        }
    }

    pub(crate) fn slope(&self, x: f64) -> f64 {
        if x < self.t_min {
            0.0
        } else if x >= self.t_max {
            self.degree
        } else {
            self.piece(x).eval(x).1
        }
    }

    pub(crate) fn second(&self, x: f64) -> f64 {
        if x <= self.t_min || x >= self.t_max {
            0.0
        } else {
            self.piece(x).eval(x).2
        }
    }

    pub(crate) fn atoms(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let first = &self.pieces[0];
        out.push((self.t_min, first.d[0]));
        for w in self.pieces.windows(2) {
            let left = w[0].d[w[0].d.len() - 1];
            let right = w[1].d[0];
            out.push((w[1].t[0], right - left));
        }
        let last = &self.pieces[self.pieces.len() - 1];
        out.push((self.t_max, self.degree - last.d[last.d.len() - 1]));
        out.retain(|(_, w)| *w != 0.0);
        out
    }

    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().flat_map(|p| p.t.iter().copied()).collect();
        b.dedup();
        b
    }
}

/// Builds a potential from sampled values.
pub fn grid_potential(t: Vec<f64>, phi: Vec<f64>, meta: GridMeta, label: &str) -> Result<RadialPotential> {
    let data = GridData::new(t, phi, &meta)?;
    let p = RadialPotential::from_shape(meta.degree, meta.regularity, meta.positive, Shape::Grid(data), label);
    if meta.positive {
        p.validate()?;
    }
    Ok(p)
}

/// Sidecar path for a grid CSV: `foo.csv` → `foo.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

#[derive(Deserialize)]
struct Row {
    t: f64,
    phi: f64,
}

/// Loads `path` (CSV with header `t,phi`) and its JSON sidecar.
pub fn load_grid(path: &Path) -> Result<RadialPotential> {
    let meta_path = sidecar_path(path);
    let meta: GridMeta = serde_json::from_reader(File::open(&meta_path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", meta_path.display())))?;
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "phi" {
        return Err(Error::Parse(format!("{}: header must be `t,phi`", path.display())));
    }
    let mut t = Vec::new();
    let mut y = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        t.push(row.t);
        y.push(row.phi);
    }
    grid_potential(t, y, meta, &format!("grid:{}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(degree: i64, kinks: Vec<f64>) -> GridMeta {
        GridMeta {
            degree,
            regularity: Regularity::ContinuousPiecewise,
            positive: true,
            kinks,
        }
    }

    #[test]
    fn reproduces_canonical_with_declared_kink() {
        let t: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|v| 2.0 * v.max(0.0)).collect();
        let p = grid_potential(t, y, meta(2, vec![0.0]), "can2").unwrap();
        assert_eq!(p.phi(-7.0), 0.0);
        assert!((p.phi(1.3) - 2.6).abs() < 1e-14);
        assert!((p.phi(9.0) - 18.0).abs() < 1e-12);
        assert_eq!(p.atoms(), vec![(0.0, 2.0)]);
        assert_eq!(p.density(0.7), 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(grid_potential(vec![0.0, 1.0], vec![0.0, 1.0], meta(1, vec![]), "x").is_err());
        assert!(grid_potential(vec![0.0, 2.0, 1.0], vec![0.0, 1.0, 1.0], meta(1, vec![]), "x").is_err());
        assert!(grid_potential(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], meta(1, vec![0.5]), "x").is_err());
    }

    #[test]
    fn mass_is_degree_for_smooth_samples() {
        let t: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|v| crate::potential::softplus(*v)).collect();
        let p = grid_potential(t, y, meta(1, vec![]), "fs1").unwrap();
        let atoms: f64 = p.atoms().iter().map(|a| a.1).sum();
        let tol = crate::quadrature::Tolerance::with_abs(1e-12);
        let dens = crate::quadrature::integrate_line(|x| p.density(x), &p.breakpoints(), &tol).unwrap();
        assert!((atoms + dens.value - 1.0).abs() < 1e-9);
        assert!((p.phi(0.0) - 2f64.ln()).abs() < 1e-12);
        assert!((p.phi(0.025) - crate::potential::softplus(0.025)).abs() < 1e-5);
    }
}
