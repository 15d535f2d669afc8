use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Tolerance;
use crate::torsion::LimitSettings;

/// Numerical knobs shared by library entry points and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericConfig {
    pub quad_abs_tol: f64,
    pub quad_rel_tol: f64,
    pub max_subdivisions: usize,
    /// Tail tolerance for convergence verdicts.
    pub epsilon: f64,
    /// Tail window for Cauchy checks.
    pub window: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        let t = Tolerance::default();
        NumericConfig {
            quad_abs_tol: t.abs,
            quad_rel_tol: t.rel,
            max_subdivisions: t.max_subdivisions,
            epsilon: 1e-6,
            window: 4,
        }
    }
}

impl NumericConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
            }
        };
        positive("quad_abs_tol", self.quad_abs_tol)?;
        positive("quad_rel_tol", self.quad_rel_tol)?;
        positive("epsilon", self.epsilon)?;
        if self.window < 2 {
            return Err(Error::InvalidInput(format!(
                "window must be at least 2, got {}",
                self.window
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidInput("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance {
            abs: self.quad_abs_tol,
            rel: self.quad_rel_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }

    pub fn limit_settings(&self) -> LimitSettings {
        LimitSettings {
            epsilon: self.epsilon,
            window: self.window,
            tol: self.tolerance(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        NumericConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let d = NumericConfig::default();
        for bad in [
            NumericConfig { window: 1, ..d },
            NumericConfig { quad_abs_tol: 0.0, ..d },
            NumericConfig { epsilon: -1.0, ..d },
            NumericConfig {
                max_subdivisions: 0,
                ..d
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
