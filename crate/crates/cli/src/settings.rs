use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use quillen_core::config::NumericConfig;

use crate::cli::{Format, GlobalArgs};

/// Contents of a TOML config file.  Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    format: Option<Format>,
    jobs: Option<usize>,
    quad_abs_tol: Option<f64>,
    quad_rel_tol: Option<f64>,
    max_subdivisions: Option<usize>,
    epsilon: Option<f64>,
    window: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub numeric: NumericConfig,
    pub format: Format,
    pub jobs: Option<usize>,
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Flags over file over defaults, field by field.
pub fn resolve(args: &GlobalArgs) -> Result<Settings> {
    let file = match &args.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    let d = NumericConfig::default();
    let numeric = NumericConfig {
        quad_abs_tol: args.quad_abs_tol.or(file.quad_abs_tol).unwrap_or(d.quad_abs_tol),
        quad_rel_tol: args.quad_rel_tol.or(file.quad_rel_tol).unwrap_or(d.quad_rel_tol),
        max_subdivisions: args
            .max_subdivisions
            .or(file.max_subdivisions)
            .unwrap_or(d.max_subdivisions),
        epsilon: args.epsilon.or(file.epsilon).unwrap_or(d.epsilon),
        window: args.window.or(file.window).unwrap_or(d.window),
    };
    numeric.validate()?;
    let jobs = args.jobs.or(file.jobs);
    if jobs == Some(0) {
        anyhow::bail!(quillen_core::Error::InvalidInput("--jobs must be at least 1".into()));
    }
    Ok(Settings {
        numeric,
        format: args.format.or(file.format).unwrap_or(Format::Json),
        jobs,
    })
}
