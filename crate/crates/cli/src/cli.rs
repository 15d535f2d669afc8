use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const AFTER_HELP: &str = "\
Numeric settings are resolved per field: command-line flags, then the config
file (--config or $QUILLEN_CONFIG), then built-in defaults.

Metric specs: zero | fs:M | canonical:M | lse:m=M,eps=E | mollified:m=M,eps=E
  | zhang:base=SPEC,p=P,n=N | cex:c=C,delta=D[,eps=E,gamma=G,glue=W] | grid:PATH
Volume specs: canonical | fs | fs:area=A | potential:SPEC (SPEC of degree 2)";

#[derive(Debug, Parser)]
#[command(
    name = "quillen",
    version,
    about = "Quillen metrics and analytic torsion of radial metrics on P¹"
)]
#[command(after_help = AFTER_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true, env = "QUILLEN_CONFIG")]
    pub config: Option<PathBuf>,

    /// Output format [default: json].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Check the command's verdicts and exit with status 1 on failure.
    #[arg(long, global = true)]
    pub verify: bool,

    /// Omit the `meta` block (version, command line, timestamp).
    #[arg(long, global = true)]
    pub no_meta: bool,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    pub quad_abs_tol: Option<f64>,

    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    pub quad_rel_tol: Option<f64>,

    /// Subdivision budget per integral.
    #[arg(long, global = true)]
    pub max_subdivisions: Option<usize>,

    /// Tail tolerance for convergence verdicts.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,

    /// Tail window for Cauchy checks.
    #[arg(long, global = true)]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Spectral,
    #[value(alias = "anomaly")]
    AnomalyTransfer,
    #[value(alias = "direct")]
    DirectIntegrable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnomalyKindArg {
    Bundle,
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZhangReport {
    /// Sup distance to the canonical metric.
    Sup,
    /// Sup distance after every step.
    Steps,
    /// Sampled potential on a t-grid.
    Potential,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic torsion T((P¹, ω); (O(m), h)).
    Torsion {
        #[arg(long)]
        bundle: String,
        #[arg(long, default_value = "fs")]
        volume: String,
        #[arg(long, value_enum)]
        route: Option<RouteArg>,
    },
    /// log h_Q = log det Gram + T.
    Quillen {
        #[arg(long)]
        bundle: String,
        #[arg(long, default_value = "fs")]
        volume: String,
        #[arg(long, value_enum)]
        route: Option<RouteArg>,
    },
    /// Gram matrix of the monomial sections.
    Gram {
        #[arg(long)]
        bundle: String,
        #[arg(long, default_value = "fs")]
        volume: String,
        /// Also recompute the diagonal with the two-dimensional polar quadrature.
        #[arg(long)]
        polar: bool,
    },
    /// Bundle or volume anomaly integral.
    Anomaly {
        #[arg(long, value_enum)]
        kind: AnomalyKindArg,
        #[arg(long)]
        bundle: String,
        /// Second bundle metric (bundle anomaly).
        #[arg(long)]
        bundle2: Option<String>,
        #[arg(long, default_value = "fs")]
        volume: String,
        /// Second volume form (volume anomaly).
        #[arg(long)]
        volume2: Option<String>,
    },
    /// Zhang iterates φ ↦ φ(p·t)/p.
    Zhang {
        #[arg(long)]
        base: String,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value = "sup")]
        report: ZhangReport,
        /// Half-width of the sample grid for `--report potential`.
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Torsion gap along the non-positive counterexample family.
    Counterexample {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        deltas: Vec<f64>,
        #[arg(long, default_value = "fs")]
        volume: String,
    },
    /// Canonical-metric torsion on (P¹, ω∞) against the closed form.
    ClosedForm {
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5")]
        ms: Vec<u64>,
        /// Largest Zhang index for the generalized-limit column; 0 disables it.
        #[arg(long, default_value_t = 16)]
        n_max: u32,
    },
    /// Double limits over approximation families, compared across choices.
    DoubleLimit {
        #[arg(long, default_value_t = 1)]
        m: i64,
        #[arg(long, default_value_t = 16)]
        n_max: u32,
        /// `BUNDLE/VOLUME` with each side `FAMILY[@EXTRA]`, e.g. `zhang:4@1/mollified:4`.
        /// Repeatable; without it the standard comparison set is used.
        #[arg(long = "pair")]
        pairs: Vec<String>,
    },
    /// Bedford–Taylor convergence of pairings against test functions.
    BtCheck {
        #[arg(long, default_value_t = 2)]
        m: i64,
        #[arg(long, value_delimiter = ',', default_value = "zhang:2,mollified:2,lse:2")]
        families: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "gaussian,bump,off-center-bump")]
        tests: Vec<String>,
        #[arg(long, default_value_t = 16)]
        n_max: u32,
        #[arg(long, default_value_t = 1e-7)]
        threshold: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Torsion { .. } => "torsion",
            Command::Quillen { .. } => "quillen",
            Command::Gram { .. } => "gram",
            Command::Anomaly { .. } => "anomaly",
            Command::Zhang { .. } => "zhang",
            Command::Counterexample { .. } => "counterexample",
            Command::ClosedForm { .. } => "closed-form",
            Command::DoubleLimit { .. } => "double-limit",
            Command::BtCheck { .. } => "bt-check",
        }
    }
}
