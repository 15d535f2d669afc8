pub mod anomaly;
pub mod cohomology;
pub mod config;
pub mod convergence;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod metrics;
pub mod potential;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod torsion;

pub use error::{Error, Result};
pub use potential::{RadialPotential, Regularity};
