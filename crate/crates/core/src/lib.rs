//! Numerical verification of entropy inequalities for symmetric random
//! vectors: Gaussian-mixture densities, projection bases, entropy and Fisher
//! information estimators, the heat-flow entropy identity, and a harness
//! producing reproducible verdicts.

pub mod cli;
pub mod density;
pub mod error;
pub mod estimators;
pub mod fixtures;
pub mod harness;
pub mod heat_flow;
pub mod linalg;
pub mod numfmt;
pub mod quadrature;
pub mod rng;

pub use density::{DensityModel, GaussianMixture};
pub use error::{Error, Result};
