//! Mean field games whose agents interact only through a scalar functional of the
//! terminal distribution: fixed-point equilibria, monotonicity checks, and the
//! reduced scalar conservation law with exact entropy solutions.

// Guards like `!(t > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod measure;
pub mod model;
pub mod hjb;
pub mod equilibrium;
pub mod monotone;
pub mod claw;
pub mod viscous;
pub mod select;
pub mod numerics;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use measure::{EmpiricalMeasure, MeanDecomposition, Point};
pub use model::{GameModel, ModelConfig, Profile, ReducedFlux};
pub use equilibrium::{find_equilibria, verify_nash, Classification, EquilibriumReport, ScanOptions};
pub use monotone::{check_monotonicity, MonotonicityGrid, MonotonicityReport, Verdict};
pub use select::{classify_point, region_scan, SelectionClass, SelectionOptions, SelectionReport};
pub use viscous::{vanishing_viscosity_study, viscous_solve, ViscosityStudy, ViscousField};
