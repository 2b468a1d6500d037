//! Structure-preserving finite differences for the 1-D Cahn-Hilliard
//! equation under dynamic and homogeneous Neumann boundary conditions.
//!
//! The solver keeps the discrete mass exactly constant and dissipates a
//! discrete energy step by step; both properties are tracked at runtime
//! through ledgers so a run certifies its own conservation behavior.

pub mod convergence;
pub mod energy;
pub mod grid;
pub mod ic;
pub mod linear;
pub mod oracle;
pub mod potential;
pub mod stepper;

pub use energy::{BoundPack, ConditionReport, EnergyReport};
pub use grid::{ExtendedField, Grid, NodeField};
pub use ic::FourierIc;
pub use linear::{BandedSystem, StepCoefficients};
pub use potential::DoubleWell;
pub use stepper::{Scheme, SchemeParams, SimulationTrace, StepRecord, StepResult};

/// Errors surfaced by the solver crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("potential is not bounded below")]
    UnboundedPotential,
}

pub type Result<T> = std::result::Result<T, Error>;
