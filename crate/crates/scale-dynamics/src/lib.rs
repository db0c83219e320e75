//! Numerics for dynamics under a *scale regime*: the behavior of an observed
//! trajectory across resolutions, parameterized by a fractional order `alpha`,
//! per-axis comparison constants `lambda+`/`lambda-`, and a complex unit `eta`.
//!
//! The crate provides, bottom up:
//!
//! * [`regime`] — the comparison-constant algebra: [`EtaParameter`],
//!   combined constants for multi-indices, and the diagonal (uniform) case.
//! * [`fields`] — scalar/vector fields over `(t, x)` with optional analytic
//!   partial derivatives and a finite-difference engine used whenever
//!   analytic ones are absent.
//! * [`ops`] — the extended derivatives: one-sided derivatives of piecewise-C1
//!   trajectories, the complex box derivative combining them, their action on
//!   composed functions, and the residual of the extended Newton equation.
//! * [`hamilton_jacobi`] — residual evaluators for the extended
//!   Hamilton-Jacobi equation, in complex form and split into real and
//!   imaginary parts.
//! * [`schrodinger`] — the wave-function change of variable, nonlinear and
//!   linear Schrodinger residuals, separated radial/angular equations, the
//!   logarithm identity, and the exponential integral `Ei`.
//! * [`kepler`] — the two-body application: hydrogen-like ground states for
//!   the Keplerian potential, the induced extra potential, the generalized
//!   virial balance, and the constant orbital speed it implies.
//!
//! Everything is pure: values are immutable after construction and safe to
//! evaluate from concurrent contexts.

pub mod fields;
pub mod hamilton_jacobi;
pub mod kepler;
pub mod ops;
pub mod regime;
pub mod schrodinger;

#[cfg(doctest)]
mod book;

use thiserror::Error;

/// Complex double-precision scalar used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A point lies outside (or too close to the boundary of) a field domain.
    #[error("out-of-domain evaluation: {0}")]
    OutOfDomain(String),
    /// The requested configuration is valid input but not supported.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// Inconsistent construction arguments (dimension mismatch and similar).
    #[error("invalid argument: {0}")]
    Invalid(String),
    /// Failure while parsing a textual representation.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use fields::{DiffEngine, DiffMode, Domain, Field1D, ScalarField, StencilOrder, VectorField};
pub use hamilton_jacobi::{ActionField, HamiltonianPair};
pub use kepler::{GroundState, GroundStateKind, KeplerSystem};
pub use ops::AsymptoticTrajectory;
pub use regime::{EtaDecomposition, EtaParameter, ScaleRegime};
pub use schrodinger::{SeparationParams, WaveField};
