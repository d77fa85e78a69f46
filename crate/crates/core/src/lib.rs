//! Simulation and verification laboratory for critical multitype branching
//! processes in an i.i.d. random environment.
//!
//! The crate is organized around the objects that drive such a process:
//!
//! * [`env`] — offspring laws, per-generation environment components
//!   (laws + mean matrix + second-moment data), and environment models
//!   that draw components i.i.d. from a scenario family;
//! * [`gf`] — multivariate probability generating functions: evaluation,
//!   backward composition over an environment block, quenched survival,
//!   and the telescoping decomposition of `1/(x, 1 - f_{0,n}(s))`;
//! * [`walk`] — the projective chain `x · A = xA/|xA|` with its log-norm
//!   cocycle, the associated random walk, Lyapunov-exponent estimation,
//!   and model condition checks;
//! * [`harmonic`] — estimators for the harmonic function of the walk
//!   killed at zero, first-passage tail statistics, and the
//!   change-of-measure sampler built from the harmonic function;
//! * [`survival`] — particle-level population simulation, the annealed
//!   survival-probability estimator on a geometric grid of horizons, and
//!   the `sqrt(n)`-scaling fit;
//! * [`verify`] — seeded randomized campaigns that check the analytic
//!   inequalities and identities the estimators rely on.
//!
//! Numeric kernels are generic over the floating-point type through
//! [`scalar::Scalar`]; [`Real`] fixes the default precision used by the
//! command-line tools and tests.

pub mod env;
pub mod gf;
pub mod harmonic;
pub mod linalg;
pub mod scalar;
pub mod stats;
pub mod stream;
pub mod survival;
pub mod verify;
pub mod walk;

#[cfg(any(test, feature = "testutil"))]
pub mod testutil;

/// Default floating-point precision for estimators and the CLI.
pub type Real = f64;

pub use env::{
    component::EnvironmentComponent, law::OffspringLaw, model::EnvironmentModel,
    model::ModelKind,
};
pub use linalg::Matrix;
pub use scalar::Scalar;
pub use walk::ProjectivePoint;

/// Errors produced by constructors and estimators.
///
/// Validation failures carry a human-readable description of the offending
/// field or quantity; estimator errors describe the precondition that was
/// not met.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An offspring law failed validation (probabilities, support shape).
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),
    /// An environment component or model failed validation.
    #[error("invalid environment model: {0}")]
    InvalidModel(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation hit a degenerate configuration (zero norm, `f(s) = 1`
    /// at `s < 1`, and similar).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Not enough data to carry out a fit or an estimate.
    #[error("insufficient data: {0}")]
    Insufficient(String),
    /// A conditioned ensemble ended up empty (no path survived).
    #[error("no surviving paths: {0}")]
    NoSurvivors(String),
}

pub type Result<T> = std::result::Result<T, Error>;
