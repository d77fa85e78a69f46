//! Random environments for multitype branching processes.
//!
//! An *offspring law* ([`law::OffspringLaw`]) is a finitely supported
//! distribution on `p`-dimensional offspring count vectors. An
//! *environment component* ([`component::EnvironmentComponent`]) bundles
//! one law per parent type with the derived moment data: the mean matrix,
//! the second-factorial-moment matrices, and the scalar summaries used by
//! the analytic bounds. An *environment model*
//! ([`model::EnvironmentModel`]) is a distribution over components from
//! which each generation draws independently.

pub mod component;
pub mod fl;
pub mod law;
pub mod model;
pub mod scenarios;

pub use component::{mean_matrix, second_moments, EnvironmentComponent, SecondMoments};
pub use fl::FractionalLinear;
pub use law::OffspringLaw;
pub use model::{geometric_with_mean, EigenvalueState, EnvironmentModel, ModelKind};
