//! Energy-stable P1 finite element solver for Allen-Cahn type gradient flows.
//!
//! The crate covers the generalised Allen-Cahn equation and the hybrid
//! level-set-like model through one parameterisation (see [`model`]). Time
//! stepping uses an implicit scheme whose potential term is the secant
//! difference quotient, so every accepted step decreases the energy.

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod mesh;
pub mod model;
pub mod output;
pub mod quadrature;
pub mod sparse;
pub mod stepper;

pub use error::{Error, Result};
pub use fem::NodalField;
pub use mesh::Mesh;
pub use model::{ModelParams, MobilitySpec, PotentialSpec};
pub use sparse::SparseMatrix;
pub use stepper::{StepConfig, StepReport, Stepper};
