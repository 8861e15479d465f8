//! Verification engine for curvature identities on four-dimensional
//! Riemannian metrics, with a focus on gravitational instantons.

pub mod asymptotics;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod fd;
pub mod forms;
pub mod geometry;
pub mod identity;
pub mod kahler;
pub mod perturbation;
pub mod selfdual;
pub mod taylor;
pub mod tensor;

pub use error::{GeomError, Result};
