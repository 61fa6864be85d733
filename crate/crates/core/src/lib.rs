//! Prescribed-norm normalized tight frames, their Schur-Horn fibers in the
//! real Grassmannian, and verifiable path certificates for connectivity.

pub mod admissibility;
pub mod builder;
pub mod cli;
pub mod error;
pub mod fiber;
pub mod grassmann;
pub mod hypersimplex;
pub mod linalg;
pub mod path;
pub mod polygon;
pub mod strata;
pub mod tol;

pub use error::{Error, Result};
pub use grassmann::{Frame, ProjectionPoint};
pub use hypersimplex::DiagonalTarget;
