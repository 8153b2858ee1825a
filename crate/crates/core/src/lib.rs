//! Curl-curl magnetostatics with Nedelec elements and polynomial-degree-robust
//! a posteriori error estimators.

pub mod error;
pub mod fe;
pub mod mesh;

pub use error::{CaseError, EquilibrationError, Error, FeError, MeshError, SolverError};
pub mod linalg;
pub mod solver;
pub mod equilibration;
pub mod cases;
pub mod adaptivity;
pub mod driver;
