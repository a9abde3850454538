//! Total-variation normal-approximation bounds for linear eigenvalue
//! statistics of random matrices, via second-order Poincaré inequalities.

pub mod afunc;
pub mod ensembles;
pub mod error;
pub mod laws;
pub mod linalg;
pub mod matrixbound;
pub mod mc;
pub mod quad;
pub mod harness;
pub mod socp;
pub mod steinkernel;
pub mod verify;

pub use error::{Error, Result};
