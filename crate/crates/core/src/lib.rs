//! Third-order response functions and 2D electronic spectra of
//! multichromophoric exciton systems.
//!
//! Two solution paths are provided: closed forms for harmonic baths coupled
//! diagonally in the exciton basis, and second-order multistep quantum master
//! equations for general linear exciton-bath coupling. A brute-force
//! Fock-space evaluator cross-checks both at small sizes.

pub mod bath;
pub mod closed;
pub mod config;
pub mod error;
pub mod exciton;
pub mod grid;
pub mod job;
pub mod linalg;
pub mod oracle;
pub mod qme;
pub mod signal;
pub mod units;

pub use error::{Error, Result};
