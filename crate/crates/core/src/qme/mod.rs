//! Second-order multistep quantum master equations for general linear
//! exciton-bath coupling.

pub mod inhomogeneous;
pub mod kernels;
pub mod solve;
pub mod volterra;

pub use inhomogeneous::{reduce_inhomogeneous, Histories, InhomogeneousTerm, TermPoint};
pub use kernels::KernelContext;
pub use solve::{chi_qme, context_for_grid, qme_memory_estimate};
pub use volterra::{volterra_solve, History, VolterraState};
