//! Adaptive smoothing-and-prolongation algebraic multigrid for sparse SPD
//! systems, with a preconditioned conjugate gradient driver, a hexahedral
//! elasticity generator and tools for studying smoother damping.

pub mod cli;
pub mod coarsening;
pub mod config;
pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod hierarchy;
pub mod io;
pub mod krylov;
pub mod prolongation;
pub mod report;
pub mod smoother;
pub mod sparse;
pub mod test_space;

pub use dense::DenseBlock;
pub use error::{Error, Result};
pub use hierarchy::{amg_setup, Hierarchy, HierarchyConfig};
pub use sparse::SparseMatrix;
