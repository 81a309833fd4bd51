//! Kernel-split panel-based Nyström discretization of the planar exterior
//! Helmholtz Dirichlet problem.

pub mod assembly;
pub mod error;
pub mod field;
pub mod geometry;
pub mod gmres;
pub mod interp;
pub mod kernel;
pub mod oracle;
pub mod quadrature;
pub mod selftest;
pub mod special;
pub mod testbench;

pub use error::{Error, Result};
