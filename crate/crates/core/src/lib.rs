//! Zeroth-order extragradient methods for constrained and unconstrained
//! nonconvex-nonconcave min-max problems.

pub mod diagnostics;
pub mod exec;
pub mod geometry;
pub mod oracles;
pub mod problems;
pub mod solvers;
