//! Operator-valued Calderón–Zygmund laboratory.
//!
//! Fields are matrix-valued dyadic step functions on a box in R^d (d = 1, 2). The crate
//! builds Cuculescu projections and the noncommutative CZ decomposition, applies truncated
//! and lacunary singular integrals, computes strong and weak maximal norms, and assembles
//! the projection certificates of the weak-type (1,1) argument.

pub mod algebra;
pub mod certificates;
pub mod cz;
pub mod dyadic;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod maxnorm;
pub mod operators;
pub mod quadrature;
pub mod report;

pub use error::{NcczError, Result};
