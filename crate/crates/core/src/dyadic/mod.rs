//! Dyadic grids, operator-valued step functions, the trace φ = ∫⊗Tr, E_k and M_ε.

pub mod averages;
pub mod field;
pub mod grid;
pub mod io;

pub use averages::{conditional_expectation, cube_averages, expand_cube_values, hl_average};
pub use field::OperatorField;
pub use grid::{DilatedCube, DyadicCube, DyadicGrid};
