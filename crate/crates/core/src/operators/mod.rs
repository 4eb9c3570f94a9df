//! Truncated, lacunary, directional, rotated and smoothly truncated singular integrals.

pub mod directional;
pub mod rules;
pub mod truncated;

pub use directional::{
    directional_average, directional_hilbert, omega_directional_average, ray_cells, rotation_method, smooth_truncation,
    smooth_truncation_sandwich, SmoothSandwich, ROTATION_DIRECTIONS,
};
pub use rules::{Radial, WeightTable};
pub use truncated::{
    build_operators, sandwich_constant, truncated_czo, LacunaryBank, LacunaryFields, RadialOperator, TruncationLadder,
};
