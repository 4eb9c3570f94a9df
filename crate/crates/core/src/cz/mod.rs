//! Cuculescu projections and the noncommutative Calderón–Zygmund decomposition.

pub mod cuculescu;
pub mod decomposition;

pub use cuculescu::{cuculescu, starting_index, validate_family, CuculescuFamily, LevelProjections};
pub use decomposition::{decompose, default_s, validate, CzDecomposition, LevelField};
