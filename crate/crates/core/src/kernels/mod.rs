//! Calderón–Zygmund kernels, the smooth dyadic partition, and empirical kernel moduli.

pub mod moduli;
pub mod partition;
pub mod spec;
pub mod symbol;

pub use moduli::{
    annulus_integral, cancellation_sup, delta_q_modulus, difference_kernel, fitted_decay_exponent, size_and_lipschitz,
    CancellationReport, DifferenceKernel, ModulusSamples, SizeLipschitz,
};
pub use partition::PartitionFamily;
pub use spec::{Kernel, KernelSpec};
pub use symbol::{omega_tools, OmegaReport, RoughSymbol};
