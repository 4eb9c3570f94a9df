pub mod bau;
pub mod cotlar;
pub mod projections;
pub mod weak11;
pub use bau::{bau_cauchy_test, elementary_tensor_check, mollifier_table, smooth_approximant, BauReport, ChainStep, TensorCheck, BAU_SCHEMA};
pub use cotlar::{cotlar_norm_check, kernel_difference_envelope, mollified_kernel, CotlarReport, EnvelopeReport, COTLAR_SCHEMA};
pub use projections::*;
pub use weak11::{weak11_certificate, StageSummary, Weak11Context, Weak11Report, WEAK11_SCHEMA};
