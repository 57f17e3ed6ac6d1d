//! Problem builders and specialized schemes: smoothed sum of norms with
//! (linearized) IRLS, and the penalty-split composite model.

pub mod composite;
mod inner;
pub mod spectral;
pub mod sum_of_norms;

pub use composite::{build_composite_auxiliary, composite_variant1_step, CompositeInstance, XSubproblem};
pub use spectral::{estimate_spectral_norm, SpectralEstimate};
pub use sum_of_norms::{
    build_sum_of_norms_auxiliary, irls_step, linearized_irls_step, NormBlock, SmoothTerm, SumOfNormsInstance,
};
