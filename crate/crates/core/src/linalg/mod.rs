//! Dense linear algebra and the projector algebra used by the inference
//! routines.

mod matrix;
mod normal;
mod spectral;
mod svd;

pub use matrix::{axpy, dot, Matrix};
pub use normal::{normal_cdf, normal_pdf, normal_quantile};
pub(crate) use spectral::threshold_factors;
pub use spectral::{
    dilation, linear_term_norm2, projection_distance2, projector_set, soft_threshold_sv,
    ProjectorSet, ORTHONORMAL_TOL,
};
pub(crate) use svd::svd_warm;
pub use svd::{
    nuclear_norm, operator_norm, orthonormalize_columns, singular_values, svd, SvdFactors,
};
