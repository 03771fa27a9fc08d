//! Hankel translation and convolution, kernel profiles and their admissibility checks.

mod admissibility;
mod profile;
mod translate;

pub use admissibility::{
    check_variation_admissible, check_z_lambda, variation_tail_profile, AdmissibilityReport, Condition, Finiteness,
    TailProfile, ZLambdaReport, Z_LAMBDA_CAP,
};
pub use profile::{make_kernel, t_derivative_profile, KernelFamily, Profile, ProfileFn};
pub use translate::{
    bochner_riesz, convolve, convolve_with, translate, Interpolation, Translator, TRANSLATE_TOLERANCE,
};
