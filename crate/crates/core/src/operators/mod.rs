//! Convolution fields over a time grid and the operators built on them.

pub(crate) mod averages;
mod field;
mod grand;
mod kernel_bounds;
mod reduce;

pub use averages::{hardy_operators, hl_maximal, HlMaximal};
pub use field::{commutator_field, convolution_field, KernelTensor, OperatorField, TimeGrid, DEFAULT_COST_GUARD};
pub use grand::{grand_maximal, FieldOperator, GrandVariant, GridOperator, HlOperator, Reducer};
pub use kernel_bounds::{kernel_bounds, KernelBounds, KernelSample, SupProduct};
pub use reduce::{maximal, rho_variation, rho_variation_row, square_function};
