pub mod conv;
pub mod error;
pub mod grid;
pub mod hankel;
pub mod operators;
pub mod special;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{ball, lp_norm, GridFunction, Interval, LambdaSpace, LogGrid, NormEstimate};
