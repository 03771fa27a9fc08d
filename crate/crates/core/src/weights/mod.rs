//! Weights, A_p characteristics, BMO, dyadic systems and sparse families.

mod dyadic;
mod sparse;
mod weight;

pub use dyadic::{Cube, DyadicSystem, MAX_CUBES};
pub use sparse::{extract_sparse, sparse_bound, sparse_operator, SparseCube, SparseFamily, SparseParams};
pub use weight::{
    ap_characteristic, ap_product, bmo_norm, ApEstimate, BmoEstimate, IntervalFamily, Weight, MAX_ENDPOINTS,
};
