pub mod block_construction;
pub mod circle;
pub mod error;
pub mod float_serde;
pub mod growth_analysis;
pub mod harness;
pub mod kernel_polynomials;
pub mod sparse_series;
pub mod special;
pub mod target_catalogue;
pub mod weighted_density;
pub mod wide_int;

pub use error::{Error, Result};
