//! Monte Carlo simulation of the factor model.

pub mod multi_asset;
pub mod paths;
pub mod rng;
pub mod stats;

pub use crate::linalg::cholesky_psd;
pub use multi_asset::{simulate_multi_asset, AssetUniverse};
pub use paths::{
    curve_paths, simulate_factor_block, simulate_factors, step_covariance, CurvePaths, PathSet, SimGrid,
};
pub use rng::PathRng;
pub use stats::{pairwise_sum, sample_covariance, SampleStats};
