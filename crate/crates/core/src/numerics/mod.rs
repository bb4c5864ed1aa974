//! Numerical substrate shared by every other module.

pub mod linalg;
pub mod neighbors;
pub mod rng;
pub mod special;

pub use linalg::{cholesky, svd, CholeskyFactor, Matrix, Svd};
pub use neighbors::{Metric, NeighborIndex};
pub use rng::RngStream;
pub use special::{digamma, ln_gamma, normal_cdf, normal_pdf, normal_quantile, normal_sf};
