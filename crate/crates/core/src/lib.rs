pub mod benchmark;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod neural;
pub mod numerics;
pub mod sample;
pub mod transforms;

pub use error::{Error, Result};
pub use sample::Sample;
