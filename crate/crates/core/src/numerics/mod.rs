//! Complex linear algebra, seeded sampling and the small amount of
//! statistics the rest of the crate needs.

mod matrix;
mod rng;
mod stats;
mod svd;

pub use matrix::ComplexMatrix;
pub use rng::{sample_complex_gaussian, RngStream};
pub use stats::{gaussian_cdf, linear_fit};
pub use svd::{svd, SvdFactors, MAX_SWEEPS_PER_DIM2};

pub use num_complex::Complex64;
