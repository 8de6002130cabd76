//! Numerical building blocks: normal distribution functions, bivariate normal
//! probabilities, adaptive quadrature and Gaussian orthant probabilities.

mod bvn;
mod gaussian;
mod normal;
mod quad;

pub use bvn::bvn_upper;
pub use gaussian::{Gaussian, OrthantSolver};
pub use normal::{norm_cdf, norm_pdf, norm_sf};
pub use quad::{integrate, integrate_on, Integral};
