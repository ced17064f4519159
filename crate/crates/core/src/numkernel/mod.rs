//! Scalar special functions and multivariate-normal rectangle probabilities.
//!
//! Everything here is pure; the MVN routine takes an explicit seed.

pub mod beta;
pub mod gamma;
pub mod mvn;
pub mod normal;
pub mod quadrature;

pub use beta::{beta_cdf, beta_inv_cdf, beta_pdf, beta_sf, ln_beta};
pub use gamma::{digamma, gamma_cdf, gamma_inv_cdf, gamma_inv_sf, gamma_pdf, gamma_sf, ln_gamma};
pub use mvn::{mvn_rectangle, MvnEstimate, MvnEvaluator, MvnSpec};
pub use normal::{normal_cdf, normal_inv_cdf, normal_pdf, normal_sf};
