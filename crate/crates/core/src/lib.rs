//! Estimation of spectral functionals `(1/p) sum f(lambda_i(C1 C2))` of products of
//! population covariances from sample covariances when the dimension `p` is
//! comparable to the sample sizes.
//!
//! * [`spectral`]: sample covariances, product spectra, the rank-one secular
//!   solver, SPD matrix functions, covariance models and exact distances.
//! * [`rmt`]: the product-spectrum model, the square-root functional and
//!   Wasserstein/Frobenius estimators, plug-in baselines and a contour-integral
//!   oracle.
//! * [`known`]: the one-known-covariance variant, its objective and Riemannian
//!   gradient, and covariance fitting by gradient descent on the SPD cone.

pub mod config;
pub mod error;
pub mod known;
pub mod rmt;
pub mod spectral;

pub use config::Tolerances;
pub use error::{Error, Result};
