//! Random-matrix estimators built on the spectrum of `C1_hat C2_hat`.

pub mod contour;
pub mod estimators;
pub mod quadrature;
pub mod spectrum;

pub use contour::{contour_functional_oracle, OracleFunction};
pub use estimators::{
    estimate_frobenius, estimate_sqrt_functional, estimate_sqrt_functional_with,
    estimate_wasserstein, plugin_frobenius, plugin_wasserstein, Branch, Diagnostics,
    DistanceEstimate, Method, SamplePair,
};
pub use spectrum::{build_spectrum, build_spectrum_with, PhiPsi, ProductSpectrum};
