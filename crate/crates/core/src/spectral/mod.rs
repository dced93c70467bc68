//! Deterministic linear algebra and simulation primitives.

pub mod distance;
pub mod io;
pub mod matrix;
pub mod model;
pub mod secular;

pub use distance::{true_frobenius, true_sqrt_functional, true_wasserstein};
pub use io::{read_matrix_csv, write_matrix_csv};
pub use matrix::{
    product_eigenvalues, sample_covariance, spd_exp, spd_log, spd_sqrt, EigenSystem,
    SampleMatrix, SymmetricMatrix,
};
pub use model::{
    gaussian_samples, realize_model, seeded_rng, CovarianceModel, GaussianSampler, ModelKind,
    SeededRng,
};
pub use secular::secular_rank_one_eigs;
