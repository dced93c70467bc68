//! Closed-form distances between centered Gaussians with known covariances.

use super::matrix::{check_same_dim, product_eigenvalues, SymmetricMatrix};
use crate::error::{Error, Result};

fn require_spd(c: &SymmetricMatrix, name: &str) -> Result<()> {
    let min = c.min_eigenvalue();
    if min <= 0.0 {
        return Err(Error::input(format!(
            "{name} is not positive definite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

/// Squared 2-Wasserstein distance `tr C1 + tr C2 - 2 tr (C1^{1/2} C2 C1^{1/2})^{1/2}`
/// (not normalized by the dimension).
pub fn true_wasserstein(c1: &SymmetricMatrix, c2: &SymmetricMatrix) -> Result<f64> {
    check_same_dim(c1.dim(), c2.dim())?;
    require_spd(c1, "C1")?;
    require_spd(c2, "C2")?;
    let cross: f64 = product_eigenvalues(c1, c2)?.iter().map(|v| v.sqrt()).sum();
    Ok((c1.trace() + c2.trace() - 2.0 * cross).max(0.0))
}

/// `(1/p) sum sqrt(lambda_i(C1 C2))`.
pub fn true_sqrt_functional(c1: &SymmetricMatrix, c2: &SymmetricMatrix) -> Result<f64> {
    let v = product_eigenvalues(c1, c2)?;
    Ok(v.iter().map(|x| x.sqrt()).sum::<f64>() / v.len() as f64)
}

/// `||C1 - C2||_F^2`.
pub fn true_frobenius(c1: &SymmetricMatrix, c2: &SymmetricMatrix) -> Result<f64> {
    check_same_dim(c1.dim(), c2.dim())?;
    Ok((c1.as_matrix() - c2.as_matrix()).norm_squared())
}
