//! Dense symmetric matrices, sample covariances and spectral matrix functions.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// A `p x n` block of observations, one observation per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::input(format!(
                "sample matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite sample entry at flat index {pos}"
            )));
        }
        Ok(Self { data })
    }

    /// Dimension `p` (rows).
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Sample count `n` (columns).
    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Rejects `p >= n`.
    pub fn require_regime(&self) -> Result<()> {
        check_regime(self.dim(), self.samples())
    }
}

pub(crate) fn check_regime(p: usize, n: usize) -> Result<()> {
    if p >= n {
        Err(Error::Regime { p, n })
    } else {
        Ok(())
    }
}

/// Real symmetric matrix. The constructor replaces the input by its symmetric
/// part, so `M[(i, j)] == M[(j, i)]` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::input(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("matrix has non-finite entries"));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let p = m.nrows();
        for j in 0..p {
            for i in (j + 1)..p {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            diag,
        )))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    /// Full eigendecomposition, eigenvalues ascending.
    pub fn eigen(&self) -> EigenSystem {
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        EigenSystem {
            values,
            vectors: Some(vectors),
        }
    }

    /// Eigenvalues only, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.0.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Minimum eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// Sorted eigenvalues with (optionally) the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Option<DMatrix<f64>>,
}

impl EigenSystem {
    /// `V diag(f(values)) V^T`. Panics if the eigenvectors were not kept.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let v = self
            .vectors
            .as_ref()
            .expect("eigenvectors required for matrix functions");
        let mut scaled = v.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fj = f(lam);
            scaled.column_mut(j).scale_mut(fj);
        }
        SymmetricMatrix::symmetrized(scaled * v.transpose())
    }
}

/// `(1/n) X X^T`.
pub fn sample_covariance(x: &SampleMatrix) -> SymmetricMatrix {
    let data = x.data();
    let mut c = data * data.transpose();
    c /= x.samples() as f64;
    SymmetricMatrix::symmetrized(c)
}

fn spectral_norm_of(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Principal square root of a positive semi-definite matrix.
pub fn spd_sqrt(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    spd_sqrt_with(m, &Tolerances::default())
}

pub fn spd_sqrt_with(m: &SymmetricMatrix, tol: &Tolerances) -> Result<SymmetricMatrix> {
    let eig = m.eigen();
    let norm = spectral_norm_of(&eig.values);
    if eig.values[0] < -tol.psd_neg_rel * norm {
        return Err(Error::input(format!(
            "matrix is not positive semi-definite (min eigenvalue {:.3e})",
            eig.values[0]
        )));
    }
    Ok(eig.map(|v| v.max(0.0).sqrt()))
}

/// Symmetric square root and inverse square root of an SPD matrix.
pub(crate) fn spd_sqrt_and_inv(m: &SymmetricMatrix) -> Result<(SymmetricMatrix, SymmetricMatrix)> {
    let eig = m.eigen();
    if eig.values[0] <= 0.0 {
        return Err(Error::input(format!(
            "matrix is not positive definite (min eigenvalue {:.3e})",
            eig.values[0]
        )));
    }
    Ok((eig.map(f64::sqrt), eig.map(|v| 1.0 / v.sqrt())))
}

/// Matrix exponential of a symmetric matrix.
pub fn spd_exp(s: &SymmetricMatrix) -> SymmetricMatrix {
    s.eigen().map(f64::exp)
}

/// Matrix logarithm of an SPD matrix.
pub fn spd_log(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = m.eigen();
    if eig.values[0] <= 0.0 {
        return Err(Error::input(format!(
            "logarithm needs a positive definite matrix (min eigenvalue {:.3e})",
            eig.values[0]
        )));
    }
    Ok(eig.map(f64::ln))
}

/// Eigen-structure of `A B` obtained through the symmetric similarity
/// `A^{1/2} B A^{1/2} = U diag(values) U^T`. Right eigenvectors of `A B` are
/// `A^{1/2} U`, left eigenvectors `A^{-1/2} U` (when `A` is invertible).
#[derive(Debug, Clone)]
pub struct ProductEigen {
    pub values: Vec<f64>,
    pub u: DMatrix<f64>,
}

fn clamp_product_values(values: &mut [f64], tol: &Tolerances) -> Result<()> {
    let norm = spectral_norm_of(values);
    for v in values.iter_mut() {
        if *v <= 0.0 {
            if *v < -tol.product_neg_rel * norm {
                return Err(Error::input(format!(
                    "product has a negative eigenvalue {v:.3e}; inputs must be positive semi-definite"
                )));
            }
            *v = tol.clamp_floor;
        }
    }
    Ok(())
}

/// Eigenvalues of `A B`, ascending, for `A` positive semi-definite.
pub fn product_eigenvalues(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<Vec<f64>> {
    product_eigenvalues_with(a, b, &Tolerances::default())
}

pub fn product_eigenvalues_with(
    a: &SymmetricMatrix,
    b: &SymmetricMatrix,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    check_same_dim(a.dim(), b.dim())?;
    let root = spd_sqrt_with(a, tol)?;
    let mut values = congruence(&root, b).eigenvalues();
    clamp_product_values(&mut values, tol)?;
    Ok(values)
}

/// Same as [`product_eigenvalues`] but keeps the eigenvectors of the similarity,
/// given a precomputed `A^{1/2}`.
pub fn product_eigen_from_root(
    a_sqrt: &SymmetricMatrix,
    b: &SymmetricMatrix,
    tol: &Tolerances,
) -> Result<ProductEigen> {
    check_same_dim(a_sqrt.dim(), b.dim())?;
    let eig = congruence(a_sqrt, b).eigen();
    let mut values = eig.values;
    clamp_product_values(&mut values, tol)?;
    Ok(ProductEigen {
        values,
        u: eig.vectors.expect("eigen() keeps vectors"),
    })
}

/// `R B R` for symmetric `R`.
pub(crate) fn congruence(r: &SymmetricMatrix, b: &SymmetricMatrix) -> SymmetricMatrix {
    let rm = r.as_matrix();
    SymmetricMatrix::symmetrized(rm * b.as_matrix() * rm)
}

pub(crate) fn check_same_dim(p1: usize, p2: usize) -> Result<()> {
    if p1 != p2 {
        Err(Error::input(format!("dimension mismatch: {p1} vs {p2}")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(p: usize, rng: &mut impl Rng) -> SymmetricMatrix {
        let b = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let m = &b * b.transpose() / p as f64 + DMatrix::identity(p, p) * 0.1;
        SymmetricMatrix::new(m).unwrap()
    }

    #[test]
    fn identity_scaled_samples_give_identity_covariance() {
        let x = SampleMatrix::new(DMatrix::identity(2, 2) * 2f64.sqrt()).unwrap();
        let c = sample_covariance(&x);
        assert_relative_eq!(c.as_matrix(), &DMatrix::identity(2, 2), epsilon = 1e-15);
    }

    #[test]
    fn scalar_covariance() {
        let x = SampleMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, -1.0])).unwrap();
        assert_eq!(sample_covariance(&x).as_matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let x = SampleMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]));
        assert!(matches!(x, Err(Error::Input(_))));
    }

    #[test]
    fn constructor_symmetrizes() {
        let m = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 1.0])).unwrap();
        assert_eq!(m.as_matrix()[(0, 1)], m.as_matrix()[(1, 0)]);
        assert_eq!(m.as_matrix()[(0, 1)], 3.0);
    }

    #[test]
    fn product_of_diagonals() {
        let a = SymmetricMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let b = SymmetricMatrix::from_diagonal(&[3.0, 4.0]).unwrap();
        let v = product_eigenvalues(&a, &b).unwrap();
        assert_relative_eq!(v[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 8.0, epsilon = 1e-14);
        let id = SymmetricMatrix::identity(4);
        assert!(product_eigenvalues(&id, &id)
            .unwrap()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn product_matches_nonsymmetric_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = random_spd(6, &mut rng);
            let b = random_spd(6, &mut rng);
            let ours = product_eigenvalues(&a, &b).unwrap();
            let ab = a.as_matrix() * b.as_matrix();
            let mut oracle: Vec<f64> = ab
                .complex_eigenvalues()
                .iter()
                .map(|z| {
                    assert!(z.im.abs() < 1e-9);
                    z.re
                })
                .collect();
            oracle.sort_by(f64::total_cmp);
            for (x, y) in ours.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
            let swapped = product_eigenvalues(&b, &a).unwrap();
            for (x, y) in ours.iter().zip(&swapped) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn product_rejects_indefinite() {
        let a = SymmetricMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        let b = SymmetricMatrix::identity(2);
        assert!(product_eigenvalues(&a, &b).is_err());
        let c = SymmetricMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        assert!(product_eigenvalues(&c, &a).is_err());
    }

    #[test]
    fn sqrt_cases() {
        let s = spd_sqrt(&SymmetricMatrix::identity(3)).unwrap();
        assert_relative_eq!(s.as_matrix(), &DMatrix::identity(3, 3), epsilon = 1e-15);
        let s = spd_sqrt(&SymmetricMatrix::from_diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        assert_relative_eq!(s.as_matrix()[(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(s.as_matrix()[(1, 1)], 3.0, epsilon = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [2, 7, 30] {
            let m = random_spd(p, &mut rng);
            let s = spd_sqrt(&m).unwrap();
            let back = s.as_matrix() * s.as_matrix();
            let rel = (&back - m.as_matrix()).norm() / m.as_matrix().norm();
            assert!(rel < 1e-10, "rel {rel}");
        }
        assert!(spd_sqrt(&SymmetricMatrix::from_diagonal(&[1.0, -0.1]).unwrap()).is_err());
    }

    #[test]
    fn exp_log_cases() {
        let z = SymmetricMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        assert_relative_eq!(spd_exp(&z).as_matrix(), &DMatrix::identity(3, 3), epsilon = 1e-15);
        let d = SymmetricMatrix::from_diagonal(&[2f64.ln(), 3f64.ln()]).unwrap();
        let e = spd_exp(&d);
        assert_relative_eq!(e.as_matrix()[(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(e.as_matrix()[(1, 1)], 3.0, epsilon = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in [3, 10] {
            let b = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
            let s = SymmetricMatrix::new(b).unwrap();
            let back = spd_log(&spd_exp(&s)).unwrap();
            assert!((back.as_matrix() - s.as_matrix()).amax() < 1e-9);
        }
        assert!(spd_log(&SymmetricMatrix::from_diagonal(&[1.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn eigen_vectors_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_spd(12, &mut rng);
        let e = m.eigen();
        let v = e.vectors.unwrap();
        let g = v.transpose() * &v;
        assert!((g - DMatrix::identity(12, 12)).amax() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
