//! Population covariance models and seeded Gaussian sampling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::matrix::{spd_sqrt, SampleMatrix, SymmetricMatrix};
use crate::error::{Error, Result};

/// Generator used for every seeded draw in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// JSON-serializable description of a population covariance.
///
/// ```json
/// {"kind": "toeplitz", "p": 64, "r": 0.2}
/// {"kind": "atomic", "p": 100, "atoms": [[0.1, 25], [3, 25], [4, 25], [5, 25]], "basis_seed": 7}
/// {"kind": "explicit", "p": 2, "matrix": [[1.0, 0.5], [0.5, 2.0]]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub p: usize,
    #[serde(flatten)]
    pub kind: ModelKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    /// `[C]_ij = r^|i-j|`.
    Toeplitz { r: f64 },
    /// `Q diag(atoms) Q^T`, each atom `(eigenvalue, multiplicity)`, `Q` Haar-distributed from `basis_seed`.
    Atomic {
        atoms: Vec<(f64, usize)>,
        basis_seed: u64,
    },
    Explicit { matrix: Vec<Vec<f64>> },
}

impl CovarianceModel {
    pub fn toeplitz(p: usize, r: f64) -> Self {
        Self {
            p,
            kind: ModelKind::Toeplitz { r },
        }
    }

    pub fn atomic(atoms: Vec<(f64, usize)>, basis_seed: u64) -> Self {
        let p = atoms.iter().map(|a| a.1).sum();
        Self {
            p,
            kind: ModelKind::Atomic { atoms, basis_seed },
        }
    }

    pub fn explicit(m: &SymmetricMatrix) -> Self {
        let a = m.as_matrix();
        Self {
            p: m.dim(),
            kind: ModelKind::Explicit {
                matrix: (0..m.dim())
                    .map(|i| (0..m.dim()).map(|j| a[(i, j)]).collect())
                    .collect(),
            },
        }
    }

    /// The same model at another dimension (Toeplitz only keeps its parameter;
    /// other kinds are returned unchanged and must already match).
    pub fn with_dim(&self, p: usize) -> Self {
        match self.kind {
            ModelKind::Toeplitz { r } => Self::toeplitz(p, r),
            _ => self.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("covariance model: {e}")))
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs of
/// `diag(R)` moved into `Q`.
pub fn random_orthogonal(p: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = standard_normal_matrix(p, p, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `p x n` matrix of i.i.d. N(0, 1), filled column by column.
pub fn standard_normal_matrix(p: usize, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let values: Vec<f64> = (0..p * n).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_vec(p, n, values)
}

/// Population covariance of the model.
pub fn realize_model(model: &CovarianceModel) -> Result<SymmetricMatrix> {
    let p = model.p;
    if p == 0 {
        return Err(Error::Config("model dimension must be positive".into()));
    }
    match &model.kind {
        ModelKind::Toeplitz { r } => {
            if !(r.is_finite() && r.abs() < 1.0) {
                return Err(Error::Config(format!(
                    "Toeplitz parameter must satisfy |r| < 1, got {r}"
                )));
            }
            SymmetricMatrix::new(DMatrix::from_fn(p, p, |i, j| r.powi(i.abs_diff(j) as i32)))
        }
        ModelKind::Atomic { atoms, basis_seed } => {
            if let Some(bad) = atoms.iter().find(|a| !(a.0.is_finite() && a.0 > 0.0)) {
                return Err(Error::input(format!(
                    "atom eigenvalues must be positive, got {}",
                    bad.0
                )));
            }
            let total: usize = atoms.iter().map(|a| a.1).sum();
            if total != p {
                return Err(Error::Config(format!(
                    "atom multiplicities sum to {total}, expected {p}"
                )));
            }
            let diag: Vec<f64> = atoms
                .iter()
                .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
                .collect();
            let q = random_orthogonal(p, &mut seeded_rng(*basis_seed));
            let mut qd = q.clone();
            for (j, d) in diag.iter().enumerate() {
                qd.column_mut(j).scale_mut(*d);
            }
            SymmetricMatrix::new(qd * q.transpose())
        }
        ModelKind::Explicit { matrix } => {
            if matrix.len() != p || matrix.iter().any(|row| row.len() != p) {
                return Err(Error::Config(format!("explicit matrix must be {p}x{p}")));
            }
            let m = DMatrix::from_fn(p, p, |i, j| matrix[i][j]);
            if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return Err(Error::input("explicit covariance is not symmetric"));
            }
            let s = SymmetricMatrix::new(m)?;
            if s.min_eigenvalue() <= 0.0 {
                return Err(Error::input("explicit covariance is not positive definite"));
            }
            Ok(s)
        }
    }
}

/// Draws columns `C^{1/2} z` for a fixed population covariance.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    root: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(model: &CovarianceModel) -> Result<Self> {
        Self::from_covariance(&realize_model(model)?)
    }

    pub fn from_covariance(c: &SymmetricMatrix) -> Result<Self> {
        Ok(Self {
            root: spd_sqrt(c)?.into_inner(),
        })
    }

    pub fn dim(&self) -> usize {
        self.root.nrows()
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::input("sample count must be positive"));
        }
        let z = standard_normal_matrix(self.dim(), n, rng);
        SampleMatrix::new(&self.root * z)
    }
}

/// `n` Gaussian draws from the model using a generator seeded with `seed`.
pub fn gaussian_samples(model: &CovarianceModel, n: usize, seed: u64) -> Result<SampleMatrix> {
    GaussianSampler::new(model)?.sample(n, &mut seeded_rng(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::matrix::sample_covariance;

    #[test]
    fn toeplitz_zero_is_identity() {
        let c = realize_model(&CovarianceModel::toeplitz(3, 0.0)).unwrap();
        assert_eq!(c.as_matrix(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn toeplitz_512_is_positive_definite() {
        let c = realize_model(&CovarianceModel::toeplitz(512, 0.2)).unwrap();
        assert!(c.min_eigenvalue() > 0.0);
        assert!((c.as_matrix()[(0, 2)] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn atomic_spectrum_is_exact() {
        let model = CovarianceModel::atomic(vec![(0.1, 25), (3.0, 25), (4.0, 25), (5.0, 25)], 17);
        assert_eq!(model.p, 100);
        let ev = realize_model(&model).unwrap().eigenvalues();
        let expected: Vec<f64> = [0.1, 3.0, 4.0, 5.0]
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, 25))
            .collect();
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn atomic_rejects_nonpositive_atoms_and_bad_counts() {
        let bad = CovarianceModel::atomic(vec![(0.0, 2), (1.0, 1)], 1);
        assert!(matches!(realize_model(&bad), Err(Error::Input(_))));
        let mut wrong = CovarianceModel::atomic(vec![(1.0, 2)], 1);
        wrong.p = 3;
        assert!(realize_model(&wrong).is_err());
    }

    #[test]
    fn orthogonal_basis_is_orthogonal() {
        let q = random_orthogonal(20, &mut seeded_rng(4));
        assert!((q.transpose() * &q - DMatrix::identity(20, 20)).amax() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = CovarianceModel::toeplitz(4, 0.3);
        let a = gaussian_samples(&model, 3, 42).unwrap();
        let b = gaussian_samples(&model, 3, 42).unwrap();
        assert_eq!(a, b);
        let c = gaussian_samples(&model, 3, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn identity_draws_have_identity_covariance_and_zero_mean() {
        let n = 1_000_000;
        let x = gaussian_samples(&CovarianceModel::toeplitz(4, 0.0), n, 2024).unwrap();
        let c = sample_covariance(&x);
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c.as_matrix()[(i, j)] - target).abs() < 0.01);
            }
            let mean = x.data().row(i).sum() / n as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        }
    }

    #[test]
    fn toeplitz_draws_recover_population() {
        let model = CovarianceModel::toeplitz(4, 0.2);
        let x = gaussian_samples(&model, 100_000, 7).unwrap();
        let c = sample_covariance(&x);
        let truth = realize_model(&model).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                // 2% of the unit diagonal scale.
                let t = truth.as_matrix()[(i, j)];
                assert!((c.as_matrix()[(i, j)] - t).abs() < 0.02, "({i},{j})");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind": "atomic", "p": 4, "atoms": [[0.1, 2], [3, 2]], "basis_seed": 5}"#;
        let m = CovarianceModel::from_json(text).unwrap();
        assert_eq!(
            m.kind,
            ModelKind::Atomic {
                atoms: vec![(0.1, 2), (3.0, 2)],
                basis_seed: 5
            }
        );
        let back = CovarianceModel::from_json(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(CovarianceModel::from_json(r#"{"kind": "banded", "p": 3}"#).is_err());
    }
}
