//! Squared-residual objective `h(M) = r(M)^2` with
//! `r(M) = (1/p) tr(M + C2_hat) - 2 D_hat(M)` and its Riemannian gradient under
//! the affine-invariant metric `<A, B>_M = tr(M^-1 A M^-1 B)`.

use nalgebra::DMatrix;
use rand::Rng;

use super::model::{estimate_sqrt_known_with, sqrt_known_and_gradient, KnownPopModel};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::spectral::matrix::{
    check_regime, check_same_dim, product_eigen_from_root, sample_covariance, spd_sqrt_and_inv,
    spd_sqrt_with, SampleMatrix, SymmetricMatrix,
};
use crate::spectral::model::seeded_rng;

/// Eigenvalues of `M C2_hat` closer than this (relative) trigger a small perturbation
/// of `M`; closer pairs put poles too near the quadrature intervals.
const SPLIT_REL: f64 = 1e-5;
const PERTURB_REL: f64 = 1e-4;
const PERTURB_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
const PERTURBED_MAX_NODES: usize = 1 << 20;

/// Objective bound to one sample block; `C2_hat` is computed once.
#[derive(Debug, Clone)]
pub struct Objective {
    c2: SymmetricMatrix,
    n2: usize,
    allow_boundary: bool,
    tol: Tolerances,
}

/// Objective value, residual and Riemannian gradient at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub h: f64,
    pub residual: f64,
    pub gradient: SymmetricMatrix,
    /// `sqrt(<G, G>_M)`.
    pub grad_norm: f64,
    /// The gradient was taken at a slightly perturbed `M` to split repeated eigenvalues.
    pub perturbed: bool,
}

impl Objective {
    /// Requires `p < n2`; uses [`Tolerances::tight`].
    pub fn new(x2: &SampleMatrix) -> Result<Self> {
        x2.require_regime()?;
        Ok(Self::from_covariance(sample_covariance(x2), x2.samples(), false, Tolerances::tight()))
    }

    /// Also admits the boundary `p == n2`.
    pub fn with_boundary(x2: &SampleMatrix) -> Result<Self> {
        if x2.dim() != x2.samples() {
            x2.require_regime()?;
        }
        Ok(Self::from_covariance(sample_covariance(x2), x2.samples(), true, Tolerances::tight()))
    }

    pub fn from_covariance(c2: SymmetricMatrix, n2: usize, allow_boundary: bool, tol: Tolerances) -> Self {
        Self {
            c2,
            n2,
            allow_boundary,
            tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.c2.dim()
    }

    pub fn samples(&self) -> usize {
        self.n2
    }

    pub fn covariance(&self) -> &SymmetricMatrix {
        &self.c2
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    fn check(&self, m: &SymmetricMatrix) -> Result<()> {
        check_same_dim(m.dim(), self.dim())?;
        if !(self.allow_boundary && self.dim() == self.n2) {
            check_regime(self.dim(), self.n2)?;
        }
        Ok(())
    }

    /// Model at `M`, or at a slightly perturbed `M` when eigenvalues of `M C2_hat`
    /// nearly coincide. Returns the point used, its square root and the eigenvectors.
    fn prepare(&self, m: &SymmetricMatrix) -> Result<Prepared> {
        self.check(m)?;
        let root = spd_sqrt_with(m, &self.tol)?;
        let eig = product_eigen_from_root(&root, &self.c2, &self.tol)?;
        if !has_close_pair(&eig.values) {
            let model = KnownPopModel::from_spectrum(&eig.values, self.n2, self.allow_boundary, &self.tol)?;
            return Ok(Prepared {
                point: None,
                root,
                u: eig.u,
                model,
            });
        }
        let shifted = split_eigenvalues(m, &self.c2, &self.tol)?;
        let root = spd_sqrt_with(&shifted, &self.tol)?;
        let eig = product_eigen_from_root(&root, &self.c2, &self.tol)?;
        let model = KnownPopModel::from_spectrum(&eig.values, self.n2, self.allow_boundary, &self.tol)?;
        Ok(Prepared {
            point: Some(shifted),
            root,
            u: eig.u,
            model,
        })
    }

    fn tolerances_for(&self, prepared: &Prepared) -> Tolerances {
        match prepared.point {
            // Split eigenvalues leave poles just outside the integration intervals,
            // which the quadrature only resolves with many more nodes.
            Some(_) => Tolerances {
                quad_max_nodes: PERTURBED_MAX_NODES,
                ..self.tol
            },
            None => self.tol,
        }
    }

    /// The spectral model at `M` (unperturbed).
    pub fn model(&self, m: &SymmetricMatrix) -> Result<KnownPopModel> {
        self.check(m)?;
        let root = spd_sqrt_with(m, &self.tol)?;
        let eig = product_eigen_from_root(&root, &self.c2, &self.tol)?;
        KnownPopModel::from_spectrum(&eig.values, self.n2, self.allow_boundary, &self.tol)
    }

    fn trace_term(&self, m: &SymmetricMatrix) -> f64 {
        (m.trace() + self.c2.trace()) / self.dim() as f64
    }

    pub fn residual(&self, m: &SymmetricMatrix) -> Result<f64> {
        let prepared = self.prepare(m)?;
        let tol = self.tolerances_for(&prepared);
        let d = estimate_sqrt_known_with(&prepared.model, &tol).map_err(degenerate_if_split(&prepared))?;
        Ok(self.trace_term(prepared.point.as_ref().unwrap_or(m)) - 2.0 * d)
    }

    pub fn value(&self, m: &SymmetricMatrix) -> Result<f64> {
        Ok(self.residual(m)?.powi(2))
    }

    pub fn evaluate(&self, m: &SymmetricMatrix) -> Result<Evaluation> {
        let p = self.dim();
        let prepared = self.prepare(m)?;
        let tol = self.tolerances_for(&prepared);
        let (d, g) =
            sqrt_known_and_gradient(&prepared.model, &tol).map_err(degenerate_if_split(&prepared))?;
        let point = prepared.point.as_ref().unwrap_or(m);
        let lambda = prepared.model.lambda();
        let v = prepared.root.as_matrix() * &prepared.u;
        let residual = self.trace_term(point) - 2.0 * d;

        // G = 2 r [M^2 / p - 2 V diag(lambda g) V^T], V = M^{1/2} U.
        let mut vs = v.clone();
        for (k, mut col) in vs.column_iter_mut().enumerate() {
            col.scale_mut(lambda[k] * g[k]);
        }
        let mm = point.as_matrix();
        let inner: DMatrix<f64> = mm * mm / p as f64 - (vs * v.transpose()) * 2.0;
        let gradient = SymmetricMatrix::symmetrized(inner * (2.0 * residual));
        let (_, inv_root) = spd_sqrt_and_inv(m)?;
        let whitened = inv_root.as_matrix() * gradient.as_matrix() * inv_root.as_matrix();
        Ok(Evaluation {
            h: residual * residual,
            residual,
            grad_norm: whitened.norm(),
            gradient,
            perturbed: prepared.point.is_some(),
        })
    }
}

struct Prepared {
    point: Option<SymmetricMatrix>,
    root: SymmetricMatrix,
    u: DMatrix<f64>,
    model: KnownPopModel,
}

fn degenerate_if_split(prepared: &Prepared) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Numerical { message, .. } if prepared.point.is_some() => Error::Degenerate(format!(
            "nearly repeated eigenvalues of M C2_hat: {message}"
        )),
        other => other,
    }
}

fn has_close_pair(values: &[f64]) -> bool {
    values
        .windows(2)
        .any(|w| w[1] - w[0] <= SPLIT_REL * w[1].abs())
}

/// Adds a fixed symmetric perturbation of size `1e-4 ||M||` until the product
/// eigenvalues separate.
fn split_eigenvalues(
    m: &SymmetricMatrix,
    c2: &SymmetricMatrix,
    tol: &Tolerances,
) -> Result<SymmetricMatrix> {
    let p = m.dim();
    let scale = PERTURB_REL * m.eigenvalues()[p - 1].abs();
    let mut rng = seeded_rng(PERTURB_SEED);
    for _ in 0..3 {
        let e = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let shifted = SymmetricMatrix::symmetrized(m.as_matrix() + (&e + e.transpose()) * (0.5 * scale));
        let (root, _) = spd_sqrt_and_inv(&shifted)?;
        if !has_close_pair(&product_eigen_from_root(&root, c2, tol)?.values) {
            return Ok(shifted);
        }
    }
    Err(Error::Degenerate(
        "eigenvalues of M C2_hat stay repeated after perturbation".into(),
    ))
}

/// `h(M)` for a sample block (strict regime `p < n2`).
pub fn objective_h(m: &SymmetricMatrix, x2: &SampleMatrix) -> Result<f64> {
    Objective::new(x2)?.value(m)
}

/// Riemannian gradient of `h` at `M`.
pub fn gradient_h(m: &SymmetricMatrix, x2: &SampleMatrix) -> Result<SymmetricMatrix> {
    Ok(Objective::new(x2)?.evaluate(m)?.gradient)
}
