//! Square-root functional when the first covariance is known.
//!
//! With `lambda = eig(M C2_hat)` and `xi` the secular roots for weight `1/n2`,
//! the estimate of `(1/p) sum sqrt(lambda_i(M C2))` is
//!
//! ```text
//! (2 n2 / (pi p)) sum_j int_{xi_j}^{lambda_j} sqrt(mt(x)) dx,
//! mt(x) = -psi(x) / x = (x - xi_j) / ((lambda_j - x) x) * R_j(x),
//! R_j(x) = prod_{i != j} (x - xi_i) / (x - lambda_i).
//! ```

use serde::Serialize;

use crate::rmt::quadrature::{chebyshev_adaptive, chebyshev_cosines, fejer_adaptive, fejer_weights};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::spectral::matrix::{check_regime, check_same_dim, product_eigenvalues_with};
use crate::spectral::matrix::{sample_covariance, SampleMatrix, SymmetricMatrix};
use crate::spectral::secular::{secular_rank_one_eigs_with, secular_root_jacobian};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownPopModel {
    lambda: Vec<f64>,
    xi: Vec<f64>,
    n2: usize,
}

impl KnownPopModel {
    /// From a sorted product spectrum. `allow_boundary` admits `p == n2`.
    pub fn from_spectrum(
        lambda: &[f64],
        n2: usize,
        allow_boundary: bool,
        tol: &Tolerances,
    ) -> Result<Self> {
        let p = lambda.len();
        if !(allow_boundary && p == n2) {
            check_regime(p, n2)?;
        }
        let xi = secular_rank_one_eigs_with(lambda, 1.0 / n2 as f64, allow_boundary, tol)?;
        Ok(Self {
            lambda: lambda.to_vec(),
            xi,
            n2,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn p(&self) -> usize {
        self.lambda.len()
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn c2(&self) -> f64 {
        self.p() as f64 / self.n2 as f64
    }

    /// `mt(x) = (p/n2) m(x) + (p - n2) / (n2 x)`, `m` the Stieltjes transform of the spectrum.
    pub fn mt(&self, x: f64) -> f64 {
        let m = self.lambda.iter().map(|l| 1.0 / (l - x)).sum::<f64>() / self.p() as f64;
        self.c2() * m + (self.c2() - 1.0) / x
    }
}

/// `lambda = eig(M C2_hat)`, `xi` the secular roots for `1/n2`; requires `p < n2`.
pub fn build_known_model(m: &SymmetricMatrix, x2: &SampleMatrix) -> Result<KnownPopModel> {
    let tol = Tolerances::default();
    check_same_dim(m.dim(), x2.dim())?;
    x2.require_regime()?;
    let lambda = product_eigenvalues_with(m, &sample_covariance(x2), &tol)?;
    KnownPopModel::from_spectrum(&lambda, x2.samples(), false, &tol)
}

pub fn estimate_sqrt_known(model: &KnownPopModel) -> Result<f64> {
    estimate_sqrt_known_with(model, &Tolerances::default())
}

pub fn estimate_sqrt_known_with(model: &KnownPopModel, tol: &Tolerances) -> Result<f64> {
    Ok(evaluate(model, tol, false)?.0)
}

/// The estimate together with its gradient with respect to `lambda`. The gradient
/// is that of the discretized sum at the node counts chosen for the value, so the
/// two are exactly consistent; requires distinct eigenvalues.
pub fn sqrt_known_and_gradient(model: &KnownPopModel, tol: &Tolerances) -> Result<(f64, Vec<f64>)> {
    evaluate(model, tol, true)
}

/// Reduced ratio `R_j(x)`, clamped at zero within the sign slack.
fn reduced_ratio(model: &KnownPopModel, j: usize, x: f64, tol: &Tolerances) -> Result<f64> {
    let mut r = 1.0;
    for (i, (&l, &z)) in model.lambda.iter().zip(&model.xi).enumerate() {
        if i != j {
            r *= (x - z) / (x - l);
        }
    }
    if r < 0.0 {
        if r < -tol.sign_slack {
            return Err(Error::numerical(
                format!("negative mt at x = {x}; spectrum and roots do not interlace"),
                Some(j),
            ));
        }
        r = 0.0;
    }
    Ok(r)
}

/// Interval `(0, lambda_j)` when `xi_j = 0` (`p = n2`). There `mt = R_j / (lambda_j - x)`
/// is regular at zero, and `x = b (1 - s^2)` turns `int_0^b sqrt(mt) dx` into
/// `int_{-1}^{1} sqrt(b R_j(x)) ds`, analytic in `s`.
fn boundary_interval(
    model: &KnownPopModel,
    j: usize,
    tol: &Tolerances,
    gradient: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
) -> Result<f64> {
    let (lambda, xi) = (&model.lambda, &model.xi);
    let b = lambda[j];
    let mut failure = None;
    let q = fejer_adaptive(
        -1.0,
        1.0,
        tol.quad_initial_nodes,
        tol.quad_max_nodes,
        tol.quad_rel_tol,
        |s| match reduced_ratio(model, j, b * (1.0 - s * s), tol) {
            Ok(r) => (b * r).sqrt(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let q = q.map_err(|nodes| {
        Error::numerical(
            format!("known-population quadrature did not converge with {nodes} nodes"),
            Some(j),
        )
    })?;
    let Some((g_lambda, g_xi)) = gradient else {
        return Ok(q.value);
    };
    for (s, w) in chebyshev_cosines(q.nodes).zip(fejer_weights(q.nodes)) {
        let x = b * (1.0 - s * s);
        let mut r = 1.0;
        let mut d = 0.0;
        for i in (0..model.p()).filter(|&i| i != j) {
            r *= (x - xi[i]) / (x - lambda[i]);
            d += 1.0 / (x - xi[i]) - 1.0 / (x - lambda[i]);
        }
        let v = w * (b * r.max(0.0)).sqrt();
        g_lambda[j] += v * (0.5 / b + 0.5 * d * x / b);
        for i in (0..model.p()).filter(|&i| i != j) {
            g_xi[i] -= 0.5 * v / (x - xi[i]);
            g_lambda[i] += 0.5 * v / (x - lambda[i]);
        }
    }
    Ok(q.value)
}

fn prefactor(model: &KnownPopModel) -> f64 {
    2.0 * model.n2 as f64 / (std::f64::consts::PI * model.p() as f64)
}

fn is_degenerate(model: &KnownPopModel, j: usize, tol: &Tolerances) -> bool {
    model.lambda[j] - model.xi[j] < tol.degenerate_interval_rel * model.lambda[j]
}

/// `(x - xi_j) sqrt(R_j(x) / x)`: the integrand after the Chebyshev substitution.
fn integrand(model: &KnownPopModel, j: usize, x: f64, tol: &Tolerances) -> Result<f64> {
    Ok((x - model.xi[j]) * (reduced_ratio(model, j, x, tol)? / x).sqrt())
}

fn evaluate(model: &KnownPopModel, tol: &Tolerances, with_gradient: bool) -> Result<(f64, Vec<f64>)> {
    let p = model.p();
    let (lambda, xi) = (&model.lambda, &model.xi);
    let mut total = 0.0;
    let mut g_lambda = vec![0.0; if with_gradient { p } else { 0 }];
    let mut g_xi = g_lambda.clone();
    let mut ix = vec![0.0; p];
    let mut il = vec![0.0; p];

    for j in 0..p {
        if is_degenerate(model, j, tol) {
            continue;
        }
        let (a, b) = (xi[j], lambda[j]);
        if a == 0.0 {
            total += boundary_interval(model, j, tol, with_gradient.then_some((&mut g_lambda, &mut g_xi)))?;
            continue;
        }
        let mut failure = None;
        let q = chebyshev_adaptive(
            a,
            b,
            tol.quad_initial_nodes,
            tol.quad_max_nodes,
            tol.quad_rel_tol,
            |x| {
                integrand(model, j, x, tol).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    0.0
                })
            },
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let q = q.map_err(|nodes| {
            Error::numerical(
                format!("known-population quadrature did not converge with {nodes} nodes"),
                Some(j),
            )
        })?;
        total += q.value;
        if !with_gradient {
            continue;
        }

        let inv_len = 1.0 / (b - a);
        let weight = std::f64::consts::PI / q.nodes as f64;
        for ct in chebyshev_cosines(q.nodes) {
            let alpha = 0.5 * (1.0 - ct);
            let beta = 0.5 * (1.0 + ct);
            let x = a * alpha + b * beta;
            let mut r = 1.0 / x;
            let (mut sx, mut sl) = (0.0, 0.0);
            for i in 0..p {
                if i == j {
                    ix[i] = 0.0;
                    il[i] = 0.0;
                    continue;
                }
                let dx = x - xi[i];
                let dl = x - lambda[i];
                r *= dx / dl;
                ix[i] = 1.0 / dx;
                il[i] = 1.0 / dl;
                sx += ix[i];
                sl += il[i];
            }
            let w = weight * (x - a) * r.max(0.0).sqrt();
            let d_x = 0.5 * (sx - sl - 1.0 / x);
            g_xi[j] += w * (-inv_len + d_x * alpha);
            g_lambda[j] += w * (inv_len + d_x * beta);
            for i in 0..p {
                g_xi[i] -= 0.5 * w * ix[i];
                g_lambda[i] += 0.5 * w * il[i];
            }
        }
    }

    let c = prefactor(model);
    if !with_gradient {
        return Ok((c * total, Vec::new()));
    }
    let jac = secular_root_jacobian(lambda, xi);
    for (i, gx) in g_xi.iter().enumerate() {
        for (k, gl) in g_lambda.iter_mut().enumerate() {
            *gl += gx * jac[i * p + k];
        }
    }
    for gl in g_lambda.iter_mut() {
        *gl *= c;
    }
    Ok((c * total, g_lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmt::{build_spectrum, estimate_sqrt_functional};
    use crate::spectral::model::{gaussian_samples, CovarianceModel};
    use crate::spectral::realize_model;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spectrum(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..p).map(|_| rng.random_range(0.2..4.0)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn scalar_model() {
        let x2 = SampleMatrix::new(nalgebra::DMatrix::from_row_slice(1, 4, &[1.0, -1.0, 2.0, 0.0]))
            .unwrap();
        let m = SymmetricMatrix::from_diagonal(&[3.0]).unwrap();
        let model = build_known_model(&m, &x2).unwrap();
        assert!((model.lambda()[0] - 4.5).abs() < 1e-14);
        assert!((model.xi()[0] - 4.5 * 0.75).abs() < 1e-14);
    }

    #[test]
    fn identity_known_matrix_gives_sample_spectrum() {
        let x2 = gaussian_samples(&CovarianceModel::toeplitz(6, 0.4), 30, 3).unwrap();
        let model = build_known_model(&SymmetricMatrix::identity(6), &x2).unwrap();
        let direct = sample_covariance(&x2).eigenvalues();
        for (a, b) in model.lambda().iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn interlacing_and_nonnegative_mt() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let lambda = random_spectrum(&mut rng, 15);
        let model = KnownPopModel::from_spectrum(&lambda, 40, false, &Tolerances::default()).unwrap();
        let (l, x) = (model.lambda(), model.xi());
        assert!(x[0] > 0.0);
        for j in 0..15 {
            assert!(x[j] < l[j]);
            if j > 0 {
                assert!(l[j - 1] < x[j]);
            }
            for k in 1..50 {
                let t = x[j] + (l[j] - x[j]) * k as f64 / 50.0;
                assert!(model.mt(t) >= -1e-12, "mt({t}) = {}", model.mt(t));
            }
        }
    }

    #[test]
    fn identity_case_is_near_one() {
        let x2 = gaussian_samples(&CovarianceModel::toeplitz(128, 0.0), 512, 41).unwrap();
        let model = build_known_model(&SymmetricMatrix::identity(128), &x2).unwrap();
        let v = estimate_sqrt_known(&model).unwrap();
        assert!((v - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn matches_two_sample_estimator_when_first_sample_is_huge() {
        let p = 24;
        let m1 = CovarianceModel::toeplitz(p, 0.5);
        let m2 = CovarianceModel::toeplitz(p, 0.1);
        let n2 = 60;
        let x1 = gaussian_samples(&m1, 100 * n2, 1).unwrap();
        let x2 = gaussian_samples(&m2, n2, 2).unwrap();
        let pair = crate::rmt::SamplePair::new(&x1, &x2).unwrap();
        let general =
            estimate_sqrt_functional(&build_spectrum(pair.product_spectrum(), 100 * n2, n2).unwrap())
                .unwrap()
                .value;
        let c1 = realize_model(&m1).unwrap();
        let known = estimate_sqrt_known(&build_known_model(&c1, &x2).unwrap()).unwrap();
        assert!((general - known).abs() < 0.02 * known, "{general} vs {known}");
    }

    #[test]
    fn boundary_case_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lambda = random_spectrum(&mut rng, 10);
        assert!(KnownPopModel::from_spectrum(&lambda, 10, false, &Tolerances::default()).is_err());
        let model = KnownPopModel::from_spectrum(&lambda, 10, true, &Tolerances::default()).unwrap();
        assert_eq!(model.xi()[0], 0.0);
        let v = estimate_sqrt_known(&model).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tol = Tolerances::tight();
        for (p, n2) in [(1, 5), (6, 20), (12, 13)] {
            let lambda = random_spectrum(&mut rng, p);
            let model = KnownPopModel::from_spectrum(&lambda, n2, false, &tol).unwrap();
            let (_, grad) = sqrt_known_and_gradient(&model, &tol).unwrap();
            let h = 1e-6;
            for k in 0..p {
                let mut up = lambda.clone();
                up[k] += h;
                let mut dn = lambda.clone();
                dn[k] -= h;
                let fu = estimate_sqrt_known_with(
                    &KnownPopModel::from_spectrum(&up, n2, false, &tol).unwrap(),
                    &tol,
                )
                .unwrap();
                let fd = estimate_sqrt_known_with(
                    &KnownPopModel::from_spectrum(&dn, n2, false, &tol).unwrap(),
                    &tol,
                )
                .unwrap();
                let num = (fu - fd) / (2.0 * h);
                assert!(
                    (num - grad[k]).abs() < 1e-5 * grad[k].abs().max(1e-3),
                    "p={p} k={k}: {num} vs {}",
                    grad[k]
                );
            }
        }
    }

    fn midpoint(n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = 1.0 / n as f64;
        (0..n).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn boundary_interval_matches_direct_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let lambda = random_spectrum(&mut rng, 6);
        let model = KnownPopModel::from_spectrum(&lambda, 6, true, &Tolerances::tight()).unwrap();
        let b = lambda[0];
        // int_0^b sqrt(mt) dx with x = b (1 - s^2); mt from the Stieltjes form
        let direct = midpoint(200_000, |s| 2.0 * b * s * model.mt(b * (1.0 - s * s)).max(0.0).sqrt());
        let mut rest = 0.0;
        for j in 1..6 {
            let (a, bj) = (model.xi()[j], lambda[j]);
            // x = a + (bj - a) sin^2(t), t in (0, pi/2)
            rest += midpoint(200_000, |u| {
                let t = u * std::f64::consts::FRAC_PI_2;
                let x = a + (bj - a) * t.sin().powi(2);
                let dx = 2.0 * (bj - a) * t.sin() * t.cos() * std::f64::consts::FRAC_PI_2;
                model.mt(x).max(0.0).sqrt() * dx
            });
        }
        let expected = prefactor(&model) * (direct + rest);
        let v = estimate_sqrt_known_with(&model, &Tolerances::tight()).unwrap();
        assert!((v - expected).abs() < 1e-7 * expected, "{v} vs {expected}");
    }

    #[test]
    fn boundary_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tol = Tolerances::tight();
        let p = 8;
        let lambda = random_spectrum(&mut rng, p);
        let model = KnownPopModel::from_spectrum(&lambda, p, true, &tol).unwrap();
        let (_, grad) = sqrt_known_and_gradient(&model, &tol).unwrap();
        let h = 1e-6;
        for k in 0..p {
            let mut up = lambda.clone();
            up[k] += h;
            let mut dn = lambda.clone();
            dn[k] -= h;
            let f = |l: &[f64]| {
                estimate_sqrt_known_with(&KnownPopModel::from_spectrum(l, p, true, &tol).unwrap(), &tol)
                    .unwrap()
            };
            let num = (f(&up) - f(&dn)) / (2.0 * h);
            assert!(
                (num - grad[k]).abs() < 1e-5 * grad[k].abs().max(1e-3),
                "k={k}: {num} vs {}",
                grad[k]
            );
        }
    }
}
