//! Riemannian gradient descent on the SPD cone, started from linear shrinkage.

use std::io::Write;

use serde::Serialize;

use super::objective::{Evaluation, Objective};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::spectral::matrix::{sample_covariance, spd_sqrt_and_inv, SampleMatrix, SymmetricMatrix};

/// Exponents beyond this make the retraction overflow; such steps are refused.
const MAX_EXPONENT: f64 = 600.0;

/// `M^{1/2} exp(-t M^{-1/2} G M^{-1/2}) M^{1/2}`.
pub fn retract(m: &SymmetricMatrix, g: &SymmetricMatrix, t: f64) -> Result<SymmetricMatrix> {
    let (root, inv_root) = spd_sqrt_and_inv(m)?;
    let (r, ir) = (root.as_matrix(), inv_root.as_matrix());
    let a = SymmetricMatrix::symmetrized(ir * g.as_matrix() * ir * (-t));
    let eig = a.eigen();
    let largest = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if !(largest <= MAX_EXPONENT) {
        return Err(Error::numerical(
            format!("retraction exponent {largest:.3e} out of range"),
            None,
        ));
    }
    let e = eig.map(f64::exp);
    Ok(SymmetricMatrix::symmetrized(r * e.as_matrix() * r))
}

/// Intensity `rho` of the linear shrinkage toward `mu I`.
pub fn shrinkage_intensity(x2: &SampleMatrix) -> Result<f64> {
    Ok(shrinkage_parts(x2)?.0)
}

fn shrinkage_parts(x2: &SampleMatrix) -> Result<(f64, f64, SymmetricMatrix)> {
    let (p, n) = (x2.dim(), x2.samples());
    if n < 2 {
        return Err(Error::input("linear shrinkage needs at least two samples"));
    }
    let c = sample_covariance(x2);
    let mu = c.trace() / p as f64;
    let c_norm2 = c.as_matrix().norm_squared();
    // ||C - mu I||^2 = ||C||^2 - p mu^2
    let d2 = ((c_norm2 - p as f64 * mu * mu) / p as f64).max(0.0);
    if d2 <= 0.0 {
        return Ok((0.0, mu, c));
    }
    // sum_k ||x_k x_k^T - C||^2 = sum_k |x_k|^4 - n ||C||^2
    let fourth: f64 = x2
        .data()
        .column_iter()
        .map(|col| col.norm_squared().powi(2))
        .sum();
    let b2 = ((fourth - n as f64 * c_norm2) / (n as f64 * n as f64 * p as f64)).max(0.0);
    Ok((b2.min(d2) / d2, mu, c))
}

/// `rho mu I + (1 - rho) C2_hat`.
pub fn linear_shrinkage_init(x2: &SampleMatrix) -> Result<SymmetricMatrix> {
    let (rho, mu, c) = shrinkage_parts(x2)?;
    if rho == 0.0 {
        return Ok(c);
    }
    let p = c.dim();
    let m = c.as_matrix() * (1.0 - rho) + nalgebra::DMatrix::identity(p, p) * (rho * mu);
    Ok(SymmetricMatrix::symmetrized(m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    pub max_iterations: usize,
    /// Stop once the Riemannian gradient norm is below this; also stop when `h < grad_tol^2`.
    pub grad_tol: f64,
    pub armijo: f64,
    pub shrink: f64,
    pub initial_step: f64,
    pub min_step: f64,
    /// Accept `p == n2`.
    pub allow_boundary: bool,
    pub tolerances: Tolerances,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            grad_tol: 1e-7,
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
            min_step: 1e-12,
            allow_boundary: false,
            tolerances: Tolerances::tight(),
        }
    }
}

/// One accepted iterate. Iteration 0 is the starting point (`step = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentState {
    pub iteration: usize,
    pub h_value: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub estimate: SymmetricMatrix,
    pub initial: SymmetricMatrix,
    pub trace: Vec<DescentState>,
    /// The line search could not find a decrease above `min_step`.
    pub stalled: bool,
    /// A stopping threshold was met before the iteration cap.
    pub converged: bool,
}

/// Fits a covariance to `X2` by minimizing `h` from the linear-shrinkage start.
pub fn fit_covariance(x2: &SampleMatrix, opts: &DescentOptions) -> Result<FitResult> {
    let objective = if opts.allow_boundary {
        Objective::with_boundary(x2)?
    } else {
        Objective::new(x2)?
    };
    let objective = Objective::from_covariance(
        objective.covariance().clone(),
        objective.samples(),
        opts.allow_boundary,
        opts.tolerances,
    );
    let m0 = linear_shrinkage_init(x2)?;
    fit_from(&objective, m0, opts)
}

/// Descent from an arbitrary SPD start.
pub fn fit_from(objective: &Objective, m0: SymmetricMatrix, opts: &DescentOptions) -> Result<FitResult> {
    let mut m = m0.clone();
    let mut current: Evaluation = objective.evaluate(&m)?;
    let mut trace = vec![DescentState {
        iteration: 0,
        h_value: current.h,
        grad_norm: current.grad_norm,
        step: 0.0,
        min_eigenvalue: m.min_eigenvalue(),
    }];
    let done = |e: &Evaluation| e.grad_norm < opts.grad_tol || e.h < opts.grad_tol * opts.grad_tol;
    let mut stalled = false;
    let mut converged = done(&current);

    for iteration in 1..=opts.max_iterations {
        if converged {
            break;
        }
        let slope = current.grad_norm * current.grad_norm;
        let mut t = opts.initial_step;
        let mut accepted = None;
        while t >= opts.min_step {
            if let Ok(candidate) = retract(&m, &current.gradient, t) {
                if let Ok(h) = objective.value(&candidate) {
                    if h <= current.h - opts.armijo * t * slope && h < current.h {
                        accepted = Some(candidate);
                        break;
                    }
                }
            }
            t *= opts.shrink;
        }
        let Some(next) = accepted else {
            stalled = true;
            break;
        };
        current = objective.evaluate(&next)?;
        m = next;
        trace.push(DescentState {
            iteration,
            h_value: current.h,
            grad_norm: current.grad_norm,
            step: t,
            min_eigenvalue: m.min_eigenvalue(),
        });
        converged = done(&current);
    }
    Ok(FitResult {
        estimate: m,
        initial: m0,
        trace,
        stalled,
        converged,
    })
}

/// Writes `iteration,h,grad_norm,step` rows.
pub fn write_trace_csv<W: Write>(trace: &[DescentState], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "h", "grad_norm", "step"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for s in trace {
        w.write_record([
            s.iteration.to_string(),
            s.h_value.to_string(),
            s.grad_norm.to_string(),
            s.step.to_string(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::model::{gaussian_samples, CovarianceModel};
    use crate::spectral::realize_model;
    use nalgebra::DMatrix;

    #[test]
    fn retraction_at_zero_step_is_identity_map() {
        let m = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let g = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        let r = retract(&m, &g, 0.0).unwrap();
        assert!((r.as_matrix() - m.as_matrix()).norm() < 1e-14);
        let far = retract(&m, &g, 1e6);
        assert!(far.is_err());
    }

    #[test]
    fn shrinkage_of_rank_one_data() {
        // Every column equals e1 sqrt(p): each x x^T equals C2_hat, so the spread
        // term vanishes and no shrinkage is applied.
        let p = 5;
        let mut data = DMatrix::zeros(p, 10);
        data.row_mut(0).fill((p as f64).sqrt());
        let x2 = SampleMatrix::new(data).unwrap();
        let c = sample_covariance(&x2);
        assert!((c.as_matrix()[(0, 0)] - p as f64).abs() < 1e-12);
        assert_eq!(shrinkage_intensity(&x2).unwrap(), 0.0);
        let m0 = linear_shrinkage_init(&x2).unwrap();
        assert!((m0.as_matrix() - c.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn shrinkage_matches_direct_sum() {
        let x2 = gaussian_samples(&CovarianceModel::toeplitz(6, 0.5), 9, 12).unwrap();
        let c = sample_covariance(&x2);
        let p = 6.0;
        let mu = c.trace() / p;
        let d2 = (c.as_matrix() - DMatrix::identity(6, 6) * mu).norm_squared() / p;
        let b2: f64 = x2
            .data()
            .column_iter()
            .map(|x| (x * x.transpose() - c.as_matrix()).norm_squared() / p)
            .sum::<f64>()
            / 81.0;
        let rho = b2.min(d2) / d2;
        assert!((shrinkage_intensity(&x2).unwrap() - rho).abs() < 1e-12);
        assert!(rho > 0.0 && rho <= 1.0);
        assert!(linear_shrinkage_init(&x2).unwrap().min_eigenvalue() > 0.0);
    }

    #[test]
    fn shrinkage_vanishes_with_many_samples() {
        let model = CovarianceModel::toeplitz(6, 0.5);
        let few = shrinkage_intensity(&gaussian_samples(&model, 50, 1).unwrap()).unwrap();
        let many = shrinkage_intensity(&gaussian_samples(&model, 50_000, 1).unwrap()).unwrap();
        assert!(many < few && many < 1e-2, "{few} {many}");
    }

    #[test]
    fn isotropic_covariance_left_alone() {
        let x2 = SampleMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0])).unwrap();
        let m0 = linear_shrinkage_init(&x2).unwrap();
        assert!((m0.as_matrix() - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn descent_decreases_and_stays_spd() {
        let model = CovarianceModel::toeplitz(10, 0.6);
        let x2 = gaussian_samples(&model, 30, 3).unwrap();
        let opts = DescentOptions {
            max_iterations: 40,
            ..DescentOptions::default()
        };
        let fit = fit_covariance(&x2, &opts).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1].h_value < w[0].h_value);
        }
        assert!(fit.trace.iter().all(|s| s.min_eigenvalue > 0.0));
        assert!(fit.trace.last().unwrap().h_value <= fit.trace[0].h_value);
        let mut buf = Vec::new();
        write_trace_csv(&fit.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,h,grad_norm,step\n0,"));
        assert_eq!(text.lines().count(), fit.trace.len() + 1);
    }

    #[test]
    fn long_descent_reaches_stationarity() {
        let x2 = gaussian_samples(&CovarianceModel::toeplitz(5, 0.3), 25, 8).unwrap();
        // The default unit initial step makes progress slow near the minimum set.
        let opts = DescentOptions {
            initial_step: 1e3,
            max_iterations: 2000,
            grad_tol: 1e-14,
            ..DescentOptions::default()
        };
        let fit = fit_covariance(&x2, &opts).unwrap();
        let first = fit.trace[0].grad_norm;
        let last = fit.trace.last().unwrap();
        assert!(
            last.grad_norm < 1e-6 * first || last.h_value < 1e-14,
            "{first} -> {} (h = {})",
            last.grad_norm,
            last.h_value
        );
    }

    #[test]
    fn classical_regime_recovers_population() {
        let model = CovarianceModel::toeplitz(4, 0.2);
        let x2 = gaussian_samples(&model, 100_000, 13).unwrap();
        let fit = fit_covariance(&x2, &DescentOptions::default()).unwrap();
        let c = realize_model(&model).unwrap();
        let rel = (fit.estimate.as_matrix() - c.as_matrix()).norm() / c.as_matrix().norm();
        assert!(rel < 0.05, "{rel}");
    }
}
