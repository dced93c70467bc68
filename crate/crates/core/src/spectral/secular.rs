//! Eigenvalues of the negative rank-one update `diag(l) - rho * sqrt(l) sqrt(l)^T`.
//!
//! The eigenvalues are the roots of the secular function
//! `x -> 1 - rho * sum_i l_i / (l_i - x)`, one in each gap of the sorted `l`
//! plus one in `(0, l_1)`. Each root is bracketed by its two poles, so a
//! bisection always converges; the bracket is expressed as an offset from the
//! closer pole to keep `l_i - x` accurate near it.

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Secular roots for `rho * p < 1`, ascending.
pub fn secular_rank_one_eigs(lambda: &[f64], rho: f64) -> Result<Vec<f64>> {
    secular_rank_one_eigs_with(lambda, rho, false, &Tolerances::default())
}

/// As [`secular_rank_one_eigs`]; with `allow_boundary` the limit case `rho * p == 1`
/// (`p == n`) is accepted, in which case the smallest root is exactly `0`.
pub fn secular_rank_one_eigs_with(
    lambda: &[f64],
    rho: f64,
    allow_boundary: bool,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let p = lambda.len();
    if p == 0 {
        return Err(Error::input("empty eigenvalue list"));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::input(format!("rank-one weight must be positive, got {rho}")));
    }
    if lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite eigenvalue"));
    }
    if lambda.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::input("eigenvalues must be sorted ascending"));
    }
    if lambda[0] <= 0.0 {
        return Err(Error::input(format!(
            "eigenvalues must be positive, smallest is {}",
            lambda[0]
        )));
    }
    let load = rho * p as f64;
    let n_equiv = (1.0 / rho).round() as usize;
    let at_boundary = (load - 1.0).abs() <= 1e-12;
    if load > 1.0 + 1e-12 || (at_boundary && !allow_boundary) {
        return Err(Error::Regime { p, n: n_equiv });
    }

    let groups = deflate(lambda, tol.duplicate_rel);
    let poles: Vec<f64> = groups.iter().map(|g| g.value).collect();
    let weights: Vec<f64> = groups.iter().map(|g| g.weight).collect();

    let mut roots = Vec::with_capacity(p);
    for g in &groups {
        roots.extend(std::iter::repeat_n(g.value, g.count - 1));
    }
    for k in 0..poles.len() {
        let lo = if k == 0 { 0.0 } else { poles[k - 1] };
        let hi = poles[k];
        if k == 0 && at_boundary {
            roots.push(0.0);
            continue;
        }
        roots.push(solve_bracket(&poles, &weights, rho, lo, hi, tol));
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

struct Group {
    value: f64,
    weight: f64,
    count: usize,
}

fn deflate(lambda: &[f64], rel: f64) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::with_capacity(lambda.len());
    let mut start = 0;
    for i in 1..=lambda.len() {
        let split = i == lambda.len() || (lambda[i] - lambda[start]) > rel * lambda[i].abs();
        if split {
            let members = &lambda[start..i];
            let weight: f64 = members.iter().sum();
            groups.push(Group {
                value: weight / members.len() as f64,
                weight,
                count: members.len(),
            });
            start = i;
        }
    }
    groups
}

/// Root of `1 - rho * sum_g w_g / (d_g - x)` in `(lo, hi)`, `hi = d_k`.
fn solve_bracket(
    poles: &[f64],
    weights: &[f64],
    rho: f64,
    lo: f64,
    hi: f64,
    tol: &Tolerances,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let f_mid = secular_value(poles, weights, rho, mid);
    // Root left of `mid` when f(mid) < 0 (the function decreases between poles).
    let origin = if f_mid < 0.0 { lo } else { hi };
    let shifted: Vec<f64> = poles.iter().map(|d| d - origin).collect();
    let (mut a, mut b) = if f_mid < 0.0 {
        (0.0, mid - origin)
    } else {
        (mid - origin, 0.0)
    };
    if f_mid == 0.0 {
        return mid;
    }
    let width_stop = tol.secular_bracket_rel * (hi - lo);
    while b - a > width_stop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let f = secular_value(&shifted, weights, rho, m);
        if f > 0.0 {
            a = m;
        } else if f < 0.0 {
            b = m;
        } else {
            return origin + m;
        }
    }
    let mut tau = 0.5 * (a + b);
    for _ in 0..tol.secular_newton_steps {
        let (f, df) = secular_value_and_slope(&shifted, weights, rho, tau);
        if df == 0.0 || !f.is_finite() {
            break;
        }
        let next = tau - f / df;
        if next > a && next < b {
            tau = next;
        } else {
            break;
        }
    }
    origin + tau
}

fn secular_value(poles: &[f64], weights: &[f64], rho: f64, x: f64) -> f64 {
    let s: f64 = poles
        .iter()
        .zip(weights)
        .map(|(d, w)| w / (d - x))
        .sum();
    1.0 - rho * s
}

fn secular_value_and_slope(poles: &[f64], weights: &[f64], rho: f64, x: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut ds = 0.0;
    for (d, w) in poles.iter().zip(weights) {
        let inv = 1.0 / (d - x);
        s += w * inv;
        ds += w * inv * inv;
    }
    (1.0 - rho * s, -rho * ds)
}

/// Sensitivities `d root_i / d lambda_k` of the secular roots, returned row-major
/// (`out[i * p + k]`). Requires distinct `lambda` and roots away from the poles.
pub fn secular_root_jacobian(lambda: &[f64], roots: &[f64]) -> Vec<f64> {
    let p = lambda.len();
    let mut out = vec![0.0; p * p];
    for (i, &xi) in roots.iter().enumerate() {
        let s: f64 = lambda.iter().map(|&l| l / ((l - xi) * (l - xi))).sum();
        for (k, &l) in lambda.iter().enumerate() {
            out[i * p + k] = xi / ((l - xi) * (l - xi) * s);
        }
    }
    out
}
