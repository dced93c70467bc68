//! Numerical contour integral of the spectral functional representation.
//!
//! Evaluates
//!
//! ```text
//! (n2 / (2 pi i p)) * closed integral of f(phi/psi) (phi'/phi - psi'/psi) psi dz
//! ```
//!
//! on a circle in the right half-plane enclosing every `lambda`, `xi` and `eta`.
//! Only single-valued `f` are accepted, so no branch cut has to be tracked.
//! This is a cross-check for the closed forms, not an estimator for `sqrt`.

use nalgebra::Complex;

use super::estimators::{DistanceEstimate, Diagnostics, Method};
use super::spectrum::ProductSpectrum;
use crate::config::Tolerances;
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Functions the contour oracle can integrate.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleFunction {
    /// `sum_k coeffs[k] t^k`.
    Polynomial(Vec<f64>),
    Exp,
}

impl OracleFunction {
    pub fn identity() -> Self {
        Self::Polynomial(vec![0.0, 1.0])
    }

    pub fn constant(c: f64) -> Self {
        Self::Polynomial(vec![c])
    }

    /// Parses `t`, `1`, `t^k`, `exp`. Multivalued functions are refused.
    pub fn from_name(name: &str) -> Result<Self> {
        let s = name.trim().to_ascii_lowercase();
        match s.as_str() {
            "t" | "z" | "identity" => return Ok(Self::identity()),
            "exp" => return Ok(Self::Exp),
            "sqrt" | "log" | "ln" | "log2" | "pow" => {
                return Err(Error::Config(format!(
                    "'{name}' is multivalued; the contour oracle only takes single-valued functions"
                )))
            }
            _ => {}
        }
        if let Some(k) = s.strip_prefix("t^").or_else(|| s.strip_prefix("z^")) {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Config(format!("bad power in '{name}'")))?;
            let mut coeffs = vec![0.0; k + 1];
            coeffs[k] = 1.0;
            return Ok(Self::Polynomial(coeffs));
        }
        if let Ok(c) = s.parse::<f64>() {
            return Ok(Self::constant(c));
        }
        Err(Error::Config(format!("unsupported oracle function '{name}'")))
    }

    fn eval(&self, t: C64) -> C64 {
        match self {
            Self::Polynomial(coeffs) => coeffs
                .iter()
                .rev()
                .fold(C64::new(0.0, 0.0), |acc, &c| acc * t + c),
            Self::Exp => t.exp(),
        }
    }
}

/// The rational integrand at complex `z`, without the `n2 / (2 pi i p)` factor.
pub fn contour_integrand(model: &ProductSpectrum, f: &OracleFunction, z: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let mut phi = z;
    let mut psi = one;
    let mut dlog_phi = one / z;
    let mut dlog_psi = C64::new(0.0, 0.0);
    for ((&l, &x), &e) in model.lambda().iter().zip(model.xi()).zip(model.eta()) {
        let (zl, zx, ze) = (z - l, z - x, z - e);
        phi *= zl / zx;
        psi *= ze / zl;
        let (il, ix, ie) = (one / zl, one / zx, one / ze);
        dlog_phi += il - ix;
        dlog_psi += ie - il;
    }
    f.eval(phi / psi) * (dlog_phi - dlog_psi) * psi
}

/// Circle used by the oracle: `(center, radius)`.
pub fn oracle_circle(model: &ProductSpectrum) -> (f64, f64) {
    let lambda = model.lambda();
    let center = 0.5 * (lambda[0] + lambda[lambda.len() - 1]);
    let left = 0.75 * model.xi()[0].min(model.eta()[0]);
    (center, center - left)
}

/// Contour value of the functional for `f`, starting the trapezoid rule at `nodes`
/// points and doubling until successive values agree.
pub fn contour_functional_oracle(
    model: &ProductSpectrum,
    f: &OracleFunction,
    nodes: usize,
) -> Result<DistanceEstimate> {
    contour_functional_oracle_with(model, f, nodes, &Tolerances::default())
}

pub fn contour_functional_oracle_with(
    model: &ProductSpectrum,
    f: &OracleFunction,
    nodes: usize,
    tol: &Tolerances,
) -> Result<DistanceEstimate> {
    let (center, radius) = oracle_circle(model);
    if center - radius <= 0.0 || !radius.is_finite() {
        return Err(Error::Config(format!(
            "contour reaches Re z <= 0 (center {center}, radius {radius})"
        )));
    }
    let scale = model.n2() as f64 / model.p() as f64;
    let trapezoid = |n: usize| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let w = C64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64);
            acc += contour_integrand(model, f, center + w) * w;
        }
        acc * (scale / n as f64)
    };

    let mut n = nodes.max(8);
    let mut prev = trapezoid(n);
    let mut total = n;
    loop {
        if 2 * n > tol.contour_max_nodes {
            return Err(Error::numerical(
                format!("contour quadrature did not converge with {n} nodes"),
                None,
            ));
        }
        n *= 2;
        let next = trapezoid(n);
        total += n;
        let change = (next - prev).norm();
        prev = next;
        if change <= tol.contour_rel_tol * next.norm().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let mut warnings = Vec::new();
    if prev.im.abs() > 1e-8 * prev.re.abs().max(1.0) {
        warnings.push(format!("imaginary part {:.3e} discarded", prev.im));
    }
    Ok(DistanceEstimate {
        value: prev.re,
        method: Method::ContourOracle,
        diagnostics: Diagnostics {
            total_nodes: total,
            max_nodes: n,
            warnings,
            ..Diagnostics::default()
        },
    })
}
