//! Observed product spectrum and the rational maps built on it.
//!
//! With `lambda` the eigenvalues of `C1_hat C2_hat`, `xi` the secular roots for
//! weight `1/n1` and `eta` those for `1/n2`,
//!
//! ```text
//! phi(x) = x / (1 - c1 - c1 x m(x)) = x prod(x - lambda_i) / prod(x - xi_i)
//! psi(x) = 1 - c2 - c2 x m(x)       =   prod(x - eta_i) / prod(x - lambda_i)
//! ```
//!
//! where `m(x) = (1/p) sum 1/(lambda_i - x)` and `c_a = p / n_a`.

use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::spectral::matrix::check_regime;
use crate::spectral::secular::secular_rank_one_eigs_with;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductSpectrum {
    lambda: Vec<f64>,
    xi: Vec<f64>,
    eta: Vec<f64>,
    n1: usize,
    n2: usize,
}

/// Values and first derivatives of `phi` and `psi` at a real point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPsi {
    pub phi: f64,
    pub psi: f64,
    pub dphi: f64,
    pub dpsi: f64,
}

impl ProductSpectrum {
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Secular roots for weight `1/n1`.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Secular roots for weight `1/n2`.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn p(&self) -> usize {
        self.lambda.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn c1(&self) -> f64 {
        self.p() as f64 / self.n1 as f64
    }

    pub fn c2(&self) -> f64 {
        self.p() as f64 / self.n2 as f64
    }

    /// Stieltjes transform of the empirical product spectrum, `(1/p) sum 1/(lambda_i - x)`.
    pub fn stieltjes(&self, x: f64) -> f64 {
        self.lambda.iter().map(|l| 1.0 / (l - x)).sum::<f64>() / self.p() as f64
    }

    /// The same spectrum with the sample labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            lambda: self.lambda.clone(),
            xi: self.eta.clone(),
            eta: self.xi.clone(),
            n1: self.n2,
            n2: self.n1,
        }
    }

    /// `phi`, `psi` and their derivatives at `x`; errors at a pole of either map.
    pub fn phi_psi(&self, x: f64) -> Result<PhiPsi> {
        self.phi_psi_with(x, &Tolerances::default())
    }

    pub fn phi_psi_with(&self, x: f64, tol: &Tolerances) -> Result<PhiPsi> {
        check_pole(x, &self.xi, tol)?;
        check_pole(x, &self.lambda, tol)?;
        // phi = x * R(x), R = prod (x - lambda) / (x - xi)
        let (r, dr) = rational(x, &self.lambda, &self.xi);
        let (psi, dpsi) = rational(x, &self.eta, &self.lambda);
        Ok(PhiPsi {
            phi: x * r,
            psi,
            dphi: r + x * dr,
            dpsi,
        })
    }
}

fn check_pole(x: f64, poles: &[f64], tol: &Tolerances) -> Result<()> {
    for (index, &root) in poles.iter().enumerate() {
        if (x - root).abs() <= tol.pole_rel * root.abs().max(x.abs()) {
            return Err(Error::Domain { x, root, index });
        }
    }
    Ok(())
}

/// Value and derivative of `prod (x - z_i) / prod (x - q_i)` for equally long
/// `zeros` and `poles`, accumulated as log-magnitude plus sign. The zero closest
/// to `x` is factored out so the derivative stays finite on a zero.
fn rational(x: f64, zeros: &[f64], poles: &[f64]) -> (f64, f64) {
    let k = zeros
        .iter()
        .enumerate()
        .min_by(|a, b| (x - a.1).abs().total_cmp(&(x - b.1).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut log_mag = 0.0;
    let mut negative = false;
    let mut dlog = 0.0;
    for (i, &z) in zeros.iter().enumerate() {
        if i == k {
            continue;
        }
        let d = x - z;
        log_mag += d.abs().ln();
        negative ^= d < 0.0;
        dlog += 1.0 / d;
    }
    for &q in poles {
        let d = x - q;
        log_mag -= d.abs().ln();
        negative ^= d < 0.0;
        dlog -= 1.0 / d;
    }
    let rest = if negative { -log_mag.exp() } else { log_mag.exp() };
    let near = x - zeros[k];
    (near * rest, rest + near * rest * dlog)
}

/// Builds the spectrum model, requiring `0 < lambda` and `p < min(n1, n2)`.
pub fn build_spectrum(lambda: &[f64], n1: usize, n2: usize) -> Result<ProductSpectrum> {
    build_spectrum_with(lambda, n1, n2, &Tolerances::default())
}

pub fn build_spectrum_with(
    lambda: &[f64],
    n1: usize,
    n2: usize,
    tol: &Tolerances,
) -> Result<ProductSpectrum> {
    let p = lambda.len();
    check_regime(p, n1)?;
    check_regime(p, n2)?;
    let xi = secular_rank_one_eigs_with(lambda, 1.0 / n1 as f64, false, tol)?;
    let eta = if n1 == n2 {
        xi.clone()
    } else {
        secular_rank_one_eigs_with(lambda, 1.0 / n2 as f64, false, tol)?
    };
    Ok(ProductSpectrum {
        lambda: lambda.to_vec(),
        xi,
        eta,
        n1,
        n2,
    })
}
