//! Square-root functional, Wasserstein and Frobenius estimators.

use serde::Serialize;

use super::quadrature::chebyshev_adaptive;
use super::spectrum::{build_spectrum_with, ProductSpectrum};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::spectral::matrix::{
    check_regime, check_same_dim, product_eigenvalues_with, sample_covariance, SampleMatrix,
    SymmetricMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RmtSqrtFunctional,
    RmtWasserstein,
    PluginWasserstein,
    RmtFrobenius,
    PluginFrobenius,
    ContourOracle,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::RmtSqrtFunctional => "rmt-sqrt-functional",
            Method::RmtWasserstein => "rmt-wasserstein",
            Method::PluginWasserstein => "plugin-wasserstein",
            Method::RmtFrobenius => "rmt-frobenius",
            Method::PluginFrobenius => "plugin-frobenius",
            Method::ContourOracle => "contour-oracle",
        }
    }
}

/// Which closed form produced a square-root functional estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    EqualN,
    UnequalN,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub branch: Option<Branch>,
    /// Number of quadrature intervals evaluated (0 for closed forms).
    pub intervals: usize,
    pub total_nodes: usize,
    pub max_nodes: usize,
    /// Samples were relabelled so that the first has the fewer observations.
    pub swapped_labels: bool,
    pub warnings: Vec<String>,
}

/// Per-dimension estimate (all distances are divided by `p`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub value: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl DistanceEstimate {
    fn plain(value: f64, method: Method) -> Self {
        Self {
            value,
            method,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Consistent estimate of `(1/p) sum sqrt(lambda_i(C1 C2))`.
pub fn estimate_sqrt_functional(model: &ProductSpectrum) -> Result<DistanceEstimate> {
    estimate_sqrt_functional_with(model, &Tolerances::default())
}

pub fn estimate_sqrt_functional_with(
    model: &ProductSpectrum,
    tol: &Tolerances,
) -> Result<DistanceEstimate> {
    let p = model.p() as f64;
    let lambda = model.lambda();
    if model.n1() == model.n2() {
        let n = model.n1() as f64;
        let s: f64 = lambda
            .iter()
            .zip(model.xi())
            .map(|(l, x)| (l - x) / (l.sqrt() + x.sqrt()))
            .sum();
        return Ok(DistanceEstimate {
            value: 2.0 * n / p * s,
            method: Method::RmtSqrtFunctional,
            diagnostics: Diagnostics {
                branch: Some(Branch::EqualN),
                ..Diagnostics::default()
            },
        });
    }

    // The integral form holds with the smaller sample as the first one; the
    // estimand is symmetric in the two samples, so relabel when needed.
    let swapped = model.n1() > model.n2();
    let (inner, outer, n_large) = if swapped {
        (model.eta(), model.xi(), model.n1())
    } else {
        (model.xi(), model.eta(), model.n2())
    };

    let mut diagnostics = Diagnostics {
        branch: Some(Branch::UnequalN),
        swapped_labels: swapped,
        ..Diagnostics::default()
    };
    let mut integral = 0.0;
    for j in 0..lambda.len() {
        let (a, b) = (inner[j], outer[j]);
        let mut sign_error = None;
        let mut g = |x: f64| {
            unequal_integrand(x, j, lambda, inner, outer, tol).unwrap_or_else(|e| {
                sign_error.get_or_insert(e);
                0.0
            })
        };
        let piece = if b - a < tol.degenerate_interval_rel * lambda[j] {
            std::f64::consts::PI * g(a)
        } else {
            let q = chebyshev_adaptive(
                a,
                b,
                tol.quad_initial_nodes,
                tol.quad_max_nodes,
                tol.quad_rel_tol,
                &mut g,
            )
            .map_err(|nodes| {
                Error::numerical(
                    format!("square-root functional quadrature did not converge with {nodes} nodes"),
                    Some(j),
                )
            })?;
            diagnostics.total_nodes += q.nodes;
            diagnostics.max_nodes = diagnostics.max_nodes.max(q.nodes);
            q.value
        };
        if let Some(e) = sign_error {
            return Err(e);
        }
        diagnostics.intervals += 1;
        integral += piece;
    }
    let lead = 2.0 * ((model.n1() as f64) * (model.n2() as f64)).sqrt() / p
        * lambda.iter().map(|l| l.sqrt()).sum::<f64>();
    let value = lead + 2.0 * n_large as f64 / (std::f64::consts::PI * p) * integral;
    Ok(DistanceEstimate {
        value,
        method: Method::RmtSqrtFunctional,
        diagnostics,
    })
}

/// `sqrt(-phi/psi) psi'` times `sqrt((x - a)(b - x))` on `(a, b) = (inner_j, outer_j)`,
/// where `phi` has poles at `inner` and `psi` zeros at `outer`.
fn unequal_integrand(
    x: f64,
    j: usize,
    lambda: &[f64],
    inner: &[f64],
    outer: &[f64],
    tol: &Tolerances,
) -> Result<f64> {
    let mut ratio = x;
    let mut negative = false;
    let mut dlog = 0.0;
    for i in 0..lambda.len() {
        let dl = x - lambda[i];
        negative ^= dl < 0.0;
        dlog -= 1.0 / dl;
        if i != j {
            let db = x - outer[i];
            ratio *= db / (x - inner[i]);
            negative ^= db < 0.0;
            dlog += 1.0 / db;
        }
    }
    if ratio < 0.0 {
        if ratio < -tol.sign_slack * x {
            return Err(Error::numerical(
                format!("-phi/psi is negative ({ratio:.3e}) at x = {x}; roots do not interlace"),
                Some(j),
            ));
        }
        ratio = 0.0;
    }
    let slope = 1.0 + (x - outer[j]) * dlog;
    let magnitude = ratio.sqrt() * slope;
    Ok(if negative { -magnitude } else { magnitude })
}

/// Sample covariances of a pair of observation blocks together with the
/// spectrum of their product; every estimator below reuses it.
#[derive(Debug, Clone)]
pub struct SamplePair {
    c1: SymmetricMatrix,
    c2: SymmetricMatrix,
    n1: usize,
    n2: usize,
    lambda: Vec<f64>,
}

impl SamplePair {
    pub fn new(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<Self> {
        Self::with_tolerances(x1, x2, &Tolerances::default())
    }

    pub fn with_tolerances(x1: &SampleMatrix, x2: &SampleMatrix, tol: &Tolerances) -> Result<Self> {
        check_same_dim(x1.dim(), x2.dim())?;
        let c1 = sample_covariance(x1);
        let c2 = sample_covariance(x2);
        let lambda = product_eigenvalues_with(&c1, &c2, tol)?;
        Ok(Self {
            c1,
            c2,
            n1: x1.samples(),
            n2: x2.samples(),
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.c1.dim()
    }

    pub fn covariances(&self) -> (&SymmetricMatrix, &SymmetricMatrix) {
        (&self.c1, &self.c2)
    }

    pub fn product_spectrum(&self) -> &[f64] {
        &self.lambda
    }

    pub fn spectrum(&self, tol: &Tolerances) -> Result<ProductSpectrum> {
        build_spectrum_with(&self.lambda, self.n1, self.n2, tol)
    }

    fn mean_trace_sum(&self) -> f64 {
        (self.c1.trace() + self.c2.trace()) / self.dim() as f64
    }

    /// `(1/p) tr(C1_hat + C2_hat) - 2 D_hat(sqrt)`.
    pub fn rmt_wasserstein(&self, tol: &Tolerances) -> Result<DistanceEstimate> {
        check_regime(self.dim(), self.n1)?;
        check_regime(self.dim(), self.n2)?;
        let sqrt = estimate_sqrt_functional_with(&self.spectrum(tol)?, tol)?;
        Ok(DistanceEstimate {
            value: self.mean_trace_sum() - 2.0 * sqrt.value,
            method: Method::RmtWasserstein,
            diagnostics: sqrt.diagnostics,
        })
    }

    /// Closed-form Wasserstein distance of the sample covariances, divided by `p`.
    pub fn plugin_wasserstein(&self) -> DistanceEstimate {
        let cross: f64 = self.lambda.iter().map(|l| l.sqrt()).sum();
        let value = self.mean_trace_sum() - 2.0 * cross / self.dim() as f64;
        DistanceEstimate::plain(value, Method::PluginWasserstein)
    }

    /// Bias-corrected `(1/p) ||C1 - C2||_F^2`.
    pub fn rmt_frobenius(&self) -> DistanceEstimate {
        let p = self.dim() as f64;
        let (a, b) = (self.c1.as_matrix(), self.c2.as_matrix());
        let sq = (a.norm_squared() + b.norm_squared()) / p;
        let t1 = self.c1.trace() / p;
        let t2 = self.c2.trace() / p;
        let cross = a.dot(b) / p;
        let value = sq - p / self.n1 as f64 * t1 * t1 - p / self.n2 as f64 * t2 * t2 - 2.0 * cross;
        DistanceEstimate::plain(value, Method::RmtFrobenius)
    }

    pub fn plugin_frobenius(&self) -> DistanceEstimate {
        let value = (self.c1.as_matrix() - self.c2.as_matrix()).norm_squared() / self.dim() as f64;
        DistanceEstimate::plain(value, Method::PluginFrobenius)
    }
}

/// Per-dimension Wasserstein estimate from two sample blocks (`p < min(n1, n2)`).
pub fn estimate_wasserstein(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<DistanceEstimate> {
    let tol = Tolerances::default();
    check_same_dim(x1.dim(), x2.dim())?;
    x1.require_regime()?;
    x2.require_regime()?;
    SamplePair::with_tolerances(x1, x2, &tol)?.rmt_wasserstein(&tol)
}

pub fn plugin_wasserstein(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<DistanceEstimate> {
    Ok(SamplePair::new(x1, x2)?.plugin_wasserstein())
}

pub fn estimate_frobenius(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<DistanceEstimate> {
    Ok(SamplePair::new(x1, x2)?.rmt_frobenius())
}

pub fn plugin_frobenius(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<DistanceEstimate> {
    Ok(SamplePair::new(x1, x2)?.plugin_frobenius())
}
