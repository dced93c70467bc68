//! Estimation and fitting on sample matrices stored as CSV (`p` rows, `n` columns).

use std::path::Path;

use covspec::known::{fit_covariance, write_trace_csv, DescentOptions};
use covspec::rmt::{DistanceEstimate, SamplePair};
use covspec::spectral::{read_matrix_csv, write_matrix_csv, SampleMatrix};
use covspec::Tolerances;
use serde::Serialize;

use crate::error::{HarnessError, HarnessResult};

pub fn read_samples(path: &Path) -> HarnessResult<SampleMatrix> {
    Ok(SampleMatrix::new(read_matrix_csv(path)?)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub rmt_wasserstein: DistanceEstimate,
    pub plugin_wasserstein: DistanceEstimate,
    pub rmt_frobenius: DistanceEstimate,
    pub plugin_frobenius: DistanceEstimate,
}

/// All per-dimension distance estimates between the populations behind two blocks.
pub fn estimate_pair(x1: &SampleMatrix, x2: &SampleMatrix) -> HarnessResult<EstimateReport> {
    x1.require_regime()?;
    x2.require_regime()?;
    let tol = Tolerances::default();
    let pair = SamplePair::with_tolerances(x1, x2, &tol)?;
    Ok(EstimateReport {
        p: x1.dim(),
        n1: x1.samples(),
        n2: x2.samples(),
        rmt_wasserstein: pair.rmt_wasserstein(&tol)?,
        plugin_wasserstein: pair.plugin_wasserstein(),
        rmt_frobenius: pair.rmt_frobenius(),
        plugin_frobenius: pair.plugin_frobenius(),
    })
}

pub fn estimate_files(path1: &Path, path2: &Path) -> HarnessResult<EstimateReport> {
    estimate_pair(&read_samples(path1)?, &read_samples(path2)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub p: usize,
    pub n: usize,
    pub iterations: usize,
    pub initial_h: f64,
    pub h: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub stalled: bool,
}

/// Fits a covariance to the samples in `input`, writing the matrix to `out` and
/// the descent trace to `trace`.
pub fn fit_file(
    input: &Path,
    out: &Path,
    trace: &Path,
    opts: &DescentOptions,
) -> HarnessResult<FitSummary> {
    let x = read_samples(input)?;
    let fit = fit_covariance(&x, opts)?;
    write_matrix_csv(out, fit.estimate.as_matrix())?;
    let file = std::fs::File::create(trace)
        .map_err(|e| HarnessError::io(format!("creating {}", trace.display()), e))?;
    write_trace_csv(&fit.trace, std::io::BufWriter::new(file))?;
    let last = fit.trace.last().expect("trace starts with the initial point");
    Ok(FitSummary {
        p: x.dim(),
        n: x.samples(),
        iterations: last.iteration,
        initial_h: fit.trace[0].h_value,
        h: last.h_value,
        grad_norm: last.grad_norm,
        converged: fit.converged,
        stalled: fit.stalled,
    })
}
