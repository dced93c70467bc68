//! Monte Carlo experiments. Trials run on a worker pool; results are gathered in
//! trial order, so the output does not depend on the number of workers.

use std::time::Instant;

use covspec::known::{fit_covariance, linear_shrinkage_init, DescentOptions};
use covspec::rmt::{
    build_spectrum, contour_functional_oracle, estimate_sqrt_functional, OracleFunction,
    SamplePair,
};
use covspec::spectral::{
    realize_model, sample_covariance, seeded_rng, true_wasserstein, CovarianceModel,
    GaussianSampler, ModelKind,
};
use covspec::Tolerances;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, HarnessResult};
use crate::report::{ExperimentOutput, ResultRow};
use crate::seeds::stream_seed;

/// Runs `f(0..n)` on `workers` threads and returns the results in index order.
pub fn run_trials<T, F>(workers: Option<usize>, n: usize, f: F) -> HarnessResult<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> HarnessResult<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::config("workers", e.to_string()))?;
    let results: Vec<HarnessResult<T>> = pool.install(|| (0..n).into_par_iter().map(&f).collect());
    results.into_iter().collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = values.fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
    s / k as f64
}

pub fn run(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutput> {
    match cfg.experiment {
        Experiment::Table1 => run_table1(cfg),
        Experiment::Figure2 => run_figure2(cfg),
        Experiment::OracleCheck => run_oracle_check(cfg),
        Experiment::Estimate | Experiment::Fit => Err(HarnessError::config(
            "experiment",
            "estimate and fit operate on sample files, not on a configuration",
        )),
    }
}

struct Table1Trial {
    rmt: f64,
    plugin: f64,
    rmt_time: f64,
    plugin_time: f64,
}

/// Wasserstein estimates between two Toeplitz populations for each `p`.
pub fn run_table1(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutput> {
    cfg.validate()?;
    let (n1, n2) = (cfg.n1_value()?, cfg.n2_value()?);
    let tol = Tolerances::default();
    let mut out = ExperimentOutput::default();
    for (pi, &p) in cfg.p_list.iter().enumerate() {
        let m1 = resized(cfg.model1.as_ref().expect("validated"), p, "model1")?;
        let m2 = resized(cfg.model2.as_ref().expect("validated"), p, "model2")?;
        let c1 = realize_model(&m1)?;
        let c2 = realize_model(&m2)?;
        let truth = true_wasserstein(&c1, &c2)? / p as f64;
        let s1 = GaussianSampler::from_covariance(&c1)?;
        let s2 = GaussianSampler::from_covariance(&c2)?;
        let cell_seed = stream_seed(cfg.seed, pi as u64);

        let trials = run_trials(cfg.workers, cfg.trials, |t| {
            let mut rng = seeded_rng(stream_seed(cell_seed, t as u64));
            let x1 = s1.sample(n1, &mut rng)?;
            let x2 = s2.sample(n2, &mut rng)?;
            let start = Instant::now();
            let pair = SamplePair::with_tolerances(&x1, &x2, &tol)?;
            let shared = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let rmt = pair.rmt_wasserstein(&tol)?.value;
            let rmt_time = shared + start.elapsed().as_secs_f64();
            let start = Instant::now();
            let plugin = pair.plugin_wasserstein().value;
            let plugin_time = shared + start.elapsed().as_secs_f64();
            Ok(Table1Trial {
                rmt,
                plugin,
                rmt_time,
                plugin_time,
            })
        })?;

        if cfg.per_trial {
            for (t, r) in trials.iter().enumerate() {
                out.rows.push(row(p, Some(n1), n2, t, "rmt-wasserstein", r.rmt, Some(truth), r.rmt_time));
                out.rows.push(row(p, Some(n1), n2, t, "plugin-wasserstein", r.plugin, Some(truth), r.plugin_time));
            }
        }
        out.rows.push(ResultRow::new(
            p,
            Some(n1),
            n2,
            "mean",
            "rmt-wasserstein",
            mean(trials.iter().map(|r| r.rmt)),
            Some(truth),
            mean(trials.iter().map(|r| r.rmt_time)),
        ));
        out.rows.push(ResultRow::new(
            p,
            Some(n1),
            n2,
            "mean",
            "plugin-wasserstein",
            mean(trials.iter().map(|r| r.plugin)),
            Some(truth),
            mean(trials.iter().map(|r| r.plugin_time)),
        ));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn row(
    p: usize,
    n1: Option<usize>,
    n2: usize,
    trial: usize,
    method: &str,
    value: f64,
    truth: Option<f64>,
    time: f64,
) -> ResultRow {
    ResultRow::new(p, n1, n2, trial.to_string(), method, value, truth, time)
}

/// Resizes a Toeplitz model to `p`; other kinds must already have dimension `p`.
fn resized(model: &CovarianceModel, p: usize, field: &str) -> HarnessResult<CovarianceModel> {
    let m = model.with_dim(p);
    if m.p != p {
        return Err(HarnessError::config(
            field,
            format!("model has dimension {} but p = {p} was requested", m.p),
        ));
    }
    Ok(m)
}

/// Spreads an atomic spectrum with equal multiplicities over a new dimension.
pub fn atomic_with_dim(model: &CovarianceModel, p: usize) -> HarnessResult<CovarianceModel> {
    match &model.kind {
        ModelKind::Atomic { atoms, basis_seed } => {
            let k = atoms.len();
            if k == 0 || !p.is_multiple_of(k) {
                return Err(HarnessError::config(
                    "p",
                    format!("p = {p} is not a multiple of the {k} atoms"),
                ));
            }
            let atoms = atoms.iter().map(|a| (a.0, p / k)).collect();
            Ok(CovarianceModel::atomic(atoms, *basis_seed))
        }
        _ => resized(model, p, "model"),
    }
}

pub const FIGURE2_METHODS: [&str; 3] = ["proposed-fit", "scm", "shrinkage-init"];

struct Figure2Trial {
    distances: [f64; 3],
    times: [f64; 3],
    stalled: bool,
    iterations: usize,
}

/// True per-dimension Wasserstein distance from the population to the fitted
/// covariance, the sample covariance and the shrinkage start, for each `n`.
pub fn run_figure2(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutput> {
    run_figure2_with(cfg, &DescentOptions::default())
}

pub fn run_figure2_with(cfg: &ExperimentConfig, opts: &DescentOptions) -> HarnessResult<ExperimentOutput> {
    cfg.validate()?;
    let model = cfg.model.as_ref().expect("validated");
    let p = model.p;
    let c = realize_model(model)?;
    let sampler = GaussianSampler::from_covariance(&c)?;
    let mut out = ExperimentOutput::default();
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let cell_seed = stream_seed(cfg.seed, ni as u64);
        let opts = DescentOptions {
            allow_boundary: n == p,
            ..*opts
        };
        let trials = run_trials(cfg.workers, cfg.trials, |t| {
            let mut rng = seeded_rng(stream_seed(cell_seed, t as u64));
            let x = sampler.sample(n, &mut rng)?;
            let start = Instant::now();
            let scm = sample_covariance(&x);
            let scm_time = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let m0 = linear_shrinkage_init(&x)?;
            let init_time = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let fit = fit_covariance(&x, &opts)?;
            let fit_time = start.elapsed().as_secs_f64();
            let pf = p as f64;
            Ok(Figure2Trial {
                distances: [
                    true_wasserstein(&c, &fit.estimate)? / pf,
                    true_wasserstein(&c, &scm)? / pf,
                    true_wasserstein(&c, &m0)? / pf,
                ],
                times: [fit_time, scm_time, init_time],
                stalled: fit.stalled,
                iterations: fit.trace.len() - 1,
            })
        })?;
        let stalled = trials.iter().filter(|t| t.stalled).count();
        out.notes.push(format!(
            "n = {n}: {} descent iterations on average, {stalled} of {} fits stalled in the line search",
            mean(trials.iter().map(|t| t.iterations as f64)),
            trials.len()
        ));
        for (k, method) in FIGURE2_METHODS.iter().enumerate() {
            if cfg.per_trial {
                for (t, r) in trials.iter().enumerate() {
                    out.rows.push(row(p, None, n, t, method, r.distances[k], None, r.times[k]));
                }
            }
            out.rows.push(ResultRow::new(
                p,
                None,
                n,
                "mean",
                method,
                mean(trials.iter().map(|r| r.distances[k])),
                None,
                mean(trials.iter().map(|r| r.times[k])),
            ));
        }
    }
    Ok(out)
}

/// Random spectra: the contour oracle for `f(t) = t` against the mean eigenvalue,
/// and the unequal-count closed form at `(n1, n1 + 1)` against the equal-count one.
pub fn run_oracle_check(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutput> {
    cfg.validate()?;
    let (n1, n2) = (cfg.n1_value()?, cfg.n2_value()?);
    let mut out = ExperimentOutput::default();
    let identity = OracleFunction::identity();
    for (pi, &p) in cfg.p_list.iter().enumerate() {
        let cell_seed = stream_seed(cfg.seed, pi as u64);
        let trials = run_trials(cfg.workers, cfg.trials, |t| {
            let mut rng = seeded_rng(stream_seed(cell_seed, t as u64));
            let mut lambda: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..5.0)).collect();
            lambda.sort_by(f64::total_cmp);
            let start = Instant::now();
            let contour = contour_functional_oracle(&build_spectrum(&lambda, n1, n2)?, &identity, 64)?;
            let contour_time = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let equal = estimate_sqrt_functional(&build_spectrum(&lambda, n1, n1)?)?.value;
            let unequal = estimate_sqrt_functional(&build_spectrum(&lambda, n1, n1 + 1)?)?.value;
            let branch_time = start.elapsed().as_secs_f64();
            let target = lambda.iter().sum::<f64>() / p as f64;
            Ok([
                row(p, Some(n1), n2, t, "contour-oracle", contour.value, Some(target), contour_time),
                row(p, Some(n1), n1 + 1, t, "rmt-sqrt-functional", unequal, Some(equal), branch_time),
            ])
        })?;
        for pair in trials {
            out.rows.extend(pair);
        }
    }
    let worst = |m: &str| {
        out.rows
            .iter()
            .filter(|r| r.method == m)
            .filter_map(|r| r.true_value.map(|t| (r.value - t).abs()))
            .fold(0.0, f64::max)
    };
    let (c, b) = (worst("contour-oracle"), worst("rmt-sqrt-functional"));
    out.notes.push(format!("largest contour deviation {c:.3e}"));
    out.notes.push(format!("largest branch gap {b:.3e}"));
    Ok(out)
}
