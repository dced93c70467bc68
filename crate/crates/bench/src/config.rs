use std::path::{Path, PathBuf};

use covspec::spectral::CovarianceModel;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Table1,
    Figure2,
    Estimate,
    Fit,
    OracleCheck,
}

/// Experiment description, readable from JSON:
///
/// ```json
/// {"experiment": "table1", "p_list": [16, 64], "n1": 1024, "n2": 2048,
///  "model1": {"kind": "toeplitz", "p": 0, "r": 0.2},
///  "model2": {"kind": "toeplitz", "p": 0, "r": 0.4},
///  "trials": 100, "seed": 1}
/// ```
///
/// Toeplitz models are resized to each `p`; other kinds must match it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub p_list: Vec<usize>,
    #[serde(default)]
    pub n1: Option<usize>,
    #[serde(default)]
    pub n2: Option<usize>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub model1: Option<CovarianceModel>,
    #[serde(default)]
    pub model2: Option<CovarianceModel>,
    /// Single population (figure2).
    #[serde(default)]
    pub model: Option<CovarianceModel>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; `None` uses all cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Emit one row per trial in addition to the means.
    #[serde(default)]
    pub per_trial: bool,
}

impl ExperimentConfig {
    fn bare(experiment: Experiment, trials: usize) -> Self {
        Self {
            experiment,
            p_list: Vec::new(),
            n1: None,
            n2: None,
            n_list: Vec::new(),
            model1: None,
            model2: None,
            model: None,
            trials,
            seed: 0,
            output: None,
            workers: None,
            per_trial: false,
        }
    }

    /// Toeplitz(0.2) against Toeplitz(0.4), `n1 = 1024`, `n2 = 2048`, 100 trials.
    pub fn table1() -> Self {
        Self {
            p_list: vec![2, 4, 8, 16, 32, 64, 128, 256, 512],
            n1: Some(1024),
            n2: Some(2048),
            model1: Some(CovarianceModel::toeplitz(0, 0.2)),
            model2: Some(CovarianceModel::toeplitz(0, 0.4)),
            ..Self::bare(Experiment::Table1, 100)
        }
    }

    /// `p = 100`, spectrum `{0.1, 3, 4, 5}` with equal weights, 10 realizations.
    pub fn figure2() -> Self {
        Self {
            p_list: vec![100],
            n_list: vec![100, 111, 122, 133, 144, 155, 166, 177, 188, 200],
            model: Some(CovarianceModel::atomic(
                vec![(0.1, 25), (3.0, 25), (4.0, 25), (5.0, 25)],
                7,
            )),
            ..Self::bare(Experiment::Figure2, 10)
        }
    }

    /// Random product spectra checked against the contour oracle and the branch limit.
    pub fn oracle_check() -> Self {
        Self {
            p_list: vec![2, 8, 32, 64],
            n1: Some(256),
            n2: Some(512),
            ..Self::bare(Experiment::OracleCheck, 25)
        }
    }

    pub fn default_for(experiment: Experiment) -> Self {
        match experiment {
            Experiment::Table1 => Self::table1(),
            Experiment::Figure2 => Self::figure2(),
            Experiment::OracleCheck => Self::oracle_check(),
            Experiment::Estimate | Experiment::Fit => Self::bare(experiment, 1),
        }
    }

    pub fn from_json(text: &str) -> HarnessResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    fn need<T: Copy>(value: Option<T>, field: &str) -> HarnessResult<T> {
        value.ok_or_else(|| HarnessError::config(field, "required for this experiment"))
    }

    pub fn n1_value(&self) -> HarnessResult<usize> {
        Self::need(self.n1, "n1")
    }

    pub fn n2_value(&self) -> HarnessResult<usize> {
        Self::need(self.n2, "n2")
    }

    /// Checks the fields the chosen experiment uses.
    pub fn validate(&self) -> HarnessResult<()> {
        if self.trials == 0 {
            return Err(HarnessError::config("trials", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::config("workers", "must be at least 1"));
        }
        match self.experiment {
            Experiment::Table1 | Experiment::OracleCheck => {
                let (n1, n2) = (self.n1_value()?, self.n2_value()?);
                if self.p_list.is_empty() {
                    return Err(HarnessError::config("p_list", "must not be empty"));
                }
                for &p in &self.p_list {
                    if p == 0 || p >= n1.min(n2) {
                        return Err(HarnessError::config(
                            "p_list",
                            format!("p = {p} must satisfy 0 < p < min(n1, n2) = {}", n1.min(n2)),
                        ));
                    }
                }
                if self.experiment == Experiment::Table1 {
                    Self::need(self.model1.as_ref(), "model1")?;
                    Self::need(self.model2.as_ref(), "model2")?;
                }
            }
            Experiment::Figure2 => {
                let model = Self::need(self.model.as_ref(), "model")?;
                if self.n_list.is_empty() {
                    return Err(HarnessError::config("n_list", "must not be empty"));
                }
                // p == n is admitted here: the fit runs at the boundary of the regime.
                if let Some(&n) = self.n_list.iter().find(|&&n| n < model.p) {
                    return Err(HarnessError::config(
                        "n_list",
                        format!("n = {n} is below p = {}", model.p),
                    ));
                }
            }
            Experiment::Estimate | Experiment::Fit => {}
        }
        Ok(())
    }
}
