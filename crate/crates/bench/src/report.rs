use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, HarnessResult};

/// One CSV line. `trial` is the trial index or `"mean"`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub p: usize,
    pub n1: Option<usize>,
    pub n2: usize,
    pub trial: String,
    pub method: String,
    pub value: f64,
    pub true_value: Option<f64>,
    pub rel_error: Option<f64>,
    /// Seconds; kept out of the CSV so that reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

impl ResultRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: usize,
        n1: Option<usize>,
        n2: usize,
        trial: impl Into<String>,
        method: &str,
        value: f64,
        true_value: Option<f64>,
        wall_time: f64,
    ) -> Self {
        let rel_error = true_value
            .filter(|t| *t > 0.0)
            .map(|t| (value - t).abs() / t);
        Self {
            p,
            n1,
            n2,
            trial: trial.into(),
            method: method.to_string(),
            value,
            true_value,
            rel_error,
            wall_time,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub notes: Vec<String>,
}

impl ExperimentOutput {
    /// Rows with `trial == "mean"` and the given method.
    pub fn means<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.trial == "mean" && r.method == method)
    }
}

pub fn write_rows_csv<W: Write>(rows: &[ResultRow], out: W) -> HarnessResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| HarnessError::io("writing CSV", e))
}

pub fn rows_to_csv(rows: &[ResultRow]) -> HarnessResult<String> {
    let mut buf = Vec::new();
    write_rows_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn csv_error(e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io("writing CSV", io),
        other => HarnessError::io(
            "writing CSV",
            std::io::Error::other(format!("{other:?}")),
        ),
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a ExperimentConfig,
    wall_time_seconds: f64,
    row_wall_times: Vec<f64>,
    notes: &'a [String],
}

/// Path of the JSON sidecar written next to a CSV file.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the CSV and, next to it, a JSON record of the configuration, timings and notes.
pub fn write_outputs(
    path: &Path,
    cfg: &ExperimentConfig,
    output: &ExperimentOutput,
    wall_time: f64,
) -> HarnessResult<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| HarnessError::io(format!("creating {}", path.display()), e))?;
    write_rows_csv(&output.rows, std::io::BufWriter::new(file))?;
    let sidecar = Sidecar {
        config: cfg,
        wall_time_seconds: wall_time,
        row_wall_times: output.rows.iter().map(|r| r.wall_time).collect(),
        notes: &output.notes,
    };
    let json = serde_json::to_string_pretty(&sidecar)?;
    let side = sidecar_path(path);
    std::fs::write(&side, json)
        .map_err(|e| HarnessError::io(format!("writing {}", side.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_error_only_for_positive_truth() {
        let r = ResultRow::new(4, Some(10), 20, "0", "x", 1.5, Some(1.0), 0.0);
        assert_eq!(r.rel_error, Some(0.5));
        let r = ResultRow::new(4, None, 20, "mean", "x", 1.5, Some(0.0), 0.0);
        assert_eq!(r.rel_error, None);
    }

    #[test]
    fn csv_layout() {
        let rows = vec![
            ResultRow::new(4, Some(10), 20, "mean", "rmt-wasserstein", 3.0, Some(2.0), 3.0),
            ResultRow::new(100, None, 100, "mean", "scm", 0.6, None, 1.0),
        ];
        let text = rows_to_csv(&rows).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p,n1,n2,trial,method,value,true_value,rel_error");
        assert_eq!(lines[1], "4,10,20,mean,rmt-wasserstein,3.0,2.0,0.5");
        assert_eq!(lines[2], "100,,100,mean,scm,0.6,,");
    }
}
