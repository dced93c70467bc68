use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use covspec::known::DescentOptions;
use covspec_bench::experiments::atomic_with_dim;
use covspec_bench::files::{estimate_files, fit_file};
use covspec_bench::report::{rows_to_csv, write_outputs};
use covspec_bench::{run, Experiment, ExperimentConfig, HarnessError, HarnessResult};

#[derive(Parser)]
#[command(name = "covspec", version, about = "Covariance distance estimation in the p ~ n regime")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random-matrix vs plug-in Wasserstein estimates between two Toeplitz populations.
    Table1(RunArgs),
    /// Distance to the population of the fitted covariance, the SCM and the shrinkage start.
    Figure2(RunArgs),
    /// Contour-integral and branch-limit checks on random spectra.
    OracleCheck(RunArgs),
    /// Distance estimates between the populations behind two sample files.
    Estimate {
        file1: PathBuf,
        file2: PathBuf,
    },
    /// Fit a covariance to one sample file by descent on the squared residual.
    Fit(FitArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination (a `.json` sidecar is written next to it); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Dimension list, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// Sample counts for figure2, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    /// Emit one row per trial as well as the means.
    #[arg(long)]
    per_trial: bool,
}

#[derive(Args)]
struct FitArgs {
    file: PathBuf,
    /// Where to write the fitted matrix.
    #[arg(long)]
    out: PathBuf,
    /// Descent trace CSV; defaults to `<out>.trace.csv`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Accept as many dimensions as samples.
    #[arg(long)]
    allow_boundary: bool,
}

fn build_config(experiment: Experiment, args: &RunArgs) -> HarnessResult<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default_for(experiment),
    };
    if cfg.experiment != experiment {
        return Err(HarnessError::config(
            "experiment",
            format!("configuration is for {:?}, not {experiment:?}", cfg.experiment),
        ));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if args.n1.is_some() {
        cfg.n1 = args.n1;
    }
    if args.n2.is_some() {
        cfg.n2 = args.n2;
    }
    if !args.n_list.is_empty() {
        cfg.n_list = args.n_list.clone();
    }
    cfg.per_trial |= args.per_trial;
    if !args.p.is_empty() {
        if experiment == Experiment::Figure2 {
            let [p] = args.p[..] else {
                return Err(HarnessError::config("p", "figure2 takes a single dimension"));
            };
            let model = cfg
                .model
                .as_ref()
                .ok_or_else(|| HarnessError::config("model", "required for figure2"))?;
            cfg.model = Some(atomic_with_dim(model, p)?);
            cfg.p_list = vec![p];
        } else {
            cfg.p_list = args.p.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> HarnessResult<()> {
    let cfg = build_config(experiment, args)?;
    let start = Instant::now();
    let output = run(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    match &cfg.output {
        Some(path) => {
            write_outputs(path, &cfg, &output, elapsed)?;
            for note in &output.notes {
                eprintln!("{note}");
            }
            eprintln!("wrote {} rows to {} in {elapsed:.1} s", output.rows.len(), path.display());
        }
        None => print!("{}", rows_to_csv(&output.rows)?),
    }
    Ok(())
}

fn execute(cli: Cli) -> HarnessResult<()> {
    match cli.command {
        Command::Table1(args) => run_experiment(Experiment::Table1, &args),
        Command::Figure2(args) => run_experiment(Experiment::Figure2, &args),
        Command::OracleCheck(args) => run_experiment(Experiment::OracleCheck, &args),
        Command::Estimate { file1, file2 } => {
            let report = estimate_files(&file1, &file2)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Fit(args) => {
            let trace = args.trace.clone().unwrap_or_else(|| {
                let mut name = args.out.as_os_str().to_owned();
                name.push(".trace.csv");
                PathBuf::from(name)
            });
            let opts = DescentOptions {
                max_iterations: args.max_iter,
                allow_boundary: args.allow_boundary,
                ..DescentOptions::default()
            };
            let summary = fit_file(&args.file, &args.out, &trace, &opts)?;
            if summary.stalled {
                eprintln!("warning: line search stalled; the last accepted iterate was written");
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
