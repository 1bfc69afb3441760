// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use coopjam::harness::{
    emit_csv, emit_plotdata, load_config, load_csv, run_sweep, write_csv, write_plotdata, Axis,
    Methods, ResultRow, RunOptions, Study,
};
use coopjam::montecarlo::{binomial_sigma, Execution};

/// Outage analysis and simulation for friendship-based cooperative jamming.
#[derive(Parser, Debug)]
#[command(name = "coopjam", version, about)]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "COOPJAM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form (and optionally numeric) outage figures at the base configuration.
    Analytic(RunArgs),
    /// Monte Carlo estimates at the base configuration.
    Simulate(RunArgs),
    /// Run the configured sweep and write a CSV table.
    Sweep(RunArgs),
    /// Compare simulation against the analytic figures and print verdicts.
    Validate(RunArgs),
    /// Convert a sweep CSV into whitespace-separated plot data.
    Plotdata(PlotArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment file (`key = value` lines).
    config: PathBuf,
    /// Override a file key, e.g. `--set lambda=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = coopjam::harness::config::parse_override)]
    set: Vec<(String, String)>,
    /// Absolute tolerance on the Laplace exponent (relative on probabilities).
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_trials: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// CSV written by `sweep`.
    input: PathBuf,
    /// Columns to plot against the axis value.
    #[arg(long, value_delimiter = ',', required = true)]
    columns: Vec<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(anyhow::Error),
    Numerical(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl RunArgs {
    /// Loads the file with command-line overrides applied; `methods`
    /// rewrites the requested estimators given the file's choice.
    fn study(&self, methods: Option<fn(&Study) -> Methods>) -> anyhow::Result<Study> {
        let mut overrides = self.set.clone();
        if let Some(seed) = self.seed {
            overrides.push(("seed".into(), seed.to_string()));
        }
        if let Some(n) = self.n_trials {
            overrides.push(("n_trials".into(), n.to_string()));
        }
        let mut study = load_config(&self.config, &overrides)?;
        if let Some(pick) = methods {
            study.methods = pick(&study);
        }
        Ok(study)
    }

    fn options(&self) -> anyhow::Result<RunOptions> {
        if !(self.tol > 0.0) {
            return Err(anyhow!("--tol must be positive"));
        }
        Ok(RunOptions {
            tol: self.tol,
            execution: Execution::Parallel,
        })
    }
}

fn write_rows(rows: &[ResultRow], out: &Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            emit_csv(rows, path).with_context(|| format!("writing {}", path.display()))?
        }
        None => write_csv(rows, io::stdout().lock())?,
    }
    Ok(())
}

fn finish(rows: &[ResultRow], axis: Axis, out: &Option<PathBuf>) -> Result<(), Failure> {
    write_rows(rows, out)?;
    let failures: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.error
                .as_ref()
                .map(|e| format!("{axis} = {}, policy {}: {e}", r.axis_value, r.policy))
        })
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(failures.join("\n")))
    }
}

fn analytic(args: &RunArgs) -> Result<(), Failure> {
    let pick = |s: &Study| Methods {
        closed: s.methods.closed || !s.methods.numeric,
        numeric: s.methods.numeric,
        montecarlo: false,
    };
    let spec = args
        .study(Some(pick))?
        .point_spec()
        .map_err(anyhow::Error::from)?;
    finish(&run_sweep(&spec, args.options()?), spec.axis, &args.out)
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let pick = |_: &Study| Methods {
        closed: false,
        numeric: false,
        montecarlo: true,
    };
    let spec = args
        .study(Some(pick))?
        .point_spec()
        .map_err(anyhow::Error::from)?;
    finish(&run_sweep(&spec, args.options()?), spec.axis, &args.out)
}

fn sweep(args: &RunArgs) -> Result<(), Failure> {
    let spec = args
        .study(None)?
        .sweep_spec()
        .map_err(anyhow::Error::from)?;
    finish(&run_sweep(&spec, args.options()?), spec.axis, &args.out)
}

/// Agreement margin between the simulated SOP and its analytic upper bound.
const SOP_UPPER_MARGIN: f64 = 0.02;

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn validate(args: &RunArgs) -> Result<(), Failure> {
    let pick = |s: &Study| {
        let closed = matches!(s.config.path_loss_alpha, a if a == 2.0 || a == 4.0);
        Methods {
            closed,
            numeric: !closed,
            montecarlo: true,
        }
    };
    let spec = args
        .study(Some(pick))?
        .sweep_spec()
        .map_err(anyhow::Error::from)?;
    let rows = run_sweep(&spec, args.options()?);
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path).map_err(anyhow::Error::from)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut numerical = Vec::new();
    let mut write = |line: String| writeln!(out, "{line}").map_err(anyhow::Error::from);
    for row in &rows {
        let label = format!("{} = {}, policy {}", spec.axis, row.axis_value, row.policy);
        if let Some(e) = &row.error {
            numerical.push(format!("{label}: {e}"));
            write(format!("{label}: ERROR {e}"))?;
            continue;
        }
        let top = row
            .top_closed
            .or(row.top_numeric)
            .expect("analytic TOP requested");
        let (top_mc, sop_mc) = (row.top_mc.unwrap(), row.sop_mc.unwrap());
        let (lo, up) = (row.sop_lower.unwrap(), row.sop_upper.unwrap());
        let n = spec.n_trials;
        let top_band = 3.0 * binomial_sigma(top, n);
        let sop_band = 3.0 * binomial_sigma(sop_mc, n);
        write(format!(
            "{label}: TOP analytic {top:.6} mc {top_mc:.6} (3 sigma {top_band:.6}) {}",
            verdict((top_mc - top).abs() <= top_band)
        ))?;
        write(format!(
            "{label}: SOP bounds [{lo:.6}, {up:.6}] mc {sop_mc:.6} {}",
            verdict(lo - sop_band <= sop_mc && sop_mc <= up + sop_band)
        ))?;
        write(format!(
            "{label}: SOP gap to upper bound {:.6} (margin {SOP_UPPER_MARGIN}) {}",
            (sop_mc - up).abs(),
            verdict((sop_mc - up).abs() <= SOP_UPPER_MARGIN)
        ))?;
    }
    if numerical.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(numerical.join("\n")))
    }
}

fn plotdata(args: &PlotArgs) -> Result<(), Failure> {
    let rows =
        load_csv(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    match &args.out {
        Some(path) => emit_plotdata(&rows, &args.columns, path).map_err(anyhow::Error::from)?,
        None => write_plotdata(&rows, &args.columns, io::stdout().lock())
            .map_err(anyhow::Error::from)?,
    }
    Ok(())
}

fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    match threads {
        Some(0) => Err(anyhow!("--threads must be at least 1")),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool"),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads(cli.threads)
        .map_err(Failure::from)
        .and_then(|()| match &cli.command {
            Command::Analytic(a) => analytic(a),
            Command::Simulate(a) => simulate(a),
            Command::Sweep(a) => sweep(a),
            Command::Validate(a) => validate(a),
            Command::Plotdata(a) => plotdata(a),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure:\n{msg}");
            ExitCode::from(2)
        }
    }
}
