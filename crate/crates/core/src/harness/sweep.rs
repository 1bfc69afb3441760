//! Sweep execution: one result row per (axis value, policy).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::config::{Axis, Methods, SweepSpec};
use crate::analytic::Method;
use crate::model::{JammingScheme, NetworkConfig, Policy};
use crate::montecarlo::{simulate, Execution};
use crate::outage::{secrecy_outage_lower, secrecy_outage_upper, transmission_outage, OutageError};

/// One line of the results table. Fields left `None` were not requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    pub policy: Policy,
    pub alpha: f64,
    pub top_closed: Option<f64>,
    pub top_numeric: Option<f64>,
    pub sop_upper: Option<f64>,
    pub sop_lower: Option<f64>,
    pub top_mc: Option<f64>,
    pub top_ci_lo: Option<f64>,
    pub top_ci_hi: Option<f64>,
    pub sop_mc: Option<f64>,
    pub sop_ci_lo: Option<f64>,
    pub sop_ci_hi: Option<f64>,
    pub n_trials: Option<u64>,
    pub seed: Option<u64>,
    /// Failures at this point, joined with `; `.
    pub error: Option<String>,
}

impl ResultRow {
    pub fn empty(axis_value: f64, policy: Policy, alpha: f64) -> Self {
        ResultRow {
            axis_value,
            policy,
            alpha,
            top_closed: None,
            top_numeric: None,
            sop_upper: None,
            sop_lower: None,
            top_mc: None,
            top_ci_lo: None,
            top_ci_hi: None,
            sop_mc: None,
            sop_ci_lo: None,
            sop_ci_hi: None,
            n_trials: None,
            seed: None,
            error: None,
        }
    }
}

/// Settings shared by every point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tol: f64,
    pub execution: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: 1e-8,
            execution: Execution::Parallel,
        }
    }
}

/// Evaluates every requested method at one configuration. Failures are
/// recorded in the row and do not stop the other methods.
pub fn run_point(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    axis_value: f64,
    methods: Methods,
    n_trials: u64,
    seed: u64,
    options: RunOptions,
) -> ResultRow {
    let mut row = ResultRow::empty(axis_value, scheme.policy, config.path_loss_alpha);
    let mut errors = Vec::new();
    let mut keep = |r: Result<f64, OutageError>, what: &str| match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{what}: {e}"));
            None
        }
    };
    let tol = options.tol;
    if methods.closed {
        row.top_closed = keep(
            transmission_outage(config, scheme, Method::Closed, tol),
            "top_closed",
        );
    }
    if methods.numeric {
        row.top_numeric = keep(
            transmission_outage(config, scheme, Method::Numeric, tol),
            "top_numeric",
        );
    }
    if methods.closed || methods.numeric {
        let method = if methods.closed {
            Method::Closed
        } else {
            Method::Numeric
        };
        row.sop_upper = keep(
            secrecy_outage_upper(config, scheme, method, tol),
            "sop_upper",
        );
        row.sop_lower = keep(
            secrecy_outage_lower(config, scheme, method, tol),
            "sop_lower",
        );
    }
    if methods.montecarlo {
        match simulate(config, scheme, n_trials, seed, options.execution) {
            Ok(counts) => {
                let top = counts.transmission_rate();
                let sop = counts.secrecy_rate();
                row.top_mc = Some(top.rate);
                row.top_ci_lo = Some(top.ci.lo);
                row.top_ci_hi = Some(top.ci.hi);
                row.sop_mc = Some(sop.rate);
                row.sop_ci_lo = Some(sop.ci.lo);
                row.sop_ci_hi = Some(sop.ci.hi);
                row.n_trials = Some(n_trials);
                row.seed = Some(seed);
            }
            Err(e) => errors.push(format!("montecarlo: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

fn point(
    spec: &SweepSpec,
    axis: Axis,
    value: f64,
    scheme: &JammingScheme,
    options: RunOptions,
) -> ResultRow {
    let (mut config, mut scheme) = (spec.config, *scheme);
    axis.apply(&mut config, &mut scheme, value);
    run_point(
        &config,
        &scheme,
        value,
        spec.methods,
        spec.n_trials,
        spec.seed,
        options,
    )
}

/// Rows in axis order, policies in file order within each value. Every point
/// uses the same seed, so neighbouring points share their random networks.
pub fn run_sweep(spec: &SweepSpec, options: RunOptions) -> Vec<ResultRow> {
    let jobs: Vec<(f64, &JammingScheme)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.schemes.iter().map(move |s| (v, s)))
        .collect();
    let run = |&(v, s): &(f64, &JammingScheme)| point(spec, spec.axis, v, s, options);
    match options.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => jobs.par_iter().map(run).collect(),
        _ => jobs.iter().map(run).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    const BASE: &str = "D = 30\nlambda = 0.1\nlambda_e = 0.001\nl = 1\nalpha = 4\nbeta = 0.5\nbeta_e = 0.1\nR1 = 1\nR2 = 10\n";

    #[test]
    fn single_value_matches_direct_calls() {
        let study = parse_config(&format!("{BASE}policy = D\nsweep_axis = lambda\nsweep_values = 0.05\nmethods = closed, numeric\n")).unwrap();
        let rows = run_sweep(&study.sweep_spec().unwrap(), RunOptions::default());
        assert_eq!(rows.len(), 1);
        let cfg = NetworkConfig {
            legit_intensity: 0.05,
            ..NetworkConfig::reference()
        };
        let scheme = JammingScheme::new(1.0, 10.0, Policy::Decreasing);
        let row = &rows[0];
        assert_eq!(
            row.top_closed,
            Some(transmission_outage(&cfg, &scheme, Method::Closed, 1e-8).unwrap())
        );
        assert_eq!(
            row.sop_upper,
            Some(secrecy_outage_upper(&cfg, &scheme, Method::Closed, 1e-8).unwrap())
        );
        assert!((row.top_numeric.unwrap() - row.top_closed.unwrap()).abs() < 1e-8);
        assert_eq!(row.top_mc, None);
        assert_eq!(row.error, None);
    }

    #[test]
    fn rows_follow_axis_then_policy_order() {
        let study = parse_config(&format!(
            "{BASE}policy = I, D, E(0.5)\nsweep_axis = R1\nsweep_values = 1, 4, 10\n"
        ))
        .unwrap();
        let rows = run_sweep(&study.sweep_spec().unwrap(), RunOptions::default());
        let keys: Vec<(f64, &str)> = rows
            .iter()
            .map(|r| (r.axis_value, r.policy.tag()))
            .collect();
        assert_eq!(
            keys,
            [
                (1.0, "I"),
                (1.0, "D"),
                (1.0, "E"),
                (4.0, "I"),
                (4.0, "D"),
                (4.0, "E"),
                (10.0, "I"),
                (10.0, "D"),
                (10.0, "E")
            ]
        );
    }

    #[test]
    fn failures_are_recorded_in_row() {
        // no closed form at alpha 3; the simulator still runs
        let cfg = NetworkConfig {
            path_loss_alpha: 3.0,
            ..NetworkConfig::reference()
        };
        let scheme = JammingScheme::new(1.0, 10.0, Policy::Increasing);
        let methods = Methods {
            closed: true,
            numeric: false,
            montecarlo: true,
        };
        let row = run_point(&cfg, &scheme, 0.1, methods, 200, 1, RunOptions::default());
        assert!(row.error.unwrap().contains("top_closed"));
        assert!(row.top_mc.is_some());
    }

    #[test]
    fn montecarlo_columns_are_thread_independent() {
        let study = parse_config(&format!(
            "{BASE}policy = I, E(0.2)\nsweep_axis = lambda\nsweep_values = 0.02, 0.1\nmethods = mc\nn_trials = 2000\nseed = 11\n"
        ))
        .unwrap();
        let spec = study.sweep_spec().unwrap();
        let par = run_sweep(&spec, RunOptions::default());
        let seq = run_sweep(
            &spec,
            RunOptions {
                execution: Execution::Sequential,
                ..RunOptions::default()
            },
        );
        assert_eq!(par, seq);
        for row in &par {
            assert_eq!(row.n_trials, Some(2000));
            let (lo, hi) = (row.top_ci_lo.unwrap(), row.top_ci_hi.unwrap());
            assert!(lo <= row.top_mc.unwrap() && row.top_mc.unwrap() <= hi);
        }
    }
}
