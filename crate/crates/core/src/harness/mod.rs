//! Experiment files, sweeps and result serialization.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{
    load_config, parse_config, parse_config_with, Axis, ConfigError, Methods, Study, SweepSpec,
};
pub use output::{
    emit_csv, emit_plotdata, load_csv, read_csv, write_csv, write_plotdata, OutputError,
};
pub use sweep::{run_point, run_sweep, ResultRow, RunOptions};
