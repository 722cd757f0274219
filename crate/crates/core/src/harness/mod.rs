//! Experiment driver: configuration, parameter sweeps and runtime benchmarks.

pub mod bench;
pub mod config;
pub mod sweep;

pub use bench::{run_runtime_bench, BenchReport};
pub use config::{load_config, parse_config, ConfigError, Mode, Overrides, Range, SweepSpec};
pub use sweep::{run_sweep, write_csv, Manifest, RunRecord, SweepResult};
