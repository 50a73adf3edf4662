//! Parameter sweeps over `(n, p)` grids and their CSV/JSONL output.

mod config;
mod output;
mod sweep;

pub use config::{
    default_statistics, parse_stats, threshold, Cell, Mode, PSpec, Stat, SweepConfig,
};
pub use output::{emit, format_sig, render, to_csv, to_jsonl, Format, CSV_HEADER};
pub use sweep::{run_cell, run_sweep, trial_spec, ResultRow};
