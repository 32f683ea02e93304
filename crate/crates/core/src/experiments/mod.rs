//! Sweeps, plots and the self-test suite used by the command-line tool.

pub mod config;
pub mod plot;
pub mod sweep;
pub mod validation;

pub use config::{EntropyGrid, MechanismSpec, OutputPaths, RunConfig};
pub use plot::render_svg;
pub use sweep::{
    determinism_hash, parse_csv, rows_to_csv, run_sweep, run_sweep_with, write_sweep, LogBase, SweepRow,
    SweepSummary, CSV_HEADER,
};
pub use validation::{corrupted_gibbs, run_criterion, run_selftest, CriterionOutcome, Level, SelftestReport, CRITERIA};
