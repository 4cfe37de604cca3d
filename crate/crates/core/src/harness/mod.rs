//! Experiment configuration, dispatch, parallel sweeps and CSV output.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod sweep;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind, WalkKind};
pub use experiments::{run_cell, run_experiment, split_cells, ENGINE_VERSION};
pub use manifest::{ManifestEntry, RunManifest};
pub use sweep::{run_grid, run_sweep, CellOutcome, GridOutcome, SweepCache};
pub use table::{format_real, Cell, Column, ColumnType, ResultTable};
