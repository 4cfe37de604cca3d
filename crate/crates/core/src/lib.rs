//! Simulation of the one-dimensional Hadamard walk with a detector that is
//! removed part-way through the evolution (a quench), together with the
//! observables used to characterise it and an exact classical counterpart.

pub mod classical;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod measurement;
pub mod observables;

pub use error::{WalkError, WalkResult};
pub use harness::{
    run_experiment, run_grid, run_sweep, ExperimentConfig, ExperimentKind, ResultTable,
};
pub use lattice::{
    coin, evolve, initial_state, occupation, step, Coin, Hadamard, InitialCondition, Occupation,
    Scratch, Spinor, UnitaryCoin, WalkState,
};
pub use measurement::{
    apply_detector, run_free, run_quenched, run_quenched_with, run_siw, DetectorSchedule, Lifetime,
    RecordOptions, SiteWindow, StepEntry, WalkRecord,
};
