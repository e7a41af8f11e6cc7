//! Experiment plumbing: configuration, seeded instances, the suites that
//! estimate closedness constants, and the command line.

mod cli;
mod config;
mod instances;
mod suites;

pub use cli::{cli, run, EXIT_GUARD, EXIT_NUMERIC, EXIT_USAGE};
pub use config::{Epsilon, ExperimentConfig, SolverConfig, Thresholds};
pub use instances::{
    complex_gaussian, generate_instance, instance_rng, random_analytic_poly, random_matrix, random_matrix_poly,
    random_triangular, random_trig_poly, InstanceKind,
};
pub use suites::{embedding_sweep, run_suite, Row, Suite, SuiteReport, Violation, CSV_HEADER};
