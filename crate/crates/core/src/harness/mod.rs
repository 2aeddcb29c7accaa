//! Experiment driver: sweeps seeds, SE targets, trade-off weights, splits
//! and benchmark schemes; tracks feasibility ratios; and emits CSV/JSON and
//! plot-ready aggregates.

mod config;
mod emit;
mod runner;

pub use config::{
    Accounting, ConfigValidationError, ExperimentConfig, Scheme, SolverKind, Topology,
    EXACT_BINARY_BUDGET,
};
pub use emit::{
    emit, plot_points, to_csv_string, to_json_string, to_plotdata_string, EmitFormat, PlotPoint,
    CSV_COLUMNS,
};
pub use runner::{run_experiment, AxisPoint, HarnessError, ResultRecord};
