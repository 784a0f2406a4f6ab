//! Scenario definition, the simulation loop and run outputs.

mod config;
mod engine;
mod output;
mod plots;
mod scenario;

pub use config::{
    load_scenario, parse_scenario, reference_markdown, render_scenario, resolve_scenario, KeyDoc, KEYS,
};
pub use engine::{
    run_scenario, RunArtifacts, Sample, Simulation, WindowMetrics, METRIC_COLUMNS, SAMPLE_COLUMNS,
};
pub use output::{
    format_g9, summary, write_messages, write_metrics, write_outputs, write_timeseries, OutputOptions,
};
pub use plots::emit_plots;
pub use scenario::{Action, DgConfig, EstimatorConfig, Event, Scenario, CANONICAL, N_DG};
