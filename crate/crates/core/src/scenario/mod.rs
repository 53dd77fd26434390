//! Scenario files, run outputs and run directories.
//!
//! A scenario is flat `section.key = value` text; `#` starts a comment.
//! Every key has a default, so an empty file is the 64×64 flat torus run to
//! T = 1. [`ScenarioSpec::to_text`] writes the canonical form, which parses
//! back to the same spec.

mod build;
mod output;
mod spec;

pub use build::{build, build_grid, run_scenario, Scenario};
pub use output::{
    compute_verdicts, load_snapshot, monitors_csv, read_monitors_csv, scenario_hash, write_outputs, write_snapshot,
    ArrayEntry, RunDir, SnapshotHeader, Summary, TheoremVerdict, ENERGY_TOL, GAUGE_TOL_EVOLVING, GAUGE_TOL_STATIC,
    MONITORS_CSV, SCENARIO_FILE, SUMMARY_JSON,
};
pub use spec::{
    parse_scenario, BufferMode, Family, FormPreset, FormSpec, GridSpec, MetricPreset, MonitorToggles, ProbeSpec,
    ScenarioSpec, SubsolutionPreset,
};
