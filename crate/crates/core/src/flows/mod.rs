//! Coupled explicit time stepping of the metric, tracked 1-forms, a gauge
//! function and a scalar subsolution.

mod integrator;
mod run;
mod state;

pub use integrator::{
    cfl_dt, cfl_dt_with, coupled_step, form_heat_step, gauge_diffusion_step, ricci_flow_step,
    scalar_heat_step, Components, IntegratorSpec, Scheme, TimeStep,
};
pub use run::{integrate, RunConfig, RunStatus, Trajectory};
pub use state::{FlowState, FlowSystem, GaugeTrack, RicciPath, Subsolution, TrackedForm};
