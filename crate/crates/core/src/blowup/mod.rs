//! Parabolic rescaling of trajectories and decay-at-infinity profiles.

mod decay;
mod rescale;

pub use decay::{decay_monitor, DecayField, DecayMonitorSpec, DecayProfile};
pub use rescale::{
    curvature_scaling_residual, length_scaling_check, rescale_metric, rescale_trajectory,
    LengthScalingEntry, LengthScalingReport, RescaledSnapshot, RescalingSchedule, SchedulePolicy,
};
