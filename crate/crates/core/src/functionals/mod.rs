//! Norms, loop pairings and lengths, monitor records, and the monotonicity
//! and identity reports evaluated on them.

mod cutoff;
mod monitor;
mod norms;
mod probe;
mod reports;

pub use cutoff::{cutoff_boundary_term, cutoff_eta, cutoff_gradient_excess, distance_from, DistanceField};
pub use monitor::{labels, BufferSpec, Monitor, MonitorRecord, MonitorSet, R_NONNEG_TOL};
pub use norms::{integrate, l2_norm_form, lp_norm_scalar, sup_norm_form, SupNorm, NEGATIVITY_TOL};
pub use probe::{loop_length, loop_pairing, min_circumference, CohomologyProbe, Cycle, PROBE_CLOSED_TOL};
pub use reports::{
    bounded_report, closedness_report, convergence_order, form_energy_identity_report,
    l1_monotonicity_report, length_bound_report, max_principle_report, pairing_drift_report,
    theorem1_report, EnergyReport, L1Report, LengthBoundReport, Verdict,
};
