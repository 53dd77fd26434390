use super::integrator::{advance, cfl_dt_with, evaluate, flow_curvature, sup_abs_active, Components, IntegratorSpec, TimeStep};
use super::state::{FlowState, FlowSystem};
use crate::functionals::{Monitor, MonitorRecord, MonitorSet};
use crate::geometry::Grid2D;
use crate::Result;

/// Terminal status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// The metric degenerated or the CFL step underflowed.
    BlowUpDetected,
    BudgetExhausted,
    /// The watched boundary buffer changed beyond its threshold.
    BufferBreached,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowUpDetected => "blow-up-detected",
            RunStatus::BudgetExhausted => "budget-exhausted",
            RunStatus::BufferBreached => "buffer-breached",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Completed, Self::BlowUpDetected, Self::BudgetExhausted, Self::BufferBreached]
            .into_iter()
            .find(|v| v.as_str() == s)
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Final time T.
    pub horizon: f64,
    pub integrator: IntegratorSpec,
    pub monitors: MonitorSet,
    /// Keep a state snapshot every this many steps; 0 keeps only the initial
    /// and final states.
    pub snapshot_every: usize,
}

/// Output of [`integrate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid2D,
    pub records: Vec<MonitorRecord>,
    /// Snapshots in increasing time; never empty unless the budget was zero.
    pub snapshots: Vec<FlowState>,
    pub status: RunStatus,
    /// Why the run stopped, for non-completed runs.
    pub detail: String,
    /// Last valid state.
    pub final_state: FlowState,
    /// Every accepted step size, in order.
    pub steps: Vec<f64>,
}

impl Trajectory {
    pub fn last_t(&self) -> f64 {
        self.final_state.t
    }
}

/// Integrates the coupled system from `initial` until `cfg.horizon`, a
/// detected blow-up, a buffer breach or the step budget.
pub fn integrate(sys: &FlowSystem, initial: FlowState, cfg: &RunConfig) -> Result<Trajectory> {
    let spec = &cfg.integrator;
    let mut state = sys.prepare(initial);
    state.metric.validate(&sys.grid)?;
    let mut traj = Trajectory {
        grid: sys.grid.clone(),
        records: Vec::new(),
        snapshots: Vec::new(),
        status: RunStatus::Completed,
        detail: String::new(),
        final_state: state.clone(),
        steps: Vec::new(),
    };
    if spec.max_steps == 0 {
        traj.status = RunStatus::BudgetExhausted;
        traj.detail = "step budget is zero".into();
        return Ok(traj);
    }
    let mut monitor = Monitor::new(cfg.monitors.clone(), sys, &state)?;
    traj.records.push(monitor.record(&state, 0.0));
    traj.snapshots.push(state.clone());

    // With a frozen metric the curvature term of the CFL rule never changes.
    let static_r = (!sys.evolve_metric).then(|| sup_abs_active(sys, &flow_curvature(sys, &state.metric)));
    let cadence = spec.cadence.max(1);
    let end_tol = 1e-13 * cfg.horizon.abs().max(1.0);
    let mut recorded_last = true;

    loop {
        if state.t >= cfg.horizon - end_tol {
            break;
        }
        if traj.steps.len() >= spec.max_steps {
            traj.status = RunStatus::BudgetExhausted;
            traj.detail = format!("stopped after {} steps at t = {:?}", spec.max_steps, state.t);
            break;
        }
        let k1 = evaluate(sys, &state, Components::ALL);
        let sup_r = static_r.or(k1.sup_abs_r).unwrap_or(0.0);
        let dt = match cfl_dt_with(sys, &state.metric, sup_r, spec) {
            TimeStep::Dt(dt) => dt.min(cfg.horizon - state.t),
            TimeStep::Underflow(dt) => {
                traj.status = RunStatus::BlowUpDetected;
                traj.detail = format!("time step {dt:e} fell below {:e} at t = {:?}", spec.dt_min, state.t);
                break;
            }
        };
        let next = match advance(sys, &state, dt, Components::ALL, spec.scheme, Some(k1)) {
            Ok(mut next) => {
                if cfg.horizon - next.t <= end_tol {
                    next.t = cfg.horizon;
                }
                next
            }
            Err(e) => {
                traj.status = RunStatus::BlowUpDetected;
                traj.detail = format!("{e} during the step from t = {:?}", state.t);
                break;
            }
        };
        state = next;
        traj.steps.push(dt);
        recorded_last = false;
        let at_end = state.t >= cfg.horizon;
        if state.step % cadence == 0 || at_end {
            let rec = monitor.record(&state, dt);
            let breached = monitor.breached(&rec);
            traj.records.push(rec);
            recorded_last = true;
            if breached {
                traj.status = RunStatus::BufferBreached;
                traj.detail = format!("boundary buffer changed beyond threshold at t = {:?}", state.t);
                break;
            }
        }
        if cfg.snapshot_every > 0 && state.step % cfg.snapshot_every == 0 {
            traj.snapshots.push(state.clone());
        }
    }
    if !recorded_last {
        let dt = traj.steps.last().copied().unwrap_or(0.0);
        traj.records.push(monitor.record(&state, dt));
    }
    if traj.snapshots.last().map_or(true, |s| s.step != state.step) {
        traj.snapshots.push(state.clone());
    }
    traj.final_state = state;
    Ok(traj)
}
