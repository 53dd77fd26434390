use serde::{Deserialize, Serialize};

use super::norms::{integrate_with, l2sq_with, sup_norm_with};
use super::probe::{loop_pairing, min_circumference, CohomologyProbe};
use crate::flows::{FlowState, FlowSystem};
use crate::geometry::curvature::{christoffel_with, curvature_with, interior_max, Christoffel};
use crate::geometry::forms::{hodge_bochner_with, hodge_ddelta_with};
use crate::geometry::{closedness_residual, covariant_gradient_norm2, reduced_scalar_curvature, InverseMetric};
use crate::{Error, Result};

/// min R above −1e−10 counts as "R ≥ 0 held".
pub const R_NONNEG_TOL: f64 = 1e-10;

/// Column names of monitor values.
pub mod labels {
    pub const SUP_R: &str = "sup_R";
    pub const MIN_R: &str = "min_R";
    pub const VOL: &str = "vol";
    pub const INT_R: &str = "int_R";
    /// 1 when min R ≥ −1e−10 at this record, else 0.
    pub const R_NONNEG: &str = "R_nonneg";
    pub const L_ALPHA: &str = "L_alpha";
    pub const GAUGE_DEV: &str = "gauge_dev";
    pub const MASS_U: &str = "mass_u";
    pub const INT_UR: &str = "int_uR";
    pub const MIN_U: &str = "min_u";
    pub const MAX_U: &str = "max_u";
    pub const BUFFER_DEV: &str = "buffer_dev";

    /// ∫|φ|² dv.
    pub fn l2sq(form: &str) -> String {
        format!("l2sq_{form}")
    }
    /// sup |φ|_g.
    pub fn sup(form: &str) -> String {
        format!("sup_{form}")
    }
    /// sup |dφ|.
    pub fn closed(form: &str) -> String {
        format!("dres_{form}")
    }
    /// ∫|∇φ|² dv.
    pub fn grad(form: &str) -> String {
        format!("grad_{form}")
    }
    /// ∫R|φ|² dv.
    pub fn curv(form: &str) -> String {
        format!("curv_{form}")
    }
    /// Interior sup of the difference between the two Δ_d paths.
    pub fn bochner_gap(form: &str) -> String {
        format!("bgap_{form}")
    }
    /// ∫_a φ(t) for a probe.
    pub fn pairing(probe: &str) -> String {
        format!("pair_{probe}")
    }
}

/// Boundary buffer watched on truncated axes.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferSpec {
    /// Buffer width as a fraction of the axis length, at each truncated end.
    pub fraction: f64,
    /// Largest tolerated change of R or |φ|²_g inside the buffer.
    pub threshold: f64,
    /// Whether a breach terminates the run.
    pub enforce: bool,
}

impl Default for BufferSpec {
    fn default() -> Self {
        BufferSpec { fraction: 0.15, threshold: 1e-6, enforce: true }
    }
}

/// Which optional monitors to evaluate.
#[derive(Debug, Clone, Default)]
pub struct MonitorSet {
    /// ∫|∇φ|² dv and ∫R|φ|² dv per tracked form.
    pub energy: bool,
    /// Difference between the dδ and Bochner Laplacians per tracked form.
    pub bochner_gap: bool,
    pub probes: Vec<CohomologyProbe>,
    pub buffer: Option<BufferSpec>,
}

/// Monitor values at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub t: f64,
    /// Step that led to this record (0 for the initial record).
    pub dt: f64,
    pub step: usize,
    pub grid_hash: String,
    pub values: Vec<(String, f64)>,
}

impl MonitorRecord {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.values.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }

    /// Like [`get`](Self::get) but missing labels are an error.
    pub fn require(&self, label: &str) -> Result<f64> {
        self.get(label).ok_or_else(|| {
            Error::IncompleteTrajectory(format!("record at t = {} has no '{label}' column", self.t))
        })
    }

    pub fn r_nonneg(&self) -> bool {
        self.get(labels::R_NONNEG).map_or(false, |v| v > 0.5)
    }
}

struct Geometry {
    inv: InverseMetric,
    r: Vec<f64>,
    ch: Option<Christoffel>,
    gap: Option<crate::geometry::CurvatureData>,
}

struct Buffer {
    spec: BufferSpec,
    nodes: Vec<usize>,
    r0: Vec<f64>,
    phi0: Vec<Vec<f64>>,
}

/// Evaluates a [`MonitorSet`] along one run.
pub struct Monitor {
    set: MonitorSet,
    sys: FlowSystem,
    grid_hash: String,
    cached: Option<Geometry>,
    buffer: Option<Buffer>,
}

impl Monitor {
    pub fn new(set: MonitorSet, sys: &FlowSystem, initial: &FlowState) -> Result<Self> {
        initial.metric.validate(&sys.grid)?;
        for p in &set.probes {
            if initial.form(&p.form_label).is_none() {
                return Err(Error::IncompleteTrajectory(format!(
                    "probe {} refers to untracked form {}",
                    p.label, p.form_label
                )));
            }
        }
        let mut m = Monitor {
            sys: sys.clone(),
            grid_hash: sys.grid.hash(),
            cached: None,
            buffer: None,
            set,
        };
        if let Some(spec) = m.set.buffer.clone() {
            let grid = &sys.grid;
            let in_buffer = |a: &crate::Axis, k: usize| {
                let w = spec.fraction * a.length;
                let c = a.coord(k);
                !a.is_periodic() && (c - a.min < w || a.min + a.length - c < w)
            };
            // Frozen nodes never evolve; only the active part of the buffer is watched.
            let nodes: Vec<usize> = (0..grid.len())
                .filter(|&k| !sys.frozen[k])
                .filter(|&k| in_buffer(&grid.x, k / grid.ny()) || in_buffer(&grid.y, k % grid.ny()))
                .collect();
            let geo = m.geometry(initial);
            let r0 = nodes.iter().map(|&k| geo.r[k]).collect();
            let phi0 = initial
                .forms
                .iter()
                .map(|tf| nodes.iter().map(|&k| geo.inv.norm2(k, tf.form.x[k], tf.form.y[k])).collect())
                .collect();
            m.buffer = Some(Buffer { spec, nodes, r0, phi0 });
        }
        Ok(m)
    }

    pub fn set(&self) -> &MonitorSet {
        &self.set
    }

    fn geometry(&self, state: &FlowState) -> Geometry {
        let grid = &self.sys.grid;
        let g = &state.metric;
        let inv = g.inverse();
        let needs_ch = self.set.energy && !state.forms.is_empty();
        if self.set.bochner_gap && !state.forms.is_empty() {
            let c = curvature_with(g, &inv, grid);
            return Geometry { r: c.flow_scalar().to_vec(), ch: Some(c.christoffel.clone()), gap: Some(c), inv };
        }
        let ch = needs_ch.then(|| christoffel_with(g, &inv, grid));
        let r = reduced_scalar_curvature(g, grid)
            .unwrap_or_else(|| curvature_with(g, &inv, grid).scalar);
        Geometry { inv, r, ch, gap: None }
    }

    /// Evaluates every monitor at `state`, reached by a step of `dt`.
    pub fn record(&mut self, state: &FlowState, dt: f64) -> MonitorRecord {
        let fresh;
        let geo: &Geometry = if self.sys.evolve_metric {
            fresh = self.geometry(state);
            &fresh
        } else {
            if self.cached.is_none() {
                self.cached = Some(self.geometry(state));
            }
            self.cached.as_ref().expect("cached geometry")
        };
        let grid = &self.sys.grid;
        let frozen = &self.sys.frozen;
        let mut values: Vec<(String, f64)> = Vec::new();
        let mut push = |l: &str, v: f64| values.push((l.to_string(), v));

        let (mut sup_r, mut min_r) = (f64::NEG_INFINITY, f64::INFINITY);
        for (r, f) in geo.r.iter().zip(frozen) {
            if !f {
                sup_r = sup_r.max(*r);
                min_r = min_r.min(*r);
            }
        }
        push(labels::SUP_R, sup_r);
        push(labels::MIN_R, min_r);
        push(labels::VOL, integrate_with(grid, &geo.inv.sqrt_det, |_| 1.0));
        push(labels::INT_R, integrate_with(grid, &geo.inv.sqrt_det, |k| geo.r[k]));
        push(labels::R_NONNEG, if min_r >= -R_NONNEG_TOL { 1.0 } else { 0.0 });

        for tf in &state.forms {
            let phi = &tf.form;
            push(&labels::l2sq(&tf.label), l2sq_with(grid, &geo.inv, phi));
            push(&labels::sup(&tf.label), sup_norm_with(grid, &geo.inv, phi).value);
            push(&labels::closed(&tf.label), closedness_residual(grid, phi));
            if let (true, Some(ch)) = (self.set.energy, &geo.ch) {
                let grad = covariant_gradient_norm2(phi, &geo.inv, ch, grid);
                push(&labels::grad(&tf.label), integrate_with(grid, &geo.inv.sqrt_det, |k| grad[k]));
                push(
                    &labels::curv(&tf.label),
                    integrate_with(grid, &geo.inv.sqrt_det, |k| geo.r[k] * geo.inv.norm2(k, phi.x[k], phi.y[k])),
                );
            }
            if let Some(c) = &geo.gap {
                let a = hodge_ddelta_with(phi, &state.metric, &geo.inv, grid);
                let b = hodge_bochner_with(phi, &geo.inv, c, grid);
                let gap = interior_max(grid, |k| (a.x[k] - b.x[k]).abs().max((a.y[k] - b.y[k]).abs()));
                push(&labels::bochner_gap(&tf.label), gap);
            }
        }

        if !self.set.probes.is_empty() {
            for p in &self.set.probes {
                let phi = state.form(&p.form_label).expect("checked at construction");
                push(&labels::pairing(&p.label), loop_pairing(grid, &p.cycle, phi).unwrap_or(f64::NAN));
            }
            let la = min_circumference(grid, &state.metric).map_or(f64::NAN, |(l, _)| l);
            push(labels::L_ALPHA, la);
        }

        if let (Some(gt), Some(rep)) = (&state.gauge, state.gauge_representative(grid)) {
            let phi = state.form(&gt.form_label).expect("gauge form is tracked");
            let diff = crate::OneFormField::new(
                phi.x.iter().zip(&rep.x).map(|(a, b)| a - b).collect(),
                phi.y.iter().zip(&rep.y).map(|(a, b)| a - b).collect(),
            );
            push(labels::GAUGE_DEV, sup_norm_with(grid, &geo.inv, &diff).value);
        }

        if let Some(s) = &state.subsolution {
            let u = &s.u.values;
            push(labels::MASS_U, integrate_with(grid, &geo.inv.sqrt_det, |k| u[k]));
            push(labels::INT_UR, integrate_with(grid, &geo.inv.sqrt_det, |k| u[k] * geo.r[k]));
            push(labels::MIN_U, u.iter().copied().fold(f64::INFINITY, f64::min));
            push(labels::MAX_U, u.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }

        if let Some(b) = &self.buffer {
            let mut dev = 0.0f64;
            for (n, &k) in b.nodes.iter().enumerate() {
                dev = dev.max((geo.r[k] - b.r0[n]).abs());
                for (tf, base) in state.forms.iter().zip(&b.phi0) {
                    dev = dev.max((geo.inv.norm2(k, tf.form.x[k], tf.form.y[k]) - base[n]).abs());
                }
            }
            push(labels::BUFFER_DEV, dev);
        }

        MonitorRecord { t: state.t, dt, step: state.step, grid_hash: self.grid_hash.clone(), values }
    }

    /// True when the record shows a buffer breach that must stop the run.
    pub fn breached(&self, record: &MonitorRecord) -> bool {
        match &self.buffer {
            Some(b) if b.spec.enforce => record.get(labels::BUFFER_DEV).map_or(false, |d| d > b.spec.threshold),
            _ => false,
        }
    }
}
