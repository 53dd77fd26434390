use super::state::{FlowState, FlowSystem};
use crate::geometry::curvature::{curvature_with, reduced_scalar_curvature, CurvatureData};
use crate::geometry::forms::{
    codifferential_with, hodge_bochner_with, hodge_ddelta_with, hodge_scalar_laplacian_with,
    laplace_beltrami_with,
};
use crate::geometry::{HodgeMethod, InverseMetric, MetricField, Parameterization};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Heun's method.
    Rk2,
    /// Classical fourth-order Runge–Kutta.
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    /// c_cfl ∈ (0, 0.5].
    pub cfl: f64,
    pub dt_max: f64,
    /// A CFL step below this ends the run as a detected blow-up.
    pub dt_min: f64,
    /// Record monitors every `cadence` steps.
    pub cadence: usize,
    pub max_steps: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            scheme: Scheme::Rk2,
            cfl: 0.2,
            dt_max: 1e-2,
            dt_min: 1e-12,
            cadence: 1,
            max_steps: 1_000_000,
        }
    }
}

/// Outcome of the CFL rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Dt(f64),
    /// The admissible step fell below `dt_min`; carries the computed value.
    Underflow(f64),
}

/// Which parts of the state a step advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Components {
    pub metric: bool,
    pub forms: bool,
    pub gauge: bool,
    pub scalar: bool,
}

impl Components {
    pub const ALL: Components = Components { metric: true, forms: true, gauge: true, scalar: true };
    pub const METRIC: Components = Components { metric: true, forms: false, gauge: false, scalar: false };
}

/// Time derivatives of every evolving array, in parameter space.
#[derive(Debug, Clone)]
pub(crate) struct Rates {
    metric: Option<Vec<Vec<f64>>>,
    forms: Vec<Option<[Vec<f64>; 2]>>,
    gauge: Option<Vec<f64>>,
    scalar: Option<Vec<f64>>,
    /// sup |R| over active nodes when the flow curvature was evaluated.
    pub(crate) sup_abs_r: Option<f64>,
}

fn metric_params(m: &MetricField) -> Vec<&[f64]> {
    match &m.param {
        Parameterization::General => vec![&m.gxx, &m.gxy, &m.gyy],
        Parameterization::Conformal { u } => vec![u],
        Parameterization::Warped { h, f } => vec![h, f],
    }
}

fn rebuild_metric(sys: &FlowSystem, like: &MetricField, p: Vec<Vec<f64>>) -> Result<MetricField> {
    let mut it = p.into_iter();
    let mut next = || it.next().expect("parameter count");
    match &like.param {
        Parameterization::General => {
            let (gxx, gxy, gyy) = (next(), next(), next());
            MetricField::general(&sys.grid, gxx, gxy, gyy)
        }
        Parameterization::Conformal { .. } => {
            MetricField::from_param(&sys.grid, Parameterization::Conformal { u: next() })
        }
        Parameterization::Warped { .. } => {
            let (h, f) = (next(), next());
            MetricField::from_param(&sys.grid, Parameterization::Warped { h, f })
        }
    }
}

fn zero_frozen(sys: &FlowSystem, v: &mut [f64]) {
    for (x, frozen) in v.iter_mut().zip(&sys.frozen) {
        if *frozen {
            *x = 0.0;
        }
    }
}

pub(crate) fn sup_abs_active(sys: &FlowSystem, r: &[f64]) -> f64 {
    r.iter()
        .zip(&sys.frozen)
        .filter(|(_, f)| !**f)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max)
}

/// Scalar curvature driving the flow: reduced for tagged metrics, general
/// otherwise.
pub(crate) fn flow_curvature(sys: &FlowSystem, m: &MetricField) -> Vec<f64> {
    reduced_scalar_curvature(m, &sys.grid).unwrap_or_else(|| {
        let inv = m.inverse();
        curvature_with(m, &inv, &sys.grid).scalar
    })
}

pub(crate) fn evaluate(sys: &FlowSystem, state: &FlowState, comps: Components) -> Rates {
    let grid = &sys.grid;
    let g = &state.metric;
    let general = g.param == Parameterization::General;
    let metric_rate = comps.metric && sys.evolve_metric;
    let bochner = comps.forms && !state.forms.is_empty() && sys.hodge == HodgeMethod::Bochner;
    let needs_inv = (metric_rate && general)
        || (comps.forms && !state.forms.is_empty())
        || (comps.gauge && state.gauge.is_some())
        || (comps.scalar && state.subsolution.is_some());
    // The tagged Ricci path needs no inverse metric; skip it when possible.
    let inv = if needs_inv { g.inverse() } else { InverseMetric::default() };
    let curv: Option<CurvatureData> =
        ((metric_rate && general) || bochner).then(|| curvature_with(g, &inv, grid));

    let mut sup_abs_r = None;
    let metric = metric_rate.then(|| {
        let r: Vec<f64> = match &curv {
            Some(c) => c.flow_scalar().to_vec(),
            None => reduced_scalar_curvature(g, grid).expect("tagged metric"),
        };
        sup_abs_r = Some(sup_abs_active(sys, &r));
        let mut rates: Vec<Vec<f64>> = match &g.param {
            Parameterization::General => {
                let c = curv.as_ref().expect("general curvature");
                c.ricci.iter().map(|ric| ric.iter().map(|v| -2.0 * v).collect()).collect()
            }
            Parameterization::Conformal { .. } => vec![r.iter().map(|v| -0.5 * v).collect()],
            Parameterization::Warped { h, f } => vec![
                r.iter().zip(h).map(|(r, h)| -0.5 * r * h).collect(),
                r.iter().zip(f).map(|(r, f)| -0.5 * r * f).collect(),
            ],
        };
        rates.iter_mut().for_each(|v| zero_frozen(sys, v));
        rates
    });

    let forms = state
        .forms
        .iter()
        .map(|tf| {
            comps.forms.then(|| {
                let mut l = match (sys.hodge, &curv) {
                    (HodgeMethod::Bochner, Some(c)) => hodge_bochner_with(&tf.form, &inv, c, grid),
                    _ => hodge_ddelta_with(&tf.form, g, &inv, grid),
                };
                zero_frozen(sys, &mut l.x);
                zero_frozen(sys, &mut l.y);
                [l.x, l.y]
            })
        })
        .collect();

    let gauge = match (&state.gauge, comps.gauge) {
        (Some(gt), true) => {
            let mut lap = hodge_scalar_laplacian_with(&gt.f.values, &inv, grid);
            let src = codifferential_with(&gt.base, &inv, grid);
            par::axpy(&mut lap, -1.0, &src);
            zero_frozen(sys, &mut lap);
            Some(lap)
        }
        _ => None,
    };

    let scalar = match (&state.subsolution, comps.scalar) {
        (Some(s), true) => {
            let mut lap = laplace_beltrami_with(&s.u.values, &inv, grid);
            if s.sink != 0.0 {
                par::axpy(&mut lap, -s.sink, &s.u.values);
            }
            zero_frozen(sys, &mut lap);
            Some(lap)
        }
        _ => None,
    };

    Rates { metric, forms, gauge, scalar, sup_abs_r }
}

/// base + dt·Σ wₖ·ratesₖ.
fn combine(sys: &FlowSystem, base: &FlowState, terms: &[(f64, &Rates)], dt: f64) -> Result<FlowState> {
    let mut out = base.clone_without_metric();
    if terms.iter().any(|(_, r)| r.metric.is_some()) {
        let mut p: Vec<Vec<f64>> = metric_params(&base.metric).into_iter().map(<[f64]>::to_vec).collect();
        for (w, r) in terms {
            if let Some(m) = &r.metric {
                for (dst, src) in p.iter_mut().zip(m) {
                    par::axpy(dst, w * dt, src);
                }
            }
        }
        out.metric = rebuild_metric(sys, &base.metric, p)?;
    } else {
        out.metric = base.metric.clone();
    }
    for (idx, tf) in out.forms.iter_mut().enumerate() {
        for (w, r) in terms {
            if let Some([rx, ry]) = &r.forms[idx] {
                par::axpy(&mut tf.form.x, w * dt, rx);
                par::axpy(&mut tf.form.y, w * dt, ry);
            }
        }
    }
    if let Some(gt) = out.gauge.as_mut() {
        for (w, r) in terms {
            if let Some(v) = &r.gauge {
                par::axpy(&mut gt.f.values, w * dt, v);
            }
        }
    }
    if let Some(s) = out.subsolution.as_mut() {
        for (w, r) in terms {
            if let Some(v) = &r.scalar {
                par::axpy(&mut s.u.values, w * dt, v);
            }
        }
    }
    Ok(out)
}

/// Advances the selected components by one explicit step. `first` may carry
/// the already evaluated rates at `state`.
pub(crate) fn advance(
    sys: &FlowSystem,
    state: &FlowState,
    dt: f64,
    comps: Components,
    scheme: Scheme,
    first: Option<Rates>,
) -> Result<FlowState> {
    let k1 = first.unwrap_or_else(|| evaluate(sys, state, comps));
    let mut next = match scheme {
        Scheme::Rk2 => {
            let y1 = combine(sys, state, &[(1.0, &k1)], dt)?;
            let k2 = evaluate(sys, &y1, comps);
            combine(sys, state, &[(0.5, &k1), (0.5, &k2)], dt)?
        }
        Scheme::Rk4 => {
            let y2 = combine(sys, state, &[(0.5, &k1)], dt)?;
            let k2 = evaluate(sys, &y2, comps);
            let y3 = combine(sys, state, &[(0.5, &k2)], dt)?;
            let k3 = evaluate(sys, &y3, comps);
            let y4 = combine(sys, state, &[(1.0, &k3)], dt)?;
            let k4 = evaluate(sys, &y4, comps);
            let s = 1.0 / 6.0;
            combine(sys, state, &[(s, &k1), (2.0 * s, &k2), (2.0 * s, &k3), (s, &k4)], dt)?
        }
    };
    next.t = state.t + dt;
    next.step = state.step + 1;
    Ok(next)
}

/// Largest g^{ij}/h² diffusion rate over active nodes.
fn diffusion_rate(sys: &FlowSystem, m: &MetricField) -> f64 {
    let (hx, hy) = (sys.grid.hx(), sys.grid.hy());
    let (ihx2, ihy2, ihxy) = (1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (hx * hy));
    let ny = sys.grid.ny();
    par::argmax_nodes(sys.grid.nx(), ny, |i, j| {
        let k = i * ny + j;
        if sys.frozen[k] {
            return f64::NEG_INFINITY;
        }
        // g^xx = g_yy/det, g^yy = g_xx/det, |g^xy| = |g_xy|/det.
        ((m.gyy[k] * ihx2).max(m.gxx[k] * ihy2) + m.gxy[k].abs() * ihxy) / m.det_at(k)
    })
    .0
}

/// dt = c_cfl / (max_nodes max(g^xx/hx², g^yy/hy²) + |g^xy|/(hx·hy) + sup|R|),
/// capped at `dt_max`.
pub fn cfl_dt_with(sys: &FlowSystem, m: &MetricField, sup_abs_r: f64, spec: &IntegratorSpec) -> TimeStep {
    let rate = diffusion_rate(sys, m) + sup_abs_r;
    let dt = (spec.cfl / rate).min(spec.dt_max);
    if dt < spec.dt_min || !dt.is_finite() {
        TimeStep::Underflow(dt)
    } else {
        TimeStep::Dt(dt)
    }
}

/// CFL time step for the current state.
pub fn cfl_dt(sys: &FlowSystem, state: &FlowState, spec: &IntegratorSpec) -> Result<TimeStep> {
    state.metric.validate(&sys.grid)?;
    let r = flow_curvature(sys, &state.metric);
    Ok(cfl_dt_with(sys, &state.metric, sup_abs_active(sys, &r), spec))
}

fn only(metric: bool, forms: bool, gauge: bool, scalar: bool) -> Components {
    Components { metric, forms, gauge, scalar }
}

/// Ricci flow ∂ₜg = −2Ric on the metric alone.
pub fn ricci_flow_step(sys: &FlowSystem, state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    advance(sys, state, dt, Components::METRIC, scheme, None)
}

/// φₜ = Δ_dφ for every tracked form, with the metric advanced through the
/// same stages when it evolves.
pub fn form_heat_step(sys: &FlowSystem, state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    advance(sys, state, dt, only(true, true, false, false), scheme, None)
}

/// ∂ₜF = ΔF − δφ₀ (Δ = −δd), metric coupled as above.
pub fn gauge_diffusion_step(sys: &FlowSystem, state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    if state.gauge.is_none() {
        return Err(Error::IncompleteTrajectory("no gauge function is tracked".into()));
    }
    advance(sys, state, dt, only(true, false, true, false), scheme, None)
}

/// uₜ = Δu − c·u, metric coupled as above.
pub fn scalar_heat_step(sys: &FlowSystem, state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    if state.subsolution.is_none() {
        return Err(Error::IncompleteTrajectory("no scalar subsolution is tracked".into()));
    }
    advance(sys, state, dt, only(true, false, false, true), scheme, None)
}

/// Every component in one Runge–Kutta tableau.
pub fn coupled_step(sys: &FlowSystem, state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    advance(sys, state, dt, Components::ALL, scheme, None)
}
