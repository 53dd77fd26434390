use serde::{Deserialize, Serialize};

use crate::flows::FlowState;
use crate::functionals::{loop_length, min_circumference, Cycle};
use crate::geometry::curvature::{curvature_with, interior_max};
use crate::geometry::{reduced_scalar_curvature, Grid2D, MetricField};
use crate::{Error, Result};

/// λg. Components are multiplied exactly; tags follow.
pub fn rescale_metric(g: &MetricField, lambda: f64) -> Result<MetricField> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidSchedule(format!("scale factor {lambda} must be positive")));
    }
    Ok(g.scaled(lambda))
}

fn scalar_curvature(grid: &Grid2D, g: &MetricField) -> Vec<f64> {
    reduced_scalar_curvature(g, grid).unwrap_or_else(|| curvature_with(g, &g.inverse(), grid).scalar)
}

/// max |λ·R(λg) − R(g)| / max |R(g)| over nodes two away from truncated
/// ends (absolute when R vanishes).
pub fn curvature_scaling_residual(grid: &Grid2D, g: &MetricField, lambda: f64) -> Result<f64> {
    g.validate(grid)?;
    let scaled = rescale_metric(g, lambda)?;
    let r = scalar_curvature(grid, g);
    let rs = scalar_curvature(grid, &scaled);
    let diff = interior_max(grid, |k| (lambda * rs[k] - r[k]).abs());
    let scale = interior_max(grid, |k| r[k].abs());
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// How the scale factors are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulePolicy {
    /// λ_k = sup|R| at the snapshot nearest t_k (sup|R| stands in for
    /// sup|Rm|, equivalent in two dimensions).
    ByCurvature,
    Explicit,
}

/// Blow-up times t_k with scale factors λ_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescalingSchedule {
    pub policy: SchedulePolicy,
    pub times: Vec<f64>,
    /// Empty for [`SchedulePolicy::ByCurvature`] until resolved.
    pub lambdas: Vec<f64>,
}

impl RescalingSchedule {
    fn check_times(times: &[f64]) -> Result<()> {
        if times.is_empty() {
            return Err(Error::InvalidSchedule("no blow-up times given".into()));
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidSchedule("times must be finite and nonnegative".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule("times must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn explicit(entries: Vec<(f64, f64)>) -> Result<Self> {
        let (times, lambdas): (Vec<f64>, Vec<f64>) = entries.into_iter().unzip();
        Self::check_times(&times)?;
        if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidSchedule(format!("scale factor {l} must be positive")));
        }
        Ok(RescalingSchedule { policy: SchedulePolicy::Explicit, times, lambdas })
    }

    pub fn by_curvature(times: Vec<f64>) -> Result<Self> {
        Self::check_times(&times)?;
        Ok(RescalingSchedule { policy: SchedulePolicy::ByCurvature, times, lambdas: Vec::new() })
    }

    /// λ_k = base^k at the given times.
    pub fn geometric(base: f64, times: Vec<f64>) -> Result<Self> {
        let entries = times.iter().enumerate().map(|(k, t)| (*t, base.powi(k as i32))).collect();
        Self::explicit(entries)
    }

    /// Parses `curvature:t1,t2,...`, `explicit:t1@l1,t2@l2,...` or
    /// `geometric:base:t1,t2,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidSchedule(format!("{why} in schedule '{spec}'"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("bad number '{}'", s.trim())));
        let list = |s: &str| s.split(',').map(num).collect::<Result<Vec<f64>>>();
        let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        match kind.trim() {
            "curvature" => Self::by_curvature(list(rest)?),
            "explicit" => {
                let entries = rest
                    .split(',')
                    .map(|e| {
                        let (t, l) = e.split_once('@').ok_or_else(|| bad("entries need the form t@lambda"))?;
                        Ok((num(t)?, num(l)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::explicit(entries)
            }
            "geometric" => {
                let (base, times) = rest.split_once(':').ok_or_else(|| bad("geometric needs base:times"))?;
                Self::geometric(num(base)?, list(times)?)
            }
            other => Err(bad(&format!("unknown policy '{other}'"))),
        }
    }
}

/// One member g_k(s) = λ_k g(t_k + s/λ_k) of a rescaled family, taken from
/// the snapshot nearest t_k.
#[derive(Debug, Clone)]
pub struct RescaledSnapshot {
    pub k: usize,
    pub t_k: f64,
    pub lambda: f64,
    /// Time of the snapshot actually used.
    pub snapshot_t: f64,
    /// snapshot_t − t_k.
    pub offset: f64,
    /// Rescaled time of the snapshot, λ_k·offset.
    pub rescaled_t: f64,
    pub metric: MetricField,
    /// sup|R| of the rescaled metric, interior nodes.
    pub sup_r: f64,
}

fn nearest(snapshots: &[FlowState], t: f64) -> &FlowState {
    snapshots
        .iter()
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
        .expect("non-empty")
}

/// Builds the rescaled family for `schedule` from stored snapshots.
pub fn rescale_trajectory(
    grid: &Grid2D,
    snapshots: &[FlowState],
    schedule: &RescalingSchedule,
) -> Result<Vec<RescaledSnapshot>> {
    if snapshots.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    schedule
        .times
        .iter()
        .enumerate()
        .map(|(k, &t_k)| {
            let snap = nearest(snapshots, t_k);
            let lambda = match schedule.policy {
                SchedulePolicy::Explicit => schedule.lambdas[k],
                SchedulePolicy::ByCurvature => {
                    let r = scalar_curvature(grid, &snap.metric);
                    let s = interior_max(grid, |n| r[n].abs());
                    if s <= 0.0 {
                        return Err(Error::InvalidSchedule(format!(
                            "curvature vanishes at t = {}; cannot pick λ by curvature",
                            snap.t
                        )));
                    }
                    s
                }
            };
            let metric = rescale_metric(&snap.metric, lambda)?;
            let r = scalar_curvature(grid, &metric);
            let sup_r = interior_max(grid, |n| r[n].abs());
            Ok(RescaledSnapshot {
                k,
                t_k,
                lambda,
                snapshot_t: snap.t,
                offset: snap.t - t_k,
                rescaled_t: lambda * (snap.t - t_k),
                metric,
                sup_r,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthScalingEntry {
    pub k: usize,
    pub t_k: f64,
    pub lambda: f64,
    /// L(Γ, g(t_k)).
    pub length: f64,
    /// L(Γ, λ_k g(t_k)), measured on the rescaled metric.
    pub rescaled_length: f64,
    /// |rescaled − √λ·length| / rescaled.
    pub sqrt_law_residual: f64,
    /// |rescaled − λ·length| / rescaled: how far the linear-in-λ reading is off.
    pub linear_law_deviation: f64,
    /// |L_α(λg) − √λ·L_α(g)| / L_α(λg) when θ-circles exist.
    pub composition_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthScalingReport {
    pub entries: Vec<LengthScalingEntry>,
    /// Every √λ residual within 1e−10.
    pub sqrt_law_holds: bool,
    /// min_k L(Γ, g(t_k)).
    pub length_lower_bound: f64,
    /// Rescaled lengths strictly increase while λ_k grows without bound.
    pub diverges: bool,
}

/// Length of `cycle` under the rescaled family versus the √λ scaling law.
pub fn length_scaling_check(
    grid: &Grid2D,
    snapshots: &[FlowState],
    schedule: &RescalingSchedule,
    cycle: &Cycle,
) -> Result<LengthScalingReport> {
    let family = rescale_trajectory(grid, snapshots, schedule)?;
    let mut entries = Vec::with_capacity(family.len());
    for member in &family {
        let base = &nearest(snapshots, member.t_k).metric;
        let length = loop_length(grid, cycle, base)?;
        let rescaled_length = loop_length(grid, cycle, &member.metric)?;
        let composition_residual = if grid.y.is_periodic() {
            let (a, _) = min_circumference(grid, &member.metric)?;
            let (b, _) = min_circumference(grid, base)?;
            Some((a - member.lambda.sqrt() * b).abs() / a)
        } else {
            None
        };
        entries.push(LengthScalingEntry {
            k: member.k,
            t_k: member.t_k,
            lambda: member.lambda,
            length,
            rescaled_length,
            sqrt_law_residual: (rescaled_length - member.lambda.sqrt() * length).abs() / rescaled_length,
            linear_law_deviation: (rescaled_length - member.lambda * length).abs() / rescaled_length,
            composition_residual,
        });
    }
    let sqrt_law_holds = entries
        .iter()
        .all(|e| e.sqrt_law_residual <= 1e-10 && e.composition_residual.map_or(true, |r| r <= 1e-10));
    let length_lower_bound = entries.iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
    let growing_scale = entries.windows(2).all(|w| w[1].lambda > w[0].lambda);
    let diverges = entries.len() >= 2
        && growing_scale
        && length_lower_bound > 0.0
        && entries.windows(2).all(|w| w[1].rescaled_length > w[0].rescaled_length);
    Ok(LengthScalingReport { entries, sqrt_law_holds, length_lower_bound, diverges })
}
