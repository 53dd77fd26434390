use serde::{Deserialize, Serialize};

use crate::geometry::{closedness_residual, Grid2D, MetricField, OneFormField};
use crate::{Error, Result};

/// Closed discrete loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cycle {
    /// The θ-circle at x-index `i`, traversed in increasing θ.
    ThetaCircle { i: usize },
    /// Lattice nodes visited in order; consecutive nodes (and last → first)
    /// must be axis neighbours, wrapping across periodic seams.
    NodePath(Vec<(usize, usize)>),
}

/// Signed single-axis step between neighbouring indices, or `None`.
fn step(n: usize, periodic: bool, a: usize, b: usize) -> Option<i64> {
    let d = b as i64 - a as i64;
    if d.abs() <= 1 {
        return Some(d);
    }
    if periodic && d == n as i64 - 1 {
        return Some(-1);
    }
    if periodic && d == -(n as i64 - 1) {
        return Some(1);
    }
    None
}

/// One edge of a node path: endpoints and the signed coordinate move.
struct Edge {
    a: usize,
    b: usize,
    dx: f64,
    dy: f64,
}

fn edges(grid: &Grid2D, cycle: &Cycle) -> Result<Vec<Edge>> {
    match cycle {
        Cycle::ThetaCircle { i } => {
            if !grid.y.is_periodic() {
                return Err(Error::InvalidCycle("θ-circle needs a periodic second axis".into()));
            }
            if *i >= grid.nx() {
                return Err(Error::InvalidCycle(format!("x-index {i} outside the grid")));
            }
            let ny = grid.ny();
            Ok((0..ny)
                .map(|j| Edge { a: grid.idx(*i, j), b: grid.idx(*i, (j + 1) % ny), dx: 0.0, dy: grid.hy() })
                .collect())
        }
        Cycle::NodePath(nodes) => {
            if nodes.len() < 2 {
                return Err(Error::InvalidCycle("a loop needs at least two nodes".into()));
            }
            let mut out = Vec::with_capacity(nodes.len());
            for (k, &(i0, j0)) in nodes.iter().enumerate() {
                let (i1, j1) = nodes[(k + 1) % nodes.len()];
                if i0 >= grid.nx() || j0 >= grid.ny() {
                    return Err(Error::InvalidCycle(format!("node ({i0}, {j0}) outside the grid")));
                }
                let sx = step(grid.nx(), grid.x.is_periodic(), i0, i1);
                let sy = step(grid.ny(), grid.y.is_periodic(), j0, j1);
                let (sx, sy) = match (sx, sy) {
                    (Some(sx), Some(sy)) if (sx == 0) != (sy == 0) => (sx, sy),
                    _ => {
                        let what = if k + 1 == nodes.len() { "path is open" } else { "nodes are not adjacent" };
                        return Err(Error::InvalidCycle(format!(
                            "{what}: ({i0}, {j0}) -> ({i1}, {j1})"
                        )));
                    }
                };
                out.push(Edge {
                    a: grid.idx(i0, j0),
                    b: grid.idx(i1, j1),
                    dx: sx as f64 * grid.hx(),
                    dy: sy as f64 * grid.hy(),
                });
            }
            Ok(out)
        }
    }
}

/// ∫_a φ by the trapezoid rule along the loop's edges.
pub fn loop_pairing(grid: &Grid2D, cycle: &Cycle, phi: &OneFormField) -> Result<f64> {
    grid.check_len(&phi.x)?;
    grid.check_len(&phi.y)?;
    Ok(edges(grid, cycle)?
        .iter()
        .map(|e| 0.5 * ((phi.x[e.a] + phi.x[e.b]) * e.dx + (phi.y[e.a] + phi.y[e.b]) * e.dy))
        .sum())
}

/// L(a, g): trapezoid sum of the edge speeds √(g_kk)·h.
pub fn loop_length(grid: &Grid2D, cycle: &Cycle, g: &MetricField) -> Result<f64> {
    g.validate(grid)?;
    Ok(edges(grid, cycle)?
        .iter()
        .map(|e| {
            let speed = |k: usize| (g.gxx[k] * e.dx * e.dx + g.gyy[k] * e.dy * e.dy).sqrt();
            0.5 * (speed(e.a) + speed(e.b))
        })
        .sum())
}

/// L_α = min over x-stations of the θ-circle length, with the x-index
/// attaining it (first in case of ties).
pub fn min_circumference(grid: &Grid2D, g: &MetricField) -> Result<(f64, usize)> {
    if !grid.y.is_periodic() {
        return Err(Error::InvalidCycle("θ-circles need a periodic second axis".into()));
    }
    g.validate(grid)?;
    let hy = grid.hy();
    let mut best = (f64::INFINITY, 0);
    for i in 0..grid.nx() {
        let len: f64 = (0..grid.ny()).map(|j| g.gyy[grid.idx(i, j)].sqrt() * hy).sum();
        if len < best.0 {
            best = (len, i);
        }
    }
    Ok(best)
}

/// A closed form φ₀, a loop a, and their pairing ⟨Φ, α⟩ = ∫_a φ₀.
#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyProbe {
    pub label: String,
    /// Label of the tracked form whose initial value is φ₀.
    pub form_label: String,
    pub base: OneFormField,
    pub cycle: Cycle,
    pub pairing: f64,
}

/// |dφ₀| allowed for a probe base, relative to 1 + sup|φ₀|.
pub const PROBE_CLOSED_TOL: f64 = 1e-8;

impl CohomologyProbe {
    pub fn new(
        grid: &Grid2D,
        label: impl Into<String>,
        form_label: impl Into<String>,
        base: OneFormField,
        cycle: Cycle,
    ) -> Result<Self> {
        let label = label.into();
        let scale = 1.0 + base.x.iter().chain(&base.y).fold(0.0f64, |m, v| m.max(v.abs()));
        let residual = closedness_residual(grid, &base);
        if residual > PROBE_CLOSED_TOL * scale {
            return Err(Error::InvalidCycle(format!(
                "probe {label}: base form is not closed (|dφ| = {residual:e})"
            )));
        }
        let pairing = loop_pairing(grid, &cycle, &base)?;
        Ok(CohomologyProbe { label, form_label: form_label.into(), base, cycle, pairing })
    }

    /// Rejects probes whose class does not pair positively with the loop.
    pub fn require_infinite_order(&self) -> Result<()> {
        if self.pairing > 0.0 {
            Ok(())
        } else {
            Err(Error::ProbeNotInfiniteOrder { label: self.label.clone(), pairing: self.pairing })
        }
    }

    /// Largest relative change of the pairing when the θ-circle is moved to
    /// each x-index in `stations` (the discrete Stokes check).
    pub fn shift_drift(&self, grid: &Grid2D, phi: &OneFormField, stations: impl IntoIterator<Item = usize>) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in stations {
            let p = loop_pairing(grid, &Cycle::ThetaCircle { i }, phi)?;
            worst = worst.max((p - self.pairing).abs() / self.pairing.abs().max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }
}
