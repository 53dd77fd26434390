use crate::geometry::{Grid2D, InverseMetric, MetricField, OneFormField};
use crate::{par, Error, Result};

/// Tolerance below which a negative subsolution value counts as roundoff.
pub const NEGATIVITY_TOL: f64 = 1e-10;

/// ∫ f dv_g by the trapezoid rule, given √det g per node.
pub fn integrate_with(grid: &Grid2D, sqrt_det: &[f64], f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    let ny = grid.ny();
    par::sum_nodes(grid.nx(), ny, |i, j| {
        let k = i * ny + j;
        f(k) * sqrt_det[k] * grid.cell_weight(i, j)
    })
}

/// ∫ f dv_g.
pub fn integrate(grid: &Grid2D, g: &MetricField, f: &[f64]) -> Result<f64> {
    g.validate(grid)?;
    grid.check_len(f)?;
    Ok(integrate_with(grid, &g.volume_element(), |k| f[k]))
}

pub(crate) fn l2sq_with(grid: &Grid2D, inv: &InverseMetric, phi: &OneFormField) -> f64 {
    integrate_with(grid, &inv.sqrt_det, |k| inv.norm2(k, phi.x[k], phi.y[k]))
}

/// ‖φ‖_{L²g} = (∫|φ|²_g dv_g)^{1/2}.
pub fn l2_norm_form(phi: &OneFormField, g: &MetricField, grid: &Grid2D) -> Result<f64> {
    g.validate(grid)?;
    grid.check_len(&phi.x)?;
    grid.check_len(&phi.y)?;
    Ok(l2sq_with(grid, &g.inverse(), phi).sqrt())
}

/// (∫u^p dv)^{1/p} for p ≥ 1. Values in [−1e−10, 0) are treated as 0.
pub fn lp_norm_scalar(u: &[f64], g: &MetricField, grid: &Grid2D, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must be at least 1")));
    }
    g.validate(grid)?;
    grid.check_len(u)?;
    let (min, (i, j)) = par::argmin_nodes(grid.nx(), grid.ny(), |i, j| u[grid.idx(i, j)]);
    if min < -NEGATIVITY_TOL {
        return Err(Error::InvalidSubsolution { i, j, value: min });
    }
    let s = integrate_with(grid, &g.volume_element(), |k| u[k].max(0.0).powf(p));
    Ok(s.powf(1.0 / p))
}

/// sup_x |φ(x)|_g with the first row-major node attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorm {
    pub value: f64,
    pub argmax: (usize, usize),
}

pub(crate) fn sup_norm_with(grid: &Grid2D, inv: &InverseMetric, phi: &OneFormField) -> SupNorm {
    let ny = grid.ny();
    let (v, argmax) = par::argmax_nodes(grid.nx(), ny, |i, j| {
        let k = i * ny + j;
        inv.norm2(k, phi.x[k], phi.y[k])
    });
    SupNorm { value: v.max(0.0).sqrt(), argmax }
}

/// ‖φ‖_g = sup_x |φ(x)|_g.
pub fn sup_norm_form(phi: &OneFormField, g: &MetricField, grid: &Grid2D) -> Result<SupNorm> {
    g.validate(grid)?;
    grid.check_len(&phi.x)?;
    grid.check_len(&phi.y)?;
    Ok(sup_norm_with(grid, &g.inverse(), phi))
}
