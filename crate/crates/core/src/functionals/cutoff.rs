use super::norms::integrate_with;
use crate::geometry::{Grid2D, MetricField, ScalarField};
use crate::{Error, Result};

/// Distance to a base point for axially symmetric geometries, with the
/// metric length of its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub d: Vec<f64>,
    /// |∇d|_g per node (1 up to roundoff where d is a true distance).
    pub grad_norm: Vec<f64>,
    /// Largest radius whose ball stays clear of every truncated edge.
    pub reach: f64,
}

/// Arclength of the x-axis line through column `j`, signed, from `i0`,
/// together with the speed √g_xx at each station.
fn axial_arclength(grid: &Grid2D, g: &MetricField, i0: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
    let speed: Vec<f64> = (0..grid.nx()).map(|i| g.gxx[grid.idx(i, j)].sqrt()).collect();
    let hx = grid.hx();
    let mut s = vec![0.0; grid.nx()];
    for i in i0 + 1..grid.nx() {
        s[i] = s[i - 1] + 0.5 * (speed[i - 1] + speed[i]) * hx;
    }
    for i in (0..i0).rev() {
        s[i] = s[i + 1] - 0.5 * (speed[i + 1] + speed[i]) * hx;
    }
    (s, speed)
}

/// d_g(·, o) by 1-D geodesic integration: along the axis on a cylinder
/// (periodic θ), along the radial ray on a truncated plane. The metric is
/// assumed symmetric about `center`.
pub fn distance_from(grid: &Grid2D, g: &MetricField, center: (usize, usize)) -> Result<DistanceField> {
    g.validate(grid)?;
    let (i0, j0) = center;
    if i0 >= grid.nx() || j0 >= grid.ny() {
        return Err(Error::InvalidParameter(format!("center ({i0}, {j0}) outside the grid")));
    }
    let inv = g.inverse();
    let n = grid.len();
    let (mut d, mut grad) = (vec![0.0; n], vec![0.0; n]);
    match (grid.x.is_periodic(), grid.y.is_periodic()) {
        (false, true) => {
            let (s, speed) = axial_arclength(grid, g, i0, j0);
            for k in 0..n {
                let i = k / grid.ny();
                d[k] = s[i].abs();
                grad[k] = (inv.xx[k] * speed[i] * speed[i]).sqrt();
            }
        }
        (false, false) => {
            let (s, speed) = axial_arclength(grid, g, i0, j0);
            let (x0, y0) = grid.coords(i0, j0);
            let hx = grid.hx();
            let last = grid.nx() - 1;
            for i in 0..grid.nx() {
                for j in 0..grid.ny() {
                    let k = grid.idx(i, j);
                    let (x, y) = grid.coords(i, j);
                    let (rx, ry) = (x - x0, y - y0);
                    let rho = rx.hypot(ry);
                    let pos = rho / hx;
                    let span = (last - i0) as f64;
                    if pos > span {
                        d[k] = f64::INFINITY;
                        continue;
                    }
                    let m = (pos.floor() as usize).min(last - i0 - 1);
                    let w = pos - m as f64;
                    let (a, b) = (i0 + m, i0 + m + 1);
                    let sp = speed[a] + w * (speed[b] - speed[a]);
                    d[k] = s[a] + w * hx * (speed[a] + 0.5 * w * (speed[b] - speed[a]));
                    if rho > 0.0 {
                        let (ux, uy) = (rx / rho, ry / rho);
                        grad[k] = sp * inv.norm2(k, ux, uy).sqrt();
                    }
                }
            }
        }
        _ => {
            return Err(Error::DomainTooSmall(
                "distance balls need a truncated axis to grow along".into(),
            ))
        }
    }
    let reach = (0..n)
        .filter(|&k| grid.near_edge(k / grid.ny(), k % grid.ny(), 1))
        .map(|k| d[k])
        .fold(f64::INFINITY, f64::min);
    Ok(DistanceField { d, grad_norm: grad, reach })
}

/// η(s) for s = d/r: 1 on s ≤ 1, (2 − s)² on [1, 2], 0 beyond. This is the
/// profile that meets |∇η|² ≤ 4η/r² with equality on the transition band.
fn profile(s: f64) -> (f64, f64) {
    if s <= 1.0 {
        (1.0, 0.0)
    } else if s < 2.0 {
        ((2.0 - s) * (2.0 - s), -2.0 * (2.0 - s))
    } else {
        (0.0, 0.0)
    }
}

fn checked_distance(grid: &Grid2D, g: &MetricField, r: f64, center: (usize, usize)) -> Result<DistanceField> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("cutoff radius {r} must be positive")));
    }
    let dist = distance_from(grid, g, center)?;
    if 2.0 * r > dist.reach {
        return Err(Error::DomainTooSmall(format!(
            "ball of radius 2r = {} does not fit (reach {})",
            2.0 * r,
            dist.reach
        )));
    }
    Ok(dist)
}

/// Cutoff η: 1 on B_r(o), 0 outside B_{2r}(o), |∇η|² ≤ 4η/r².
pub fn cutoff_eta(grid: &Grid2D, g: &MetricField, r: f64, center: (usize, usize)) -> Result<ScalarField> {
    let dist = checked_distance(grid, g, r, center)?;
    Ok(ScalarField::generic(dist.d.iter().map(|d| profile(d / r).0).collect()))
}

/// max over nodes of |∇η|²_g − 4η/r², with ∇η = η'(d/r)·∇d/r.
pub fn cutoff_gradient_excess(grid: &Grid2D, g: &MetricField, r: f64, center: (usize, usize)) -> Result<f64> {
    let dist = checked_distance(grid, g, r, center)?;
    Ok(dist
        .d
        .iter()
        .zip(&dist.grad_norm)
        .map(|(d, gn)| {
            let (eta, deta) = profile(d / r);
            (deta * gn / r).powi(2) - 4.0 * eta / (r * r)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// (2/((p−1)r²))·∫η u^p dv: the truncation term that must vanish as r grows.
pub fn cutoff_boundary_term(
    grid: &Grid2D,
    g: &MetricField,
    u: &[f64],
    p: f64,
    r: f64,
    center: (usize, usize),
) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
    }
    grid.check_len(u)?;
    let eta = cutoff_eta(grid, g, r, center)?;
    let s = integrate_with(grid, &g.volume_element(), |k| eta.values[k] * u[k].max(0.0).powf(p));
    Ok(2.0 / ((p - 1.0) * r * r) * s)
}
