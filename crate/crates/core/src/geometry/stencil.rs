//! Second-order finite differences on collocated nodes.
//!
//! First derivatives are centred everywhere except at the two end nodes of
//! a truncated axis, which use the one-sided three-point formula. Every
//! operator built from them (Christoffels, d, δ, covariant derivatives)
//! composes these same stencils, which keeps d∘d = 0 on periodic grids.

use super::grid::{Axis, Grid2D};
use crate::par;

#[inline]
fn first(a: &Axis, k: usize, at: impl Fn(usize) -> f64) -> f64 {
    let n = a.n;
    let h = a.spacing();
    if a.is_periodic() {
        let kp = if k + 1 == n { 0 } else { k + 1 };
        let km = if k == 0 { n - 1 } else { k - 1 };
        (at(kp) - at(km)) / (2.0 * h)
    } else if k == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
    } else if k + 1 == n {
        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
    } else {
        (at(k + 1) - at(k - 1)) / (2.0 * h)
    }
}

#[inline]
fn second(a: &Axis, k: usize, at: impl Fn(usize) -> f64) -> f64 {
    let n = a.n;
    let h2 = a.spacing() * a.spacing();
    if a.is_periodic() {
        let kp = if k + 1 == n { 0 } else { k + 1 };
        let km = if k == 0 { n - 1 } else { k - 1 };
        (at(kp) - 2.0 * at(k) + at(km)) / h2
    } else if k == 0 {
        (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2
    } else if k + 1 == n {
        (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / h2
    } else {
        (at(k + 1) - 2.0 * at(k) + at(k - 1)) / h2
    }
}

/// ∂f/∂x at node `(i, j)`.
#[inline]
pub fn dx_at(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    let ny = g.ny();
    first(&g.x, i, |k| f[k * ny + j])
}

/// ∂f/∂y at node `(i, j)`.
#[inline]
pub fn dy_at(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    let row = &f[i * g.ny()..(i + 1) * g.ny()];
    first(&g.y, j, |k| row[k])
}

/// Compact three-point ∂²f/∂x².
#[inline]
pub fn dxx_at(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    let ny = g.ny();
    second(&g.x, i, |k| f[k * ny + j])
}

/// Compact three-point ∂²f/∂y².
#[inline]
pub fn dyy_at(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    let row = &f[i * g.ny()..(i + 1) * g.ny()];
    second(&g.y, j, |k| row[k])
}

pub fn dx(g: &Grid2D, f: &[f64]) -> Vec<f64> {
    par::map_nodes(g.nx(), g.ny(), |i, j| dx_at(g, f, i, j))
}

pub fn dy(g: &Grid2D, f: &[f64]) -> Vec<f64> {
    par::map_nodes(g.nx(), g.ny(), |i, j| dy_at(g, f, i, j))
}

/// Flat five-point Laplacian ∂²/∂x² + ∂²/∂y².
pub fn flat_laplacian(g: &Grid2D, f: &[f64]) -> Vec<f64> {
    par::map_nodes(g.nx(), g.ny(), |i, j| dxx_at(g, f, i, j) + dyy_at(g, f, i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::Axis;

    fn max_err(g: &Grid2D, got: &[f64], want: impl Fn(f64, f64) -> f64 + Sync + Send) -> f64 {
        let exact = g.sample(want);
        got.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn periodic_derivative_converges_at_second_order() {
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let g = Grid2D::flat_torus(n);
                let f = g.sample(|x, y| (x + 2.0 * y).sin());
                max_err(&g, &dx(&g, &f), |x, y| (x + 2.0 * y).cos())
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.95, "{errs:?}");
        }
    }

    #[test]
    fn one_sided_ends_are_exact_on_quadratics() {
        let a = Axis::truncated(9, -1.0, 1.0);
        let g = Grid2D::new(a, Axis::periodic(8, 0.0, 1.0), (4, 0)).unwrap();
        let f = g.sample(|x, _| 3.0 * x * x - x + 2.0);
        let d = dx(&g, &f);
        let e = max_err(&g, &d, |x, _| 6.0 * x - 1.0);
        assert!(e < 1e-12, "{e}");
        let c = g.sample(|x, _| x * x * x);
        for i in [0, 8] {
            assert!((dxx_at(&g, &c, i, 0) - 6.0 * a.coord(i)).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_derivatives_commute_on_periodic_grids() {
        let g = Grid2D::flat_torus(24);
        let f = g.sample(|x, y| (x.sin() * (2.0 * y).cos()).exp());
        let a = dx(&g, &dy(&g, &f));
        let b = dy(&g, &dx(&g, &f));
        let d = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
    }
}
