use super::grid::{Axis, Grid2D};
use super::metric::{InverseMetric, MetricField, Parameterization};
use super::stencil::{dx, dx_at, dxx_at, dy, dy_at, dyy_at};
use crate::{par, Result};

/// Symmetric index pair → slot: xx = 0, xy = 1, yy = 2.
#[inline]
pub const fn sym(i: usize, j: usize) -> usize {
    i + j
}

/// Christoffel symbols Γ^k_ij stored as `gamma[k][sym(i, j)]`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub gamma: [[Vec<f64>; 3]; 2],
}

impl Christoffel {
    #[inline]
    pub fn at(&self, k: usize, i: usize, j: usize, n: usize) -> f64 {
        self.gamma[k][sym(i, j)][n]
    }
}

/// Curvature of a metric on a grid.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub christoffel: Christoffel,
    /// R_ij from the general coordinate formula, `ricci[sym(i, j)]`.
    pub ricci: [Vec<f64>; 3],
    /// R = g^{ij}R_ij from the general formula.
    pub scalar: Vec<f64>,
    /// Ricci endomorphism R^j_i = g^{jk}R_{ki}, stored as `endo[i][j]`.
    pub endo: [[Vec<f64>; 2]; 2],
    /// Closed-form scalar curvature for conformal and warped metrics.
    pub reduced: Option<Vec<f64>>,
    /// sup |R_general − R_reduced| over nodes at least two away from a
    /// truncated end.
    pub reduced_residual: Option<f64>,
}

impl CurvatureData {
    /// The scalar curvature the flow is driven by: the reduced formula when
    /// the metric is tagged, the general one otherwise.
    pub fn flow_scalar(&self) -> &[f64] {
        self.reduced.as_deref().unwrap_or(&self.scalar)
    }

    /// sup |R_ij − (R/2) g_ij| over nodes at least two away from a truncated end.
    pub fn einstein_residual(&self, grid: &Grid2D, g: &MetricField) -> f64 {
        let comps = [&g.gxx, &g.gxy, &g.gyy];
        interior_max(grid, |k| {
            (0..3)
                .map(|s| (self.ricci[s][k] - 0.5 * self.scalar[k] * comps[s][k]).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// Max of `f(k)` over nodes at least two layers from any truncated end.
pub(crate) fn interior_max(grid: &Grid2D, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    par::argmax_nodes(grid.nx(), grid.ny(), |i, j| {
        if grid.near_edge(i, j, 2) {
            f64::NEG_INFINITY
        } else {
            f(grid.idx(i, j))
        }
    })
    .0
    .max(0.0)
}

/// Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij) with centred differences.
pub fn christoffel(g: &MetricField, grid: &Grid2D) -> Result<Christoffel> {
    g.validate(grid)?;
    Ok(christoffel_with(g, &g.inverse(), grid))
}

pub(crate) fn christoffel_with(g: &MetricField, inv: &InverseMetric, grid: &Grid2D) -> Christoffel {
    let comps = [&g.gxx, &g.gxy, &g.gyy];
    // dg[m][s] = ∂_m g_s
    let dg: [[Vec<f64>; 3]; 2] = [
        [dx(grid, comps[0]), dx(grid, comps[1]), dx(grid, comps[2])],
        [dy(grid, comps[0]), dy(grid, comps[1]), dy(grid, comps[2])],
    ];
    let n = grid.len();
    let mut gamma: [[Vec<f64>; 3]; 2] = Default::default();
    for k in 0..2 {
        for s in 0..3 {
            gamma[k][s] = vec![0.0; n];
        }
    }
    let ginv = |k: usize, l: usize, p: usize| match k + l {
        0 => inv.xx[p],
        1 => inv.xy[p],
        _ => inv.yy[p],
    };
    for p in 0..n {
        // lowered symbols Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let mut low = [[0.0f64; 3]; 2];
        for (l, low_l) in low.iter_mut().enumerate() {
            for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                low_l[sym(i, j)] =
                    0.5 * (dg[i][sym(j, l)][p] + dg[j][sym(i, l)][p] - dg[l][sym(i, j)][p]);
            }
        }
        for (k, gk) in gamma.iter_mut().enumerate() {
            for s in 0..3 {
                gk[s][p] = ginv(k, 0, p) * low[0][s] + ginv(k, 1, p) * low[1][s];
            }
        }
    }
    Christoffel { gamma }
}

/// Full curvature data: R_ij from the coordinate formula
/// R_ij = ∂_kΓ^k_ij − ∂_jΓ^k_ki + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ik,
/// R = g^{ij}R_ij and R^j_i = g^{jk}R_ki, plus the reduced cross-check.
pub fn curvature(g: &MetricField, grid: &Grid2D) -> Result<CurvatureData> {
    g.validate(grid)?;
    let inv = g.inverse();
    Ok(curvature_with(g, &inv, grid))
}

pub(crate) fn curvature_with(g: &MetricField, inv: &InverseMetric, grid: &Grid2D) -> CurvatureData {
    let ch = christoffel_with(g, inv, grid);
    let n = grid.len();
    let gm = &ch.gamma;
    // contracted Γ^k_ki
    let c: [Vec<f64>; 2] = [
        (0..n).map(|p| gm[0][sym(0, 0)][p] + gm[1][sym(1, 0)][p]).collect(),
        (0..n).map(|p| gm[0][sym(0, 1)][p] + gm[1][sym(1, 1)][p]).collect(),
    ];
    // ∂_kΓ^k_ij per symmetric slot
    let div: [Vec<f64>; 3] = std::array::from_fn(|s| {
        par::map_nodes(grid.nx(), grid.ny(), |i, j| {
            dx_at(grid, &gm[0][s], i, j) + dy_at(grid, &gm[1][s], i, j)
        })
    });
    // dc[m][i] = ∂_m c_i
    let dc = [[dx(grid, &c[0]), dx(grid, &c[1])], [dy(grid, &c[0]), dy(grid, &c[1])]];

    let mut ricci: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    for p in 0..n {
        let gam = |k: usize, i: usize, j: usize| gm[k][sym(i, j)][p];
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let mut r = div[sym(i, j)][p] - 0.5 * (dc[j][i][p] + dc[i][j][p]);
            for l in 0..2 {
                r += c[l][p] * gam(l, i, j);
                for k in 0..2 {
                    r -= gam(k, j, l) * gam(l, i, k);
                }
            }
            ricci[sym(i, j)][p] = r;
        }
    }
    let scalar: Vec<f64> = (0..n)
        .map(|p| inv.xx[p] * ricci[0][p] + 2.0 * inv.xy[p] * ricci[1][p] + inv.yy[p] * ricci[2][p])
        .collect();
    let ginv = |a: usize, b: usize, p: usize| match a + b {
        0 => inv.xx[p],
        1 => inv.xy[p],
        _ => inv.yy[p],
    };
    let endo: [[Vec<f64>; 2]; 2] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            (0..n)
                .map(|p| ginv(j, 0, p) * ricci[sym(0, i)][p] + ginv(j, 1, p) * ricci[sym(1, i)][p])
                .collect()
        })
    });
    let reduced = reduced_scalar_curvature(g, grid);
    let reduced_residual = reduced
        .as_ref()
        .map(|r| interior_max(grid, |k| (r[k] - scalar[k]).abs()));
    CurvatureData { christoffel: ch, ricci, scalar, endo, reduced, reduced_residual }
}

/// Closed-form scalar curvature for tagged metrics, `None` for general ones.
///
/// Conformal: R = −2e^{−2u}Δ₀u with the compact five-point Laplacian.
/// Warped: R = −2/(hf)·∂_x(∂_x f / h) in conservative three-point form.
pub fn reduced_scalar_curvature(g: &MetricField, grid: &Grid2D) -> Option<Vec<f64>> {
    match &g.param {
        Parameterization::General => None,
        Parameterization::Conformal { u } => Some(conformal_curvature(grid, u, &g.gxx)),
        Parameterization::Warped { h, f } => Some(par::map_nodes(grid.nx(), grid.ny(), |i, j| {
            warped_curvature_at(grid, h, f, i, j)
        })),
    }
}

/// −2Δ₀u/e^{2u}, with e^{2u} taken from g_xx. Interior nodes use a direct
/// five-point loop; nodes on truncated ends fall back to the generic stencils.
fn conformal_curvature(grid: &Grid2D, u: &[f64], e2u: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (ihx2, ihy2) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    let (xp, yp) = (grid.x.is_periodic(), grid.y.is_periodic());
    let mut out = vec![0.0; grid.len()];
    par::for_each_row(&mut out, ny, |i, row| {
        let x_inner = xp || (i > 0 && i + 1 < nx);
        if !x_inner {
            for (j, v) in row.iter_mut().enumerate() {
                let lap = dxx_at(grid, u, i, j) + dyy_at(grid, u, i, j);
                *v = -2.0 * lap / e2u[i * ny + j];
            }
            return;
        }
        let ip = if i + 1 == nx { 0 } else { i + 1 };
        let im = if i == 0 { nx - 1 } else { i - 1 };
        let (c, n, s) = (&u[i * ny..(i + 1) * ny], &u[ip * ny..(ip + 1) * ny], &u[im * ny..(im + 1) * ny]);
        let e = &e2u[i * ny..(i + 1) * ny];
        for j in 0..ny {
            let uyy = if j > 0 && j + 1 < ny {
                (c[j + 1] - 2.0 * c[j] + c[j - 1]) * ihy2
            } else if yp {
                let jp = if j + 1 == ny { 0 } else { j + 1 };
                let jm = if j == 0 { ny - 1 } else { j - 1 };
                (c[jp] - 2.0 * c[j] + c[jm]) * ihy2
            } else {
                dyy_at(grid, u, i, j)
            };
            let uxx = (n[j] - 2.0 * c[j] + s[j]) * ihx2;
            row[j] = -2.0 * (uxx + uyy) / e[j];
        }
    });
    out
}

fn warped_curvature_at(grid: &Grid2D, h: &[f64], f: &[f64], i: usize, j: usize) -> f64 {
    let a: &Axis = &grid.x;
    let ny = grid.ny();
    let at = |v: &[f64], k: usize| v[k * ny + j];
    let k = grid.idx(i, j);
    let interior = a.is_periodic() || (i > 0 && i + 1 < a.n);
    if interior {
        let ip = if i + 1 == a.n { 0 } else { i + 1 };
        let im = if i == 0 { a.n - 1 } else { i - 1 };
        let dx = a.spacing();
        let hp = 0.5 * (at(h, i) + at(h, ip));
        let hm = 0.5 * (at(h, i) + at(h, im));
        let flux = (at(f, ip) - at(f, i)) / hp - (at(f, i) - at(f, im)) / hm;
        -2.0 * flux / (dx * dx * h[k] * f[k])
    } else {
        let fp = dx_at(grid, f, i, j);
        let hp = dx_at(grid, h, i, j);
        let fpp = dxx_at(grid, f, i, j);
        -2.0 / (h[k] * f[k]) * (fpp / h[k] - fp * hp / (h[k] * h[k]))
    }
}
