use super::curvature::{christoffel_with, curvature_with, Christoffel, CurvatureData};
use super::grid::Grid2D;
use super::metric::{InverseMetric, MetricField};
use super::stencil::{dx, dx_at, dy, dy_at};
use crate::{par, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarRole {
    Gauge,
    Subsolution,
    ConformalFactor,
    /// Coefficient w of a 2-form w dx∧dy.
    TwoFormDensity,
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub role: ScalarRole,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(role: ScalarRole, values: Vec<f64>) -> Self {
        ScalarField { role, values }
    }

    pub fn generic(values: Vec<f64>) -> Self {
        Self::new(ScalarRole::Generic, values)
    }
}

/// Covariant components (φ_x, φ_θ) per node.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Set when the form is meant to be closed; checked against the
    /// discrete dφ residual.
    pub closed: bool,
}

impl OneFormField {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        OneFormField { x, y, closed: false }
    }

    pub fn closed(x: Vec<f64>, y: Vec<f64>) -> Self {
        OneFormField { x, y, closed: true }
    }

    pub fn zeros(n: usize) -> Self {
        OneFormField::new(vec![0.0; n], vec![0.0; n])
    }

    /// Pointwise |φ|²_g.
    pub fn norm2(&self, inv: &InverseMetric) -> Vec<f64> {
        (0..self.x.len()).map(|k| inv.norm2(k, self.x[k], self.y[k])).collect()
    }

    pub fn scaled(&self, s: f64) -> OneFormField {
        OneFormField {
            x: self.x.iter().map(|v| v * s).collect(),
            y: self.y.iter().map(|v| v * s).collect(),
            closed: self.closed,
        }
    }
}

/// Exterior derivative on functions and 1-forms.
pub trait ExteriorDerivative {
    type Output;
    fn exterior_derivative(&self, grid: &Grid2D) -> Self::Output;
}

impl ExteriorDerivative for ScalarField {
    type Output = OneFormField;

    /// dF = (∂_xF, ∂_θF).
    fn exterior_derivative(&self, grid: &Grid2D) -> OneFormField {
        OneFormField::closed(dx(grid, &self.values), dy(grid, &self.values))
    }
}

impl ExteriorDerivative for OneFormField {
    type Output = ScalarField;

    /// dφ = (∂_xφ_θ − ∂_θφ_x) dx∧dθ, returned as its coefficient.
    fn exterior_derivative(&self, grid: &Grid2D) -> ScalarField {
        ScalarField::new(ScalarRole::TwoFormDensity, curl(grid, self))
    }
}

pub fn exterior_derivative<T: ExteriorDerivative>(field: &T, grid: &Grid2D) -> T::Output {
    field.exterior_derivative(grid)
}

fn curl(grid: &Grid2D, phi: &OneFormField) -> Vec<f64> {
    par::map_nodes(grid.nx(), grid.ny(), |i, j| {
        dx_at(grid, &phi.y, i, j) - dy_at(grid, &phi.x, i, j)
    })
}

/// sup |dφ| over nodes.
pub fn closedness_residual(grid: &Grid2D, phi: &OneFormField) -> f64 {
    par::argmax_nodes(grid.nx(), grid.ny(), |i, j| {
        (dx_at(grid, &phi.y, i, j) - dy_at(grid, &phi.x, i, j)).abs()
    })
    .0
}

/// δφ = −(1/√g) ∂_i(√g g^{ij} φ_j).
pub fn codifferential(phi: &OneFormField, g: &MetricField, grid: &Grid2D) -> Result<ScalarField> {
    g.validate(grid)?;
    Ok(ScalarField::generic(codifferential_with(phi, &g.inverse(), grid)))
}

pub(crate) fn codifferential_with(phi: &OneFormField, inv: &InverseMetric, grid: &Grid2D) -> Vec<f64> {
    let n = grid.len();
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    for k in 0..n {
        let s = inv.sqrt_det[k];
        fx[k] = s * (inv.xx[k] * phi.x[k] + inv.xy[k] * phi.y[k]);
        fy[k] = s * (inv.xy[k] * phi.x[k] + inv.yy[k] * phi.y[k]);
    }
    par::map_nodes(grid.nx(), grid.ny(), |i, j| {
        let k = grid.idx(i, j);
        -(dx_at(grid, &fx, i, j) + dy_at(grid, &fy, i, j)) / inv.sqrt_det[k]
    })
}

/// δ of the 2-form w dx∧dy: the 1-form g_{ji}V^i/√g with
/// V = (∂_y s, −∂_x s), s = w/√g.
fn codifferential_two_form(w: &[f64], g: &MetricField, inv: &InverseMetric, grid: &Grid2D) -> OneFormField {
    let s: Vec<f64> = w.iter().zip(&inv.sqrt_det).map(|(w, r)| w / r).collect();
    let sx = dx(grid, &s);
    let sy = dy(grid, &s);
    let n = grid.len();
    let mut out = OneFormField::zeros(n);
    for k in 0..n {
        let (vx, vy) = (sy[k], -sx[k]);
        let r = inv.sqrt_det[k];
        out.x[k] = (g.gxx[k] * vx + g.gxy[k] * vy) / r;
        out.y[k] = (g.gxy[k] * vx + g.gyy[k] * vy) / r;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HodgeMethod {
    /// Δ_d = −(dδ + δd).
    DDelta,
    /// Δ_dφ_k = Δφ_k − R^j_kφ_j.
    Bochner,
}

/// Hodge–de Rham Laplacian Δ_d (nonpositive convention).
pub fn hodge_laplacian(
    phi: &OneFormField,
    g: &MetricField,
    grid: &Grid2D,
    method: HodgeMethod,
) -> Result<OneFormField> {
    g.validate(grid)?;
    let inv = g.inverse();
    Ok(match method {
        HodgeMethod::DDelta => hodge_ddelta_with(phi, g, &inv, grid),
        HodgeMethod::Bochner => {
            let curv = curvature_with(g, &inv, grid);
            hodge_bochner_with(phi, &inv, &curv, grid)
        }
    })
}

pub(crate) fn hodge_ddelta_with(
    phi: &OneFormField,
    g: &MetricField,
    inv: &InverseMetric,
    grid: &Grid2D,
) -> OneFormField {
    let delta = codifferential_with(phi, inv, grid);
    let w = curl(grid, phi);
    let dd = codifferential_two_form(&w, g, inv, grid);
    let mut out = dd;
    let ny = grid.ny();
    par::for_each_row2(&mut out.x, &mut out.y, ny, |i, rx, ry| {
        for j in 0..ny {
            rx[j] = -(dx_at(grid, &delta, i, j) + rx[j]);
            ry[j] = -(dy_at(grid, &delta, i, j) + ry[j]);
        }
    });
    out.closed = false;
    out
}

pub(crate) fn hodge_bochner_with(
    phi: &OneFormField,
    inv: &InverseMetric,
    curv: &CurvatureData,
    grid: &Grid2D,
) -> OneFormField {
    let mut out = rough_laplacian_with(phi, inv, &curv.christoffel, grid);
    for k in 0..grid.len() {
        let e = &curv.endo;
        let (px, py) = (phi.x[k], phi.y[k]);
        out.x[k] -= e[0][0][k] * px + e[0][1][k] * py;
        out.y[k] -= e[1][0][k] * px + e[1][1][k] * py;
    }
    out
}

/// ∇_jφ_i = ∂_jφ_i − Γ^l_ji φ_l, returned as `t[j][i]`.
pub fn covariant_derivative(phi: &OneFormField, ch: &Christoffel, grid: &Grid2D) -> [[Vec<f64>; 2]; 2] {
    let comps = [&phi.x, &phi.y];
    let n = grid.len();
    let mut t: [[Vec<f64>; 2]; 2] = [
        [dx(grid, comps[0]), dx(grid, comps[1])],
        [dy(grid, comps[0]), dy(grid, comps[1])],
    ];
    for p in 0..n {
        for (j, tj) in t.iter_mut().enumerate() {
            for (i, tji) in tj.iter_mut().enumerate() {
                tji[p] -= ch.at(0, j, i, p) * comps[0][p] + ch.at(1, j, i, p) * comps[1][p];
            }
        }
    }
    t
}

/// |∇φ|²_g = g^{jk}g^{il}∇_jφ_i ∇_kφ_l per node.
pub fn covariant_gradient_norm2(
    phi: &OneFormField,
    inv: &InverseMetric,
    ch: &Christoffel,
    grid: &Grid2D,
) -> Vec<f64> {
    let t = covariant_derivative(phi, ch, grid);
    let ginv = |a: usize, b: usize, p: usize| match a + b {
        0 => inv.xx[p],
        1 => inv.xy[p],
        _ => inv.yy[p],
    };
    (0..grid.len())
        .map(|p| {
            let mut s = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    for i in 0..2 {
                        for l in 0..2 {
                            s += ginv(j, k, p) * ginv(i, l, p) * t[j][i][p] * t[k][l][p];
                        }
                    }
                }
            }
            s
        })
        .collect()
}

/// Rough Laplacian (Δφ)_i = g^{jk}∇_k∇_jφ_i (trace of the second covariant
/// derivative, nonpositive spectrum).
pub fn rough_laplacian(phi: &OneFormField, g: &MetricField, grid: &Grid2D) -> Result<OneFormField> {
    g.validate(grid)?;
    let inv = g.inverse();
    let ch = christoffel_with(g, &inv, grid);
    Ok(rough_laplacian_with(phi, &inv, &ch, grid))
}

pub(crate) fn rough_laplacian_with(
    phi: &OneFormField,
    inv: &InverseMetric,
    ch: &Christoffel,
    grid: &Grid2D,
) -> OneFormField {
    let t = covariant_derivative(phi, ch, grid);
    // dt[k][j][i] = ∂_k T_ji
    let dt: [[[Vec<f64>; 2]; 2]; 2] = [
        [[dx(grid, &t[0][0]), dx(grid, &t[0][1])], [dx(grid, &t[1][0]), dx(grid, &t[1][1])]],
        [[dy(grid, &t[0][0]), dy(grid, &t[0][1])], [dy(grid, &t[1][0]), dy(grid, &t[1][1])]],
    ];
    let ginv = |a: usize, b: usize, p: usize| match a + b {
        0 => inv.xx[p],
        1 => inv.xy[p],
        _ => inv.yy[p],
    };
    let n = grid.len();
    let mut out = OneFormField::zeros(n);
    for p in 0..n {
        for i in 0..2 {
            let mut acc = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    // ∇_k T_ji = ∂_k T_ji − Γ^m_kj T_mi − Γ^m_ki T_jm
                    let mut v = dt[k][j][i][p];
                    for m in 0..2 {
                        v -= ch.at(m, k, j, p) * t[m][i][p] + ch.at(m, k, i, p) * t[j][m][p];
                    }
                    acc += ginv(j, k, p) * v;
                }
            }
            if i == 0 {
                out.x[p] = acc;
            } else {
                out.y[p] = acc;
            }
        }
    }
    out
}

/// Scalar Laplace–Beltrami operator in conservative form,
/// (1/√g)∂_i(√g g^{ij}∂_j u). Diagonal fluxes use the compact three-point
/// stencil with face-averaged coefficients; the mixed terms use centred
/// differences. End nodes of truncated axes get zero.
pub fn laplace_beltrami(u: &[f64], g: &MetricField, grid: &Grid2D) -> Result<Vec<f64>> {
    g.validate(grid)?;
    Ok(laplace_beltrami_with(u, &g.inverse(), grid))
}

pub(crate) fn laplace_beltrami_with(u: &[f64], inv: &InverseMetric, grid: &Grid2D) -> Vec<f64> {
    let n = grid.len();
    let ax: Vec<f64> = (0..n).map(|k| inv.sqrt_det[k] * inv.xx[k]).collect();
    let ay: Vec<f64> = (0..n).map(|k| inv.sqrt_det[k] * inv.yy[k]).collect();
    let mixed = inv.xy.iter().any(|v| *v != 0.0);
    let (cx, cy) = if mixed {
        let axy: Vec<f64> = (0..n).map(|k| inv.sqrt_det[k] * inv.xy[k]).collect();
        let uy = dy(grid, u);
        let ux = dx(grid, u);
        let fx: Vec<f64> = (0..n).map(|k| axy[k] * uy[k]).collect();
        let fy: Vec<f64> = (0..n).map(|k| axy[k] * ux[k]).collect();
        (Some(fx), Some(fy))
    } else {
        (None, None)
    };
    let (nx, ny) = (grid.nx(), grid.ny());
    let (hx2, hy2) = (grid.hx() * grid.hx(), grid.hy() * grid.hy());
    let xp = grid.x.is_periodic();
    let yp = grid.y.is_periodic();
    par::map_nodes(nx, ny, |i, j| {
        if (!xp && (i == 0 || i + 1 == nx)) || (!yp && (j == 0 || j + 1 == ny)) {
            return 0.0;
        }
        let ip = if i + 1 == nx { 0 } else { i + 1 };
        let im = if i == 0 { nx - 1 } else { i - 1 };
        let jp = if j + 1 == ny { 0 } else { j + 1 };
        let jm = if j == 0 { ny - 1 } else { j - 1 };
        let k = i * ny + j;
        let (kxp, kxm, kyp, kym) = (ip * ny + j, im * ny + j, i * ny + jp, i * ny + jm);
        let tx = (0.5 * (ax[k] + ax[kxp]) * (u[kxp] - u[k]) - 0.5 * (ax[k] + ax[kxm]) * (u[k] - u[kxm])) / hx2;
        let ty = (0.5 * (ay[k] + ay[kyp]) * (u[kyp] - u[k]) - 0.5 * (ay[k] + ay[kym]) * (u[k] - u[kym])) / hy2;
        let mut acc = tx + ty;
        if let (Some(fx), Some(fy)) = (&cx, &cy) {
            acc += dx_at(grid, fx, i, j) + dy_at(grid, fy, i, j);
        }
        acc / inv.sqrt_det[k]
    })
}

/// Scalar Hodge Laplacian −δdF. Built from the same stencils as the form
/// operators, so d commutes with it: d(−δdF) = Δ_d(dF) node for node.
pub(crate) fn hodge_scalar_laplacian_with(f: &[f64], inv: &InverseMetric, grid: &Grid2D) -> Vec<f64> {
    let df = OneFormField::new(dx(grid, f), dy(grid, f));
    codifferential_with(&df, inv, grid).into_iter().map(|v| -v).collect()
}

/// √det g per node.
pub fn volume_element(g: &MetricField, grid: &Grid2D) -> Result<ScalarField> {
    g.validate(grid)?;
    Ok(ScalarField::generic(g.volume_element()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn d_of_constant_and_dtheta_vanish() {
        let grid = Grid2D::flat_torus(16);
        let c = ScalarField::generic(vec![3.5; grid.len()]);
        let dc = exterior_derivative(&c, &grid);
        assert!(dc.x.iter().chain(&dc.y).all(|v| *v == 0.0));
        let dtheta = OneFormField::closed(vec![0.0; grid.len()], vec![1.0; grid.len()]);
        assert!(exterior_derivative(&dtheta, &grid).values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn d_of_sine_is_cosine_to_second_order() {
        let grid = Grid2D::flat_torus(128);
        let f = ScalarField::generic(grid.sample(|x, _| x.sin()));
        let df = exterior_derivative(&f, &grid);
        let h = grid.hx();
        assert!(sup_diff(&df.x, &grid.sample(|x, _| x.cos())) < h * h / 6.0 * 1.01);
        assert!(df.y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dd_vanishes_to_rounding() {
        let grid = Grid2D::flat_torus(32);
        let f = ScalarField::generic(grid.sample(|x, y| (x.sin() + 2.0 * (3.0 * y).cos()).exp()));
        let w = exterior_derivative(&exterior_derivative(&f, &grid), &grid);
        assert!(w.values.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn codifferential_flat_examples() {
        let grid = Grid2D::flat_torus(64);
        let g = MetricField::flat(&grid);
        let dtheta = OneFormField::closed(vec![0.0; grid.len()], vec![1.0; grid.len()]);
        assert!(codifferential(&dtheta, &g, &grid).unwrap().values.iter().all(|v| *v == 0.0));
        let s = OneFormField::closed(grid.sample(|x, _| x.sin()), vec![0.0; grid.len()]);
        let d = codifferential(&s, &g, &grid).unwrap();
        let h = grid.hx();
        assert!(sup_diff(&d.values, &grid.sample(|x, _| -x.cos())) < h * h / 6.0 * 1.01);
    }

    #[test]
    fn flat_hodge_of_sine_form_by_both_methods() {
        let grid = Grid2D::flat_torus(128);
        let g = MetricField::flat(&grid);
        let phi = OneFormField::closed(grid.sample(|x, _| x.sin()), vec![0.0; grid.len()]);
        let want = grid.sample(|x, _| -x.sin());
        let h = grid.hx();
        for m in [HodgeMethod::DDelta, HodgeMethod::Bochner] {
            let l = hodge_laplacian(&phi, &g, &grid, m).unwrap();
            assert!(sup_diff(&l.x, &want) < h * h / 3.0 * 1.01, "{m:?}");
            assert!(l.y.iter().all(|v| v.abs() < 1e-12));
        }
        let r = rough_laplacian(&phi, &g, &grid).unwrap();
        assert!(sup_diff(&r.x, &want) < h * h / 3.0 * 1.01);
    }

    #[test]
    fn flat_harmonic_forms_are_annihilated() {
        let grid = Grid2D::flat_torus(16);
        let g = MetricField::flat(&grid);
        let phi = OneFormField::closed(vec![0.7; grid.len()], vec![1.0; grid.len()]);
        for m in [HodgeMethod::DDelta, HodgeMethod::Bochner] {
            let l = hodge_laplacian(&phi, &g, &grid, m).unwrap();
            assert!(l.x.iter().chain(&l.y).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn rough_laplacian_of_dtheta_on_warped_neck_is_nonzero() {
        let grid = Grid2D::cylinder(128, 16, -6.0, 6.0).unwrap();
        let h = vec![1.0; grid.len()];
        let f = grid.sample(|x, _| 2.0 - (-x * x).exp());
        let g = MetricField::warped(&grid, h, f).unwrap();
        let phi = OneFormField::closed(vec![0.0; grid.len()], vec![1.0; grid.len()]);
        let r = rough_laplacian(&phi, &g, &grid).unwrap();
        assert!(r.y.iter().any(|v| v.abs() > 1e-3));
        let b = hodge_laplacian(&phi, &g, &grid, HodgeMethod::Bochner).unwrap();
        let d = hodge_laplacian(&phi, &g, &grid, HodgeMethod::DDelta).unwrap();
        assert!(d.x.iter().chain(&d.y).all(|v| *v == 0.0));
        let gap = (0..grid.len())
            .filter(|&k| !grid.near_edge(k / 16, k % 16, 2))
            .map(|k| (b.x[k] - d.x[k]).abs().max((b.y[k] - d.y[k]).abs()))
            .fold(0.0, f64::max);
        assert!(gap < 5e-2, "{gap}");
    }

    #[test]
    fn laplace_beltrami_matches_conformal_identity() {
        // Δ_g u = e^{−2w}Δ₀u for g = e^{2w}δ
        let grid = Grid2D::flat_torus(32);
        let w = grid.sample(|x, y| 0.1 * x.sin() + 0.05 * y.cos());
        let g = MetricField::conformal(&grid, w.clone()).unwrap();
        let u = grid.sample(|x, y| (x + y).cos());
        let lap = laplace_beltrami(&u, &g, &grid).unwrap();
        let flat = crate::geometry::stencil::flat_laplacian(&grid, &u);
        for k in 0..grid.len() {
            assert!((lap[k] - (-2.0 * w[k]).exp() * flat[k]).abs() < 1e-12);
        }
    }
}
