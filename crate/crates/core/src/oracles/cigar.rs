use super::OracleResult;
use crate::geometry::curvature::{Christoffel, CurvatureData};
use crate::geometry::{Grid2D, MetricField};
use crate::{Error, Result};

/// Largest admissible share of the total curvature ∫R dv lying outside the
/// inscribed disk of the truncated plane; the share equals 1/(1 + L²).
pub const CIGAR_SUPPORT_LEVEL: f64 = 1e-2;

/// Conformal factor of the steady cigar at time `t` in fixed coordinates:
/// g(t) = (dx² + dy²)/(e^{4t} + r²), i.e. u = −½ ln(e^{4t} + r²).
pub fn cigar_soliton_factor(r2: f64, t: f64) -> f64 {
    -0.5 * ((4.0 * t).exp() + r2).ln()
}

/// R(t) = 4e^{4t}/(e^{4t} + r²); equals 4 at the tip for every t.
pub fn cigar_scalar_curvature(r2: f64, t: f64) -> f64 {
    let c = (4.0 * t).exp();
    4.0 * c / (c + r2)
}

/// Closed-form cigar metric and curvature on a truncated plane centred at
/// the origin. Christoffels follow from u: Γ^x_xx = u_x, Γ^x_xy = u_y,
/// Γ^x_yy = −u_x, Γ^y_xx = −u_y, Γ^y_xy = u_x, Γ^y_yy = u_y with
/// u_x = −x/(1 + r²); Ricci is (R/2)g.
pub fn cigar_oracle(grid: &Grid2D, support_level: f64) -> Result<OracleResult<(MetricField, CurvatureData)>> {
    if grid.x.is_periodic() || grid.y.is_periodic() {
        return Err(Error::OracleInapplicable("cigar oracle needs a truncated plane".into()));
    }
    let (x0, x1) = (grid.x.min, grid.x.min + grid.x.length);
    let (y0, y1) = (grid.y.min, grid.y.min + grid.y.length);
    if !(x0 < 0.0 && x1 > 0.0 && y0 < 0.0 && y1 > 0.0) {
        return Err(Error::OracleInapplicable("the plane must contain the tip r = 0".into()));
    }
    let inscribed = [-x0, x1, -y0, y1].into_iter().fold(f64::INFINITY, f64::min);
    let outside = 1.0 / (1.0 + inscribed * inscribed);
    if outside > support_level {
        return Err(Error::DomainTooSmall(format!(
            "inscribed radius {inscribed} leaves {outside:.3e} of the cigar's total curvature outside (limit {support_level:e})"
        )));
    }

    let n = grid.len();
    let mut u = Vec::with_capacity(n);
    let mut scalar = Vec::with_capacity(n);
    let mut ux = Vec::with_capacity(n);
    let mut uy = Vec::with_capacity(n);
    for i in 0..grid.nx() {
        for j in 0..grid.ny() {
            let (x, y) = grid.coords(i, j);
            let r2 = x * x + y * y;
            u.push(cigar_soliton_factor(r2, 0.0));
            scalar.push(cigar_scalar_curvature(r2, 0.0));
            ux.push(-x / (1.0 + r2));
            uy.push(-y / (1.0 + r2));
        }
    }
    let g = MetricField::conformal(grid, u)?;
    let neg = |v: &Vec<f64>| v.iter().map(|a| -a).collect::<Vec<_>>();
    let christoffel = Christoffel {
        gamma: [
            [ux.clone(), uy.clone(), neg(&ux)],
            [neg(&uy), ux.clone(), uy.clone()],
        ],
    };
    let half = |c: &Vec<f64>| (0..n).map(|k| 0.5 * scalar[k] * c[k]).collect::<Vec<_>>();
    let ricci = [half(&g.gxx), vec![0.0; n], half(&g.gyy)];
    let halfr: Vec<f64> = scalar.iter().map(|r| 0.5 * r).collect();
    let endo = [[halfr.clone(), vec![0.0; n]], [vec![0.0; n], halfr]];
    let curv = CurvatureData {
        christoffel,
        ricci,
        scalar: scalar.clone(),
        endo,
        reduced: Some(scalar),
        reduced_residual: Some(0.0),
    };
    Ok(OracleResult {
        label: "cigar soliton".into(),
        value: (g, curv),
        method: "closed form; steady soliton with sup R = 4",
        error_bound: 16.0 * f64::EPSILON,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tip_curvature_is_four_and_tail_decays() {
        let grid = Grid2D::plane(65, 12.0).unwrap();
        let r = cigar_oracle(&grid, CIGAR_SUPPORT_LEVEL).unwrap();
        let (g, c) = r.value;
        let o = grid.idx(grid.origin.0, grid.origin.1);
        assert_eq!(c.scalar[o], 4.0);
        assert!(g.validate(&grid).is_ok());
        // d·R stays bounded along the axis, with d = asinh r
        for i in grid.origin.0..grid.nx() {
            let x = grid.x.coord(i);
            let v = c.scalar[grid.idx(i, grid.origin.1)];
            assert!(x.asinh() * v <= 4.0 * 0.67);
        }
    }

    #[test]
    fn soliton_curvature_is_steady_at_the_tip() {
        for t in [0.0, 0.1, 0.5, 2.0] {
            assert_eq!(cigar_scalar_curvature(0.0, t), 4.0);
        }
        assert!(cigar_scalar_curvature(100.0, 0.5) > cigar_scalar_curvature(100.0, 0.0));
    }

    #[test]
    fn small_plane_is_rejected() {
        let grid = Grid2D::plane(33, 3.0).unwrap();
        assert!(matches!(cigar_oracle(&grid, CIGAR_SUPPORT_LEVEL), Err(Error::DomainTooSmall(_))));
        assert!(cigar_oracle(&grid, 0.2).is_ok());
    }
}
