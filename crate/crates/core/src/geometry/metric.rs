use super::grid::Grid2D;
use crate::{par, Error, Result};

/// Hard floor on det g. Anything at or below is a degenerate metric.
pub const DET_FLOOR: f64 = 1e-12;

/// How the metric components are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Parameterization {
    /// Components are the state.
    General,
    /// g = e^{2u}(dx² + dy²).
    Conformal { u: Vec<f64> },
    /// g = h(x)²dx² + f(x)²dθ²; `h` and `f` are stored per node.
    Warped { h: Vec<f64>, f: Vec<f64> },
}

/// Symmetric 2×2 metric per node: `(g_xx, g_xy, g_yy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub gxx: Vec<f64>,
    pub gxy: Vec<f64>,
    pub gyy: Vec<f64>,
    pub param: Parameterization,
}

/// g^{ij} and √det g, cached per evaluation.
#[derive(Debug, Clone, Default)]
pub struct InverseMetric {
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
    pub sqrt_det: Vec<f64>,
}

impl InverseMetric {
    /// |φ|²_g = g^{ij}φ_iφ_j at flat index `k`.
    #[inline]
    pub fn norm2(&self, k: usize, px: f64, py: f64) -> f64 {
        self.xx[k] * px * px + 2.0 * self.xy[k] * px * py + self.yy[k] * py * py
    }
}

impl MetricField {
    pub fn flat(grid: &Grid2D) -> Self {
        let n = grid.len();
        MetricField {
            gxx: vec![1.0; n],
            gxy: vec![0.0; n],
            gyy: vec![1.0; n],
            param: Parameterization::General,
        }
    }

    pub fn general(grid: &Grid2D, gxx: Vec<f64>, gxy: Vec<f64>, gyy: Vec<f64>) -> Result<Self> {
        for c in [&gxx, &gxy, &gyy] {
            grid.check_len(c)?;
        }
        let g = MetricField { gxx, gxy, gyy, param: Parameterization::General };
        g.validate(grid)?;
        Ok(g)
    }

    pub fn conformal(grid: &Grid2D, u: Vec<f64>) -> Result<Self> {
        grid.check_len(&u)?;
        Self::from_param(grid, Parameterization::Conformal { u })
    }

    pub fn warped(grid: &Grid2D, h: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        grid.check_len(&h)?;
        grid.check_len(&f)?;
        if let Some(k) = h.iter().chain(&f).position(|v| !(*v > 0.0)) {
            let k = k % grid.len();
            return Err(Error::DegenerateMetric { i: k / grid.ny(), j: k % grid.ny(), det: 0.0 });
        }
        Self::from_param(grid, Parameterization::Warped { h, f })
    }

    /// Materializes components from a conformal or warped parameterization.
    pub fn from_param(grid: &Grid2D, param: Parameterization) -> Result<Self> {
        let n = grid.len();
        let (gxx, gxy, gyy) = match &param {
            Parameterization::General => {
                return Err(Error::InvalidGrid("general metrics carry their own components".into()))
            }
            Parameterization::Conformal { u } => {
                let e: Vec<f64> = u.iter().map(|u| (2.0 * u).exp()).collect();
                (e.clone(), vec![0.0; n], e)
            }
            Parameterization::Warped { h, f } => (
                h.iter().map(|h| h * h).collect(),
                vec![0.0; n],
                f.iter().map(|f| f * f).collect(),
            ),
        };
        let g = MetricField { gxx, gxy, gyy, param };
        g.validate(grid)?;
        Ok(g)
    }

    #[inline]
    pub fn det_at(&self, k: usize) -> f64 {
        self.gxx[k] * self.gyy[k] - self.gxy[k] * self.gxy[k]
    }

    /// Positive-definiteness check with the hard determinant floor.
    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        let ny = grid.ny();
        let bad = par::per_row(grid.nx(), |i| {
            (0..ny).find_map(|j| {
                let k = i * ny + j;
                let det = self.det_at(k);
                let ok = self.gxx[k] > 0.0 && det > DET_FLOOR && det.is_finite();
                (!ok).then_some((j, det))
            })
        });
        match bad.into_iter().enumerate().find_map(|(i, b)| b.map(|(j, d)| (i, j, d))) {
            Some((i, j, det)) => Err(Error::DegenerateMetric { i, j, det }),
            None => Ok(()),
        }
    }

    pub fn inverse(&self) -> InverseMetric {
        let n = self.gxx.len();
        let mut inv = InverseMetric {
            xx: vec![0.0; n],
            xy: vec![0.0; n],
            yy: vec![0.0; n],
            sqrt_det: vec![0.0; n],
        };
        for k in 0..n {
            let det = self.det_at(k);
            inv.xx[k] = self.gyy[k] / det;
            inv.xy[k] = -self.gxy[k] / det;
            inv.yy[k] = self.gxx[k] / det;
            inv.sqrt_det[k] = det.sqrt();
        }
        inv
    }

    /// Volume element √det g per node.
    pub fn volume_element(&self) -> Vec<f64> {
        (0..self.gxx.len()).map(|k| self.det_at(k).sqrt()).collect()
    }

    /// The metric λg. Components are multiplied exactly by λ; the
    /// parameterization follows (u + ½ln λ, or √λ·h and √λ·f).
    pub fn scaled(&self, lambda: f64) -> MetricField {
        let mul = |v: &Vec<f64>, s: f64| v.iter().map(|x| x * s).collect::<Vec<_>>();
        let param = match &self.param {
            Parameterization::General => Parameterization::General,
            Parameterization::Conformal { u } => {
                let shift = 0.5 * lambda.ln();
                Parameterization::Conformal { u: u.iter().map(|u| u + shift).collect() }
            }
            Parameterization::Warped { h, f } => {
                let s = lambda.sqrt();
                Parameterization::Warped { h: mul(h, s), f: mul(f, s) }
            }
        };
        MetricField {
            gxx: mul(&self.gxx, lambda),
            gxy: mul(&self.gxy, lambda),
            gyy: mul(&self.gyy, lambda),
            param,
        }
    }

    /// Drops the parameterization, keeping the components.
    pub fn into_general(self) -> MetricField {
        MetricField { param: Parameterization::General, ..self }
    }

    pub fn tag(&self) -> &'static str {
        match self.param {
            Parameterization::General => "general",
            Parameterization::Conformal { .. } => "conformal",
            Parameterization::Warped { .. } => "warped",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_node_is_reported() {
        let g = Grid2D::flat_torus(8);
        let mut m = MetricField::flat(&g);
        m.gyy[g.idx(3, 5)] = 1e-13;
        match m.validate(&g) {
            Err(Error::DegenerateMetric { i, j, .. }) => assert_eq!((i, j), (3, 5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn volume_elements_of_tagged_metrics() {
        let g = Grid2D::cylinder(16, 8, -2.0, 2.0).unwrap();
        let h = g.sample(|x, _| 1.0 + 0.1 * x * x);
        let f = g.sample(|x, _| 2.0 - (-x * x).exp());
        let m = MetricField::warped(&g, h.clone(), f.clone()).unwrap();
        for (k, v) in m.volume_element().iter().enumerate() {
            assert!((v - h[k] * f[k]).abs() < 1e-14);
        }
        let u = g.sample(|x, y| 0.1 * x + 0.2 * y.sin());
        let c = MetricField::conformal(&g, u.clone()).unwrap();
        for (k, v) in c.volume_element().iter().enumerate() {
            assert!((v - (2.0 * u[k]).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn warped_rejects_nonpositive_profile() {
        let g = Grid2D::cylinder(16, 8, -2.0, 2.0).unwrap();
        let h = vec![1.0; g.len()];
        let f = g.sample(|x, _| 1.0 - 2.0 * (-x * x).exp());
        assert!(MetricField::warped(&g, h, f).is_err());
    }
}
