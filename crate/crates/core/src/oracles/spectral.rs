use super::OracleResult;
use crate::geometry::{Grid2D, MetricField, OneFormField};
use crate::{Error, Result};

/// a·cos(kx·x + ky·y) + b·sin(kx·x + ky·y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMode {
    pub kx: i32,
    pub ky: i32,
    pub cos: f64,
    pub sin: f64,
}

impl TrigMode {
    pub fn new(kx: i32, ky: i32, cos: f64, sin: f64) -> Self {
        TrigMode { kx, ky, cos, sin }
    }

    pub fn constant(c: f64) -> Self {
        TrigMode::new(0, 0, c, 0.0)
    }

    fn wavenumber2(&self) -> f64 {
        f64::from(self.kx * self.kx + self.ky * self.ky)
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let phase = f64::from(self.kx) * x + f64::from(self.ky) * y;
        self.cos * phase.cos() + self.sin * phase.sin()
    }
}

/// Finite trigonometric sum on the 2π-periodic torus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigSeries(pub Vec<TrigMode>);

impl TrigSeries {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.0.iter().map(|m| m.eval(x, y)).sum()
    }

    /// Heat-flow evolution: every mode decays by e^{−|k|²t}.
    pub fn evolved(&self, t: f64) -> TrigSeries {
        TrigSeries(
            self.0
                .iter()
                .map(|m| {
                    let d = (-m.wavenumber2() * t).exp();
                    TrigMode { cos: m.cos * d, sin: m.sin * d, ..*m }
                })
                .collect(),
        )
    }

    fn amplitude(&self) -> f64 {
        self.0.iter().map(|m| m.cos.abs() + m.sin.abs()).sum()
    }

    fn sample(&self, grid: &Grid2D) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                let (x, y) = grid.coords(i, j);
                out.push(self.eval(x, y));
            }
        }
        out
    }
}

fn require_flat(grid: &Grid2D, g: &MetricField) -> Result<()> {
    if !(grid.x.is_periodic() && grid.y.is_periodic()) {
        return Err(Error::OracleInapplicable("flat spectral oracle needs a periodic torus".into()));
    }
    let tau = std::f64::consts::TAU;
    if (grid.x.length - tau).abs() > 1e-12 || (grid.y.length - tau).abs() > 1e-12 {
        return Err(Error::OracleInapplicable("torus periods must both be 2π".into()));
    }
    let flat = (0..grid.len()).all(|k| g.gxx[k] == 1.0 && g.gxy[k] == 0.0 && g.gyy[k] == 1.0);
    if !flat {
        return Err(Error::OracleInapplicable("metric is not the flat identity metric".into()));
    }
    Ok(())
}

/// Exact solution of uₜ = Δu on the static flat torus at time `t`.
pub fn flat_spectral_oracle(
    initial: &TrigSeries,
    t: f64,
    grid: &Grid2D,
    g: &MetricField,
) -> Result<OracleResult<Vec<f64>>> {
    require_flat(grid, g)?;
    let evolved = initial.evolved(t);
    Ok(OracleResult {
        label: format!("flat heat solution at t = {t}"),
        value: evolved.sample(grid),
        method: "modewise exponential decay",
        error_bound: 8.0 * f64::EPSILON * initial.amplitude().max(1.0) * initial.0.len().max(1) as f64,
    })
}

/// Exact solution of φₜ = Δ_dφ on the static flat torus: Δ_d acts
/// componentwise there, so each component is a scalar heat solution.
pub fn flat_spectral_form_oracle(
    initial: (&TrigSeries, &TrigSeries),
    t: f64,
    grid: &Grid2D,
    g: &MetricField,
) -> Result<OracleResult<OneFormField>> {
    let x = flat_spectral_oracle(initial.0, t, grid, g)?;
    let y = flat_spectral_oracle(initial.1, t, grid, g)?;
    Ok(OracleResult {
        label: format!("flat form heat solution at t = {t}"),
        value: OneFormField::new(x.value, y.value),
        method: "modewise exponential decay",
        error_bound: x.error_bound.max(y.error_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_decays_by_e_to_minus_t() {
        let grid = Grid2D::flat_torus(16);
        let g = MetricField::flat(&grid);
        let s = TrigSeries(vec![TrigMode::new(1, 0, 0.0, 1.0)]);
        let r = flat_spectral_oracle(&s, 1.0, &grid, &g).unwrap();
        for i in 0..16 {
            let x = grid.x.coord(i);
            assert!((r.value[grid.idx(i, 0)] - (-1.0f64).exp() * x.sin()).abs() <= r.error_bound);
        }
        assert!(r.error_bound > 0.0);
    }

    #[test]
    fn constants_are_stationary_and_modes_superpose() {
        let grid = Grid2D::flat_torus(8);
        let g = MetricField::flat(&grid);
        let c = TrigSeries(vec![TrigMode::constant(2.5)]);
        assert!(flat_spectral_oracle(&c, 7.0, &grid, &g).unwrap().value.iter().all(|v| *v == 2.5));
        let a = TrigSeries(vec![TrigMode::new(1, 0, 1.0, 0.0)]);
        let b = TrigSeries(vec![TrigMode::new(1, 2, 0.0, 0.5)]);
        let ab = TrigSeries(vec![a.0[0], b.0[0]]);
        let (ra, rb, rab) = (
            flat_spectral_oracle(&a, 0.3, &grid, &g).unwrap(),
            flat_spectral_oracle(&b, 0.3, &grid, &g).unwrap(),
            flat_spectral_oracle(&ab, 0.3, &grid, &g).unwrap(),
        );
        for k in 0..grid.len() {
            assert!((ra.value[k] + rb.value[k] - rab.value[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn curved_metric_is_rejected() {
        let grid = Grid2D::flat_torus(8);
        let g = MetricField::conformal(&grid, grid.sample(|x, _| 0.1 * x.sin())).unwrap();
        let s = TrigSeries(vec![TrigMode::constant(1.0)]);
        assert!(matches!(flat_spectral_oracle(&s, 1.0, &grid, &g), Err(Error::OracleInapplicable(_))));
    }
}
