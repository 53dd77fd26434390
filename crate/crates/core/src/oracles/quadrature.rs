use super::OracleResult;
use crate::{Error, Result};

/// Rectangle `[x0, x0 + lx) × [y0, y0 + ly)`; periodic axes use the
/// rectangle rule, closed ones the trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureDomain {
    pub x0: f64,
    pub lx: f64,
    pub x_periodic: bool,
    pub y0: f64,
    pub ly: f64,
    pub y_periodic: bool,
}

impl QuadratureDomain {
    pub fn torus(l: f64) -> Self {
        QuadratureDomain { x0: 0.0, lx: l, x_periodic: true, y0: 0.0, ly: l, y_periodic: true }
    }
}

fn rule(x0: f64, l: f64, periodic: bool, n: usize) -> Vec<(f64, f64)> {
    if periodic {
        let h = l / n as f64;
        (0..n).map(|i| (x0 + i as f64 * h, h)).collect()
    } else {
        let h = l / n as f64;
        (0..=n)
            .map(|i| (x0 + i as f64 * h, if i == 0 || i == n { 0.5 * h } else { h }))
            .collect()
    }
}

fn integrate(d: &QuadratureDomain, n: usize, f: &impl Fn(f64, f64) -> f64) -> f64 {
    let xs = rule(d.x0, d.lx, d.x_periodic, n);
    let ys = rule(d.y0, d.ly, d.y_periodic, n);
    xs.iter()
        .map(|(x, wx)| wx * ys.iter().map(|(y, wy)| wy * f(*x, *y)).sum::<f64>())
        .sum()
}

/// ∫∫f over the domain, evaluated at `n`, `2n` and `4n` nodes per axis and
/// Richardson-extrapolated assuming a second-order rule.
///
/// The error bound is the gap between the two extrapolants (floored at a
/// few ulps of the value). A refinement sequence whose differences do not
/// shrink is reported as unreliable.
pub fn quadrature_oracle(
    label: &str,
    domain: QuadratureDomain,
    n: usize,
    f: impl Fn(f64, f64) -> f64,
) -> Result<OracleResult<f64>> {
    let q1 = integrate(&domain, n, &f);
    let q2 = integrate(&domain, 2 * n, &f);
    let q4 = integrate(&domain, 4 * n, &f);
    let scale = q4.abs().max(1.0);
    let noise = 64.0 * f64::EPSILON * scale;
    let (d1, d2) = ((q2 - q1).abs(), (q4 - q2).abs());
    if d2 > noise && d2 > 0.5 * d1 {
        return Err(Error::UnreliableOracle(format!(
            "{label}: refinement differences {d1:.3e} → {d2:.3e} do not contract"
        )));
    }
    let r2 = q2 + (q2 - q1) / 3.0;
    let r4 = q4 + (q4 - q2) / 3.0;
    Ok(OracleResult {
        label: label.to_string(),
        value: r4,
        method: "trapezoid at n, 2n, 4n with Richardson extrapolation",
        error_bound: (r4 - r2).abs().max(noise),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn torus_integrals() {
        let d = QuadratureDomain::torus(TAU);
        let one = quadrature_oracle("1", d, 16, |_, _| 1.0).unwrap();
        assert!(one.admits(4.0 * PI * PI, 0.0));
        let s2 = quadrature_oracle("sin²", d, 32, |x, _| x.sin().powi(2)).unwrap();
        assert!(s2.error_bound <= 1e-8);
        assert!(s2.admits(2.0 * PI * PI, 1e-12));
        let c = quadrature_oracle("1+cos", d, 32, |x, _| 1.0 + x.cos()).unwrap();
        assert!(c.admits(4.0 * PI * PI, 1e-12));
    }

    #[test]
    fn nonperiodic_polynomial_is_extrapolated() {
        let d = QuadratureDomain { x0: 0.0, lx: 1.0, x_periodic: false, y0: 0.0, ly: 1.0, y_periodic: false };
        let r = quadrature_oracle("x⁴", d, 16, |x, _| x.powi(4)).unwrap();
        assert!(r.admits(0.2, 1e-12), "{r:?}");
    }

    #[test]
    fn discontinuous_integrand_on_lattice_is_unreliable() {
        // a spike only visible on the finest lattice
        let d = QuadratureDomain { x0: 0.0, lx: 1.0, x_periodic: false, y0: 0.0, ly: 1.0, y_periodic: false };
        let spike = |x: f64, _y: f64| if ((x * 64.0) - (x * 64.0).round()).abs() < 1e-9 && (x * 32.0).fract() != 0.0 { 1e6 } else { 0.0 };
        assert!(quadrature_oracle("spike", d, 16, spike).is_err());
    }
}
