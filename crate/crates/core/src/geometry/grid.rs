use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Periodic,
    Truncated,
}

/// One coordinate axis: `n` nodes starting at `min`.
///
/// A periodic axis covers `[min, min + length)` with spacing `length / n`;
/// a truncated axis covers `[min, min + length]` with spacing
/// `length / (n - 1)`, both endpoints being nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub min: f64,
    pub length: f64,
    pub topology: Topology,
}

impl Axis {
    pub fn periodic(n: usize, min: f64, length: f64) -> Self {
        Axis { n, min, length, topology: Topology::Periodic }
    }

    pub fn truncated(n: usize, min: f64, max: f64) -> Self {
        Axis { n, min, length: max - min, topology: Topology::Truncated }
    }

    pub fn spacing(&self) -> f64 {
        match self.topology {
            Topology::Periodic => self.length / self.n as f64,
            Topology::Truncated => self.length / (self.n - 1) as f64,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    /// Index of the node closest to coordinate `c` (clamped to the axis).
    pub fn nearest(&self, c: f64) -> usize {
        let k = ((c - self.min) / self.spacing()).round();
        match self.topology {
            Topology::Periodic => (k as i64).rem_euclid(self.n as i64) as usize,
            Topology::Truncated => k.clamp(0.0, (self.n - 1) as f64) as usize,
        }
    }

    /// Quadrature weight (without the spacing) of node `i`:
    /// trapezoid rule, which on a periodic axis is the plain sum.
    pub fn weight(&self, i: usize) -> f64 {
        match self.topology {
            Topology::Truncated if i == 0 || i + 1 == self.n => 0.5,
            _ => 1.0,
        }
    }
}

/// Structured node grid. Node `(i, j)` lives at `(x.coord(i), y.coord(j))`
/// and is stored at flat index `i * ny + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x: Axis,
    pub y: Axis,
    /// Base point `o` for distances, as a node index.
    pub origin: (usize, usize),
}

impl Grid2D {
    pub fn new(x: Axis, y: Axis, origin: (usize, usize)) -> Result<Self> {
        let g = Grid2D { x, y, origin };
        g.validate()?;
        Ok(g)
    }

    /// `[0, 2π)²` with `n × n` nodes, base point at the first node.
    pub fn flat_torus(n: usize) -> Self {
        let tau = std::f64::consts::TAU;
        Grid2D::new(Axis::periodic(n, 0.0, tau), Axis::periodic(n, 0.0, tau), (0, 0))
            .expect("flat torus grid")
    }

    /// Truncated `x ∈ [x_min, x_max]` times the periodic θ-circle `[0, 2π)`.
    /// The base point is the node nearest `x = 0`.
    pub fn cylinder(nx: usize, ntheta: usize, x_min: f64, x_max: f64) -> Result<Self> {
        let x = Axis::truncated(nx, x_min, x_max);
        let y = Axis::periodic(ntheta, 0.0, std::f64::consts::TAU);
        Grid2D::new(x, y, (x.nearest(0.0), 0))
    }

    /// Truncated square `[-half, half]²`, base point nearest the centre.
    pub fn plane(n: usize, half: f64) -> Result<Self> {
        let a = Axis::truncated(n, -half, half);
        Grid2D::new(a, a, (a.nearest(0.0), a.nearest(0.0)))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("x", &self.x), ("y", &self.y)] {
            if a.n < 8 {
                return Err(Error::InvalidGrid(format!("{name} axis has {} nodes; at least 8 required", a.n)));
            }
            let h = a.spacing();
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} spacing {h} is not positive")));
            }
        }
        if self.origin.0 >= self.x.n || self.origin.1 >= self.y.n {
            return Err(Error::InvalidGrid(format!("origin {:?} outside the grid", self.origin)));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.x.n
    }

    pub fn ny(&self) -> usize {
        self.y.n
    }

    pub fn len(&self) -> usize {
        self.x.n * self.y.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        self.x.spacing()
    }

    pub fn hy(&self) -> f64 {
        self.y.spacing()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.y.n + j
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x.coord(i), self.y.coord(j))
    }

    /// Coordinate-space quadrature weight `hx·hy·wᵢ·wⱼ` of node `(i, j)`.
    pub fn cell_weight(&self, i: usize, j: usize) -> f64 {
        self.hx() * self.hy() * self.x.weight(i) * self.y.weight(j)
    }

    /// Samples `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Vec<f64> {
        crate::par::map_nodes(self.nx(), self.ny(), |i, j| {
            let (x, y) = self.coords(i, j);
            f(x, y)
        })
    }

    /// True when node `(i, j)` lies within `layers` nodes of a truncated end.
    pub fn near_edge(&self, i: usize, j: usize, layers: usize) -> bool {
        let close = |a: &Axis, k: usize| !a.is_periodic() && (k < layers || k + layers >= a.n);
        close(&self.x, i) || close(&self.y, j)
    }

    /// Short stable fingerprint of the grid parameters.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("grid serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub(crate) fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() == self.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected: self.len(), got: field.len() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_depends_on_topology() {
        let p = Axis::periodic(8, 0.0, 8.0);
        let t = Axis::truncated(9, 0.0, 8.0);
        assert_eq!(p.spacing(), 1.0);
        assert_eq!(t.spacing(), 1.0);
        assert_eq!(p.weight(0), 1.0);
        assert_eq!(t.weight(0), 0.5);
        assert_eq!(t.weight(8), 0.5);
    }

    #[test]
    fn too_few_nodes_rejected() {
        let a = Axis::periodic(4, 0.0, 1.0);
        assert!(Grid2D::new(a, Axis::periodic(8, 0.0, 1.0), (0, 0)).is_err());
    }

    #[test]
    fn cylinder_origin_sits_at_x_zero() {
        let g = Grid2D::cylinder(21, 8, -10.0, 10.0).unwrap();
        assert_eq!(g.origin, (10, 0));
        assert_eq!(g.x.coord(10), 0.0);
        assert!(g.near_edge(0, 3, 1));
        assert!(!g.near_edge(10, 0, 2));
    }

    #[test]
    fn hash_is_stable_and_discriminating() {
        assert_eq!(Grid2D::flat_torus(16).hash(), Grid2D::flat_torus(16).hash());
        assert_ne!(Grid2D::flat_torus(16).hash(), Grid2D::flat_torus(32).hash());
    }
}
