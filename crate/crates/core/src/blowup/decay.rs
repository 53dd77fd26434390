use serde::{Deserialize, Serialize};

use crate::functionals::distance_from;
use crate::geometry::{Grid2D, MetricField, OneFormField};
use crate::{Error, Result};

/// Fraction of the reach kept clear as boundary buffer.
const BUFFER_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayMonitorSpec {
    /// Decay order σ > 0.
    pub sigma: f64,
    /// Base point o as a node index.
    pub center: (usize, usize),
    /// Increasing shell radii; shell k covers [r_k, r_{k+1}), the last one
    /// runs to the buffer.
    pub radii: Vec<f64>,
}

/// The field whose decay is profiled.
#[derive(Debug, Clone, Copy)]
pub enum DecayField<'a> {
    Form(&'a OneFormField),
    /// A scalar such as the curvature; its absolute value is used.
    Scalar(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub radii: Vec<f64>,
    /// sup over shell k of d^σ·|field|.
    pub values: Vec<f64>,
    /// Profile is non-increasing from its peak to the outermost shell.
    pub decreasing_tail: bool,
    /// Largest radius before the boundary buffer.
    pub limit: f64,
}

impl DecayProfile {
    /// Whether `later` still decays wherever `self` did.
    pub fn preserved_by(&self, later: &DecayProfile) -> bool {
        !self.decreasing_tail || later.decreasing_tail
    }
}

/// Shell-wise sup of d(x, o)^σ·|field(x)|.
pub fn decay_monitor(grid: &Grid2D, g: &MetricField, field: DecayField<'_>, spec: &DecayMonitorSpec) -> Result<DecayProfile> {
    if !(spec.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("decay order σ = {} must be positive", spec.sigma)));
    }
    if spec.radii.is_empty() || spec.radii.windows(2).any(|w| w[1] <= w[0]) || spec.radii[0] < 0.0 {
        return Err(Error::InvalidParameter("radii must be nonnegative and strictly increasing".into()));
    }
    let dist = distance_from(grid, g, spec.center)?;
    let limit = (1.0 - BUFFER_FRACTION) * dist.reach;
    if let Some(&r) = spec.radii.iter().find(|r| **r > limit) {
        return Err(Error::RadiusBeyondBuffer { radius: r, limit });
    }
    let inv = g.inverse();
    let magnitude = |k: usize| match field {
        DecayField::Form(phi) => inv.norm2(k, phi.x[k], phi.y[k]).max(0.0).sqrt(),
        DecayField::Scalar(s) => s[k].abs(),
    };
    let mut values = vec![0.0f64; spec.radii.len()];
    for (k, d) in dist.d.iter().enumerate() {
        if *d < spec.radii[0] || *d > limit {
            continue;
        }
        let shell = spec.radii.partition_point(|r| r <= d) - 1;
        values[shell] = values[shell].max(d.powf(spec.sigma) * magnitude(k));
    }
    let peak = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best })
        .0;
    let decreasing_tail = values[peak..].windows(2).all(|w| w[1] <= w[0]);
    Ok(DecayProfile { radii: spec.radii.clone(), values, decreasing_tail, limit })
}
