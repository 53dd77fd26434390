//! Independent reference computations: exact flat-torus heat solutions,
//! the closed-form cigar soliton and Richardson-extrapolated quadrature.
//!
//! Nothing here calls into the finite-difference stencils of
//! [`crate::geometry`]; oracles evaluate closed forms on node coordinates
//! with their own loops.

mod cigar;
mod quadrature;
mod spectral;

pub use cigar::{cigar_oracle, cigar_scalar_curvature, cigar_soliton_factor, CIGAR_SUPPORT_LEVEL};
pub use quadrature::{quadrature_oracle, QuadratureDomain};
pub use spectral::{flat_spectral_oracle, flat_spectral_form_oracle, TrigMode, TrigSeries};

/// A reference value together with its error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub label: String,
    pub value: T,
    pub method: &'static str,
    /// Strictly positive bound on |value − truth|.
    pub error_bound: f64,
}

impl OracleResult<f64> {
    /// Whether `x` lies within `value ± (error_bound + tol)`.
    pub fn admits(&self, x: f64, tol: f64) -> bool {
        (x - self.value).abs() <= self.error_bound + tol
    }
}
