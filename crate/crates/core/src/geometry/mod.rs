//! Metrics on structured 2-D grids and the differential-geometric operators
//! acting on them.

pub mod curvature;
pub mod forms;
pub mod grid;
pub mod metric;
pub mod stencil;

pub use curvature::{christoffel, curvature, reduced_scalar_curvature, Christoffel, CurvatureData};
pub use forms::{
    closedness_residual, codifferential, covariant_derivative, covariant_gradient_norm2,
    exterior_derivative, hodge_laplacian, laplace_beltrami, rough_laplacian, volume_element,
    ExteriorDerivative, HodgeMethod, OneFormField, ScalarField, ScalarRole,
};
pub use grid::{Axis, Grid2D, Topology};
pub use metric::{InverseMetric, MetricField, Parameterization, DET_FLOOR};
