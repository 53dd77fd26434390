//! Numerical laboratory for Ricci flow on 2-D model geometries coupled to
//! heat flows of scalar fields and 1-forms.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] – structured grids, metrics, curvature and the operator
//!   stack (d, δ, rough and Hodge Laplacians).
//! * [`flows`] – explicit Runge–Kutta integration of the coupled system.
//! * [`functionals`] – norms, loop pairings, lengths and the monotonicity
//!   reports evaluated on trajectories.
//! * [`blowup`] – parabolic rescaling and decay-at-infinity profiles.
//! * [`oracles`] – closed-form and spectral reference solutions used by tests.
//! * [`scenario`] – scenario files, output writers and run directories.
//! * [`verify`] – the acceptance suites, shared by the CLI and the test target.
//!
//! Node loops run on rayon when the `parallel` feature is enabled (default).
//! Every reduction combines per-row partial results in row order, so the
//! numbers are bit-identical with or without the feature.

pub mod blowup;
pub mod error;
pub mod flows;
pub mod functionals;
pub mod geometry;
pub mod oracles;
pub mod par;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Axis, CurvatureData, Grid2D, MetricField, OneFormField, ScalarField, Topology};
