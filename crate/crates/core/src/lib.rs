//! Monte Carlo based tail exponent estimation for heavy-tailed data.
//!
//! The pipeline: draw alpha-stable series ([`stable`]), compute Hill
//! curves over a range of truncation counts ([`hill`]), average them over
//! many replications for a grid of true exponents ([`mcgrid`]), and pick
//! the grid exponent whose expected curve is closest in L1 to the
//! empirical one ([`estimator`]). [`experiments`] packages the finite
//! sample studies built from the same parts.

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod hill;
pub mod mcgrid;
pub mod report;
pub mod rng;
pub mod sample;
pub mod stable;

pub use error::{Error, Result};
pub use estimator::{estimate, estimate_with_ci, McEstimate};
pub use hill::{
    hill_curve, hill_estimate, tail_hill_curve, tail_transform, HillCurve, KGrid, TailMode,
};
pub use mcgrid::{load_grid, save_grid, simulate_grid, GridSpec, GridSurface};
pub use report::{StudyReport, Table};
pub use rng::RngStream;
pub use sample::Sample;
pub use stable::{StableParams, StableSampler};
