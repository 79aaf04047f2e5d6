//! Dense optical flow by TV-L1 split Bregman minimization, with a
//! fractional-order generalization of the regularizer.
//!
//! The estimator minimizes a relaxed energy coupling an L1 brightness
//! constancy term to the L1 norm of a (possibly fractional) derivative of
//! the flow. The order `alpha` in [0, 2] sweeps the regularizer from plain
//! magnitude penalties (alpha = 0) through total variation (alpha = 1) to
//! second-order smoothing (alpha = 2); discrete fractional derivatives use
//! Grünwald-Letnikov weights. Large displacements are handled by a
//! coarse-to-fine pyramid with iterative warping.
//!
//! Modules:
//! - [`image`]: loading, normalization, Gaussian smoothing, bicubic
//!   sampling/warping, gradients, downsampling.
//! - [`pyramid`]: pyramid construction and flow upsampling.
//! - [`fracops`]: Grünwald-Letnikov weights and the one-sided fractional
//!   derivative operators.
//! - [`solver`]: threshold step, split Bregman solves, the per-scale
//!   warping loop and the coarse-to-fine driver.
//! - [`metrics`]: angular/endpoint error aggregation over regions.
//! - [`flo`]: Middlebury `.flo` interchange.
//! - [`color`]: color-wheel flow rendering.
//! - [`synth`]: deterministic synthetic frame pairs with known ground truth.

pub mod color;
pub mod error;
pub mod flo;
pub mod fracops;
pub mod grid;
pub mod image;
pub mod metrics;
pub mod pyramid;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use metrics::{aggregate_metrics, FlowMetrics, RegionSpec};
pub use solver::{optical_flow, optical_flow_diag, FlowDiagnostics, SolverParams};
