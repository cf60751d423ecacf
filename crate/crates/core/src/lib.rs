//! Spatiotemporal reservoir resampling with Metropolis-Hastings mutations.
//!
//! The crate is organised bottom-up:
//!
//! - [`resampling`]: reservoirs, MIS weights, shift mappings and the temporal and
//!   spatial reservoir combination procedures. Domain agnostic.
//! - [`mcmc`]: primary-sample-space perturbations, the Metropolis-Hastings driver
//!   with the contribution-weight update, and the two mutation strategies
//!   (direct-lighting direction mutation and reconnection-vertex mutation).
//! - [`scene`]: a small analytic scene (spheres and quads), Lambertian and
//!   normalized Phong BRDFs, target functions for direct lighting and one-bounce
//!   paths, and the reconnection shift.
//! - [`render`]: the per-frame pipeline (initial, temporal, mutate, spatial, shade)
//!   and image I/O.
//! - [`metrics`]: sample covariance, box-averaged covariance, duplicate heatmaps, MSE.
//! - [`testbed`]: oracle-backed experiments on analytic 1D targets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod math;
pub mod mcmc;
pub mod metrics;
pub mod render;
pub mod resampling;
pub mod rng;
pub mod scene;
pub mod testbed;

pub use error::{Error, Result};
pub use math::Vec3;
pub use mcmc::{MutationConfig, MutationStats, MutationStrategy, PssVector};
pub use metrics::{CovarianceReport, ImageEnsemble};
pub use render::{FrameOutput, FrameState, Image, RenderConfig, RenderMode, Renderer, SpatialConfig};
pub use resampling::{Reservoir, ShiftResult};
pub use scene::{Scene, ShadingContext};
