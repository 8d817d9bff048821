//! Closed-form core of a dual-modality (glyph image + writing trajectory)
//! calligraphy font generator.
//!
//! - [`format6`]: six-field key-point trajectories with a connected-stroke label.
//! - [`rasterizer`]: unsigned distance fields, sigmoid rendering, and the loose
//!   rasterization loss with analytic gradients.
//! - [`gmm`]: bivariate Gaussian mixture head and control-label loss.
//! - [`ifr`]: image feature recombination attention.
//! - [`reprlearn`]: distillation/restoration, InfoNCE, reconstruction and
//!   metric-learning losses.
//! - [`losses`]: image losses and the weighted objective.
//! - [`annotate`]: pseudo connected-stroke labelling.
//! - [`metrics`]: MAE and DTW.
//! - [`gradcheck`]: finite-difference verification of every analytic gradient.
//!
//! See the crate's `examples/` directory for one runnable program per capability.

pub mod annotate;
pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod format6;
pub mod gmm;
pub mod gradcheck;
pub mod ifr;
pub mod image;
pub mod losses;
pub mod metrics;
pub mod rasterizer;
pub mod reprlearn;
pub mod rng;
pub mod textmat;

pub use error::{Error, Result};
pub use format6::{Control, Point6, Segment, Trajectory};
pub use image::GlyphImage;
pub use rasterizer::{DistanceField, Grid, Rasterizer, RenderParams};
