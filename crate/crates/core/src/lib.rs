//! Vector-level feedforward laser power scheduling for laser powder bed fusion.
//!
//! A coarse explicit finite-difference thermal model predicts the subsurface
//! temperature under every scan vector just before it is scanned. A reduced
//! Rosenthal melt-pool model turns that temperature into a predicted melt-pool
//! area, and a one-dimensional solve picks the laser power that holds the area
//! at a target. The chosen power is then fed back into the thermal model before
//! the next vector is considered.
//!
//! Module map:
//!
//! - [`scanpath`]: scan path ingestion, voxel grid, vector subdivision, traversal.
//! - [`thermal`]: material data, state-space conduction model, Goldak source,
//!   subsurface temperature extraction, explicit layer window.
//! - [`meltpool`]: width/length/area model and least-squares calibration.
//! - [`controller`]: power solve and the feedforward loop.
//! - [`dwell`]: analytical interlayer dwell (1D series in Z, Gaussian blur in XY).
//! - [`calibration`]: tuning-factor and area-target calibration harness.
//!
//! All quantities are SI internally (m, s, K, W). File formats use mm and are
//! converted on load.

// Validation is written as `!(x > 0.0)` so that NaN fails it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod controller;
pub mod dwell;
pub mod error;
pub mod meltpool;
pub mod scanpath;
pub mod thermal;
pub mod units;

pub use error::{Error, Result};
