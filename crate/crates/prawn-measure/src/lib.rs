//! Physical length measurement of prawns from per-instance masks and aligned
//! depth frames, plus the surrounding machinery a pond survey needs:
//!
//! - [`ingest`] — annotation (VIA polygon), depth raster, mask, and session
//!   manifest loading.
//! - [`skeleton`] — Zhang–Suen thinning and centreline extraction.
//! - [`ranging`] — de-projection into camera space, robust depth filtering,
//!   smoothing, and the length measurement with its validity gate.
//! - [`tracking`] — SORT (Kalman + IoU + Hungarian assignment) to follow an
//!   individual across frames and aggregate its length estimates.
//! - [`evaluation`] — COCO-style mAP/mAR scoring of externally produced
//!   detections against ground truth.
//! - [`analytics`] — per day-of-culture summaries, growth trendlines, length
//!   distributions, and a deterministic SVG/CSV report bundle.
//! - [`synth`] — synthetic scenes with exact ground truth; the oracle used by
//!   the test suites and handy for benchmarking configs.
//! - [`commands`] — the session-directory pipeline behind the `prawn-measure`
//!   binary.
//!
//! See the crate `examples/` directory for one runnable program per
//! capability.

// Validation uses the `!(x > 0.0)` form throughout: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod commands;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod ranging;
pub mod skeleton;
pub mod stats;
pub mod synth;
pub mod tracking;

pub use error::{Error, Result};
