//! Workbench for reverse-engineering pixel-wise image-processing algorithms
//! from dual-energy CT data.
//!
//! The crate is organized around a synthetic "vendor" whose hidden blending
//! and material-decomposition algorithms are recovered by fitting pixel-wise
//! models to input/output image pairs:
//!
//! * [`imaging`] — image rasters, affine transforms, bilinear resampling and
//!   pixel-wise training-pair extraction.
//! * [`dicom`] — a minimal explicit-VR little-endian DICOM reader/writer that
//!   also surfaces private-tag payloads.
//! * [`models`] — the learners: ordinary least squares, the constrained
//!   two-image blend, and a reduced-error-pruning regression tree.
//! * [`metrics`] — Pearson correlation, SSIM and scatter-pair export.
//! * [`phantom`] — the synthetic scanner and hidden vendor oracle the other
//!   modules attack.

pub mod dicom;
pub mod imaging;
pub mod metrics;
pub mod models;
pub mod phantom;

pub(crate) mod numeric;

pub use imaging::{AffineTransform2D, DualEnergySlice, ImageGrid, TrainingRow};
