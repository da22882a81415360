//! Image rasters and the geometric operations used to simulate (and undo)
//! a workstation's export-and-re-register step.

mod grid;
mod resample;
mod slice;
mod transform;

pub use grid::ImageGrid;
pub use resample::resample;
pub use slice::{flatten_pairs, DualEnergySlice, FeatureIndex, TrainingRow};
pub use transform::AffineTransform2D;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },

    #[error("pixel buffer holds {got} values but {width}x{height} needs {expected}")]
    PixelCountMismatch {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite pixel value at index {index}")]
    NonFinitePixel { index: usize },

    #[error("pixel spacing must be positive, got ({spacing_x}, {spacing_y})")]
    InvalidSpacing { spacing_x: f64, spacing_y: f64 },

    #[error("transform is singular: |det| = {det_abs:.3e} is below 1e-12")]
    SingularTransform { det_abs: f64 },

    #[error("non-finite transform coefficient")]
    NonFiniteTransform,

    #[error("shape mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    ShapeMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error(
        "dual-energy images disagree in geometry: \
         low {low_width}x{low_height} @ ({low_sx}, {low_sy}) mm, \
         high {high_width}x{high_height} @ ({high_sx}, {high_sy}) mm"
    )]
    SliceGeometryMismatch {
        low_width: usize,
        low_height: usize,
        low_sx: f64,
        low_sy: f64,
        high_width: usize,
        high_height: usize,
        high_sx: f64,
        high_sy: f64,
    },
}
