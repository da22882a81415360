//! Fidelity evaluation: Pearson correlation, SSIM and scatter-pair export.

mod pearson;
mod scatter;
mod ssim;

pub use pearson::pearson_r;
pub use scatter::scatter_pairs;
pub use ssim::{ssim, SsimParams};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("images differ in shape: {left_width}x{left_height} vs {right_width}x{right_height}")]
    ShapeMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("need at least 2 pixels, got {got}")]
    TooFewPixels { got: usize },

    #[error("correlation is undefined: the {which} image is constant")]
    UndefinedCorrelation { which: &'static str },

    #[error(
        "image {width}x{height} is smaller than the {window}x{window} window; \
         use a smaller window"
    )]
    ImageSmallerThanWindow {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("invalid SSIM parameters: {detail}")]
    InvalidParams { detail: String },
}

/// One evaluation row: correlation and SSIM for a (model, slice) pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub r: f64,
    pub ssim: f64,
    pub n_pixels: usize,
    pub slice_label: String,
    pub model_label: String,
}

impl EvalReport {
    pub fn new(
        r: f64,
        ssim: f64,
        n_pixels: usize,
        slice_label: impl Into<String>,
        model_label: impl Into<String>,
    ) -> Result<Self, MetricError> {
        if !r.is_finite() || !ssim.is_finite() {
            return Err(MetricError::InvalidParams {
                detail: format!("non-finite metrics r={r} ssim={ssim}"),
            });
        }
        if n_pixels < 2 {
            return Err(MetricError::TooFewPixels { got: n_pixels });
        }
        Ok(Self {
            r,
            ssim,
            n_pixels,
            slice_label: slice_label.into(),
            model_label: model_label.into(),
        })
    }
}
