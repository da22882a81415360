//! The attack's learners: ordinary least squares, the constrained two-image
//! blend, and a reduced-error-pruning regression tree. All fits are pure
//! functions of their inputs and deterministic given the same parameters.

mod linear;
mod serialize;
mod tree;

pub use linear::{fit_constrained_blend, fit_ols, predict_linear, LinearPixelModel};
pub use serialize::{parse_model, write_model, SavedModel};
pub use tree::{
    fit_rep_tree, fit_rep_tree_detailed, predict_tree, split_folds, RegressionTree, RepTreeFit,
    RepTreeParams, TreeNode,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("need at least {needed} training rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error(
        "degenerate least-squares fit: design is rank deficient along \
         ({low:.6}, {high:.6}, {intercept:.6}) over (low, high, intercept)"
    )]
    DegenerateFit { low: f64, high: f64, intercept: f64 },

    #[error("blend weight is unidentifiable: every row has high == low")]
    UnidentifiableAlpha,

    #[error("invalid tree parameters: {detail}")]
    InvalidParams { detail: String },

    #[error("model text is malformed at line {line}: {detail}")]
    MalformedModel { line: usize, detail: String },

    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
}
