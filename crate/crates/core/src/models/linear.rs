use super::ModelError;
use crate::imaging::{DualEnergySlice, ImageGrid, TrainingRow};
use crate::numeric::KahanSum;
use nalgebra::{DMatrix, DVector};

/// Per-pixel linear predictor: `w_low * low + w_high * high + intercept`.
///
/// A constrained-blend fit always satisfies `w_low + w_high = 1` and
/// `intercept = 0`; its single free parameter is the blend weight on the
/// high-energy image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPixelModel {
    pub w_low: f64,
    pub w_high: f64,
    pub intercept: f64,
}

impl LinearPixelModel {
    #[inline]
    pub fn evaluate(&self, low: f64, high: f64) -> f64 {
        self.w_low * low + self.w_high * high + self.intercept
    }

    /// Blend weight on the high image for a convex blend model.
    pub fn alpha(&self) -> f64 {
        self.w_high
    }

    pub fn is_finite(&self) -> bool {
        self.w_low.is_finite() && self.w_high.is_finite() && self.intercept.is_finite()
    }
}

/// Relative singular-value cutoff below which the design is reported as
/// rank deficient instead of silently regularized.
const RANK_EPS: f64 = 1e-10;

/// Ordinary least squares over the design `[low, high, 1]`, solved by SVD.
///
/// Rank-deficient designs are rejected with the deficient direction so the
/// caller can decide to fall back to the constrained blend.
pub fn fit_ols(rows: &[TrainingRow]) -> Result<LinearPixelModel, ModelError> {
    if rows.len() < 3 {
        return Err(ModelError::TooFewRows {
            needed: 3,
            got: rows.len(),
        });
    }

    let n = rows.len();
    let design = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => rows[r].low,
        1 => rows[r].high,
        _ => 1.0,
    });
    let targets = DVector::from_fn(n, |r, _| rows[r].target);

    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let (min_idx, min_sv) = svd
        .singular_values
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });

    if max_sv == 0.0 || min_sv < RANK_EPS * max_sv {
        let v_t = svd.v_t.as_ref().expect("svd computed with V");
        let dir = v_t.row(min_idx);
        return Err(ModelError::DegenerateFit {
            low: dir[0],
            high: dir[1],
            intercept: dir[2],
        });
    }

    let beta = svd
        .solve(&targets, max_sv * 1e-14)
        .expect("full-rank solve cannot fail");
    Ok(LinearPixelModel {
        w_low: beta[0],
        w_high: beta[1],
        intercept: beta[2],
    })
}

/// One-parameter least squares for the convex blend
/// `target = alpha * high + (1 - alpha) * low`:
/// the closed form is `alpha = sum((h-l)(t-l)) / sum((h-l)^2)`.
pub fn fit_constrained_blend(rows: &[TrainingRow]) -> Result<LinearPixelModel, ModelError> {
    if rows.is_empty() {
        return Err(ModelError::TooFewRows { needed: 1, got: 0 });
    }
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for row in rows {
        let spread = row.high - row.low;
        num.add(spread * (row.target - row.low));
        den.add(spread * spread);
    }
    if den.value() == 0.0 {
        return Err(ModelError::UnidentifiableAlpha);
    }
    let alpha = num.value() / den.value();
    Ok(LinearPixelModel {
        w_low: 1.0 - alpha,
        w_high: alpha,
        intercept: 0.0,
    })
}

/// Apply the model at every pixel of a slice.
pub fn predict_linear(model: &LinearPixelModel, slice: &DualEnergySlice) -> ImageGrid {
    slice
        .low()
        .zip_map(slice.high(), |l, h| model.evaluate(l, h))
        .expect("slice images share a shape by construction")
}
