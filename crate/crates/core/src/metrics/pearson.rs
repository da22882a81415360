use super::MetricError;
use crate::imaging::ImageGrid;
use crate::numeric::KahanSum;

/// Sample Pearson correlation over all pixels, two-pass (means first, then
/// centered products) with compensated sums.
///
/// A constant image makes the correlation undefined and is reported as an
/// error rather than silently mapped to zero.
pub fn pearson_r(a: &ImageGrid, b: &ImageGrid) -> Result<f64, MetricError> {
    if !a.same_shape(b) {
        return Err(MetricError::ShapeMismatch {
            left_width: a.width(),
            left_height: a.height(),
            right_width: b.width(),
            right_height: b.height(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(MetricError::TooFewPixels { got: n });
    }

    let mean_a = crate::numeric::ksum(a.pixels().iter().copied()) / n as f64;
    let mean_b = crate::numeric::ksum(b.pixels().iter().copied()) / n as f64;

    let mut cov = KahanSum::new();
    let mut var_a = KahanSum::new();
    let mut var_b = KahanSum::new();
    for (&x, &y) in a.pixels().iter().zip(b.pixels()) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov.add(dx * dy);
        var_a.add(dx * dx);
        var_b.add(dy * dy);
    }

    if var_a.value() == 0.0 {
        return Err(MetricError::UndefinedCorrelation { which: "first" });
    }
    if var_b.value() == 0.0 {
        return Err(MetricError::UndefinedCorrelation { which: "second" });
    }
    Ok(cov.value() / (var_a.value().sqrt() * var_b.value().sqrt()))
}
