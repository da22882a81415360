use super::MetricError;
use crate::imaging::ImageGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic seeded subsample of (truth, prediction) pixel pairs,
/// without replacement, capped at `max_points`. When the image has no more
/// pixels than the cap, every pair is returned in index order.
pub fn scatter_pairs(
    truth: &ImageGrid,
    pred: &ImageGrid,
    max_points: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, MetricError> {
    if !truth.same_shape(pred) {
        return Err(MetricError::ShapeMismatch {
            left_width: truth.width(),
            left_height: truth.height(),
            right_width: pred.width(),
            right_height: pred.height(),
        });
    }
    let n = truth.len();
    let indices: Vec<usize> = if n <= max_points {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, n, max_points).into_vec();
        picked.sort_unstable();
        picked
    };
    Ok(indices
        .into_iter()
        .map(|i| (truth.pixels()[i], pred.pixels()[i]))
        .collect())
}
