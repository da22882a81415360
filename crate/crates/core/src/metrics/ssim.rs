use super::MetricError;
use crate::imaging::ImageGrid;
use crate::numeric::KahanSum;

/// SSIM configuration. Defaults follow the original formulation: 11x11
/// Gaussian window with sigma 1.5, k1 = 0.01, k2 = 0.03. The dynamic range
/// is data-dependent and must be supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl SsimParams {
    pub fn new(dynamic_range: f64) -> Result<Self, MetricError> {
        Self::with_window(11, 1.5, 0.01, 0.03, dynamic_range)
    }

    pub fn with_window(
        window: usize,
        sigma: f64,
        k1: f64,
        k2: f64,
        dynamic_range: f64,
    ) -> Result<Self, MetricError> {
        let params = Self {
            window,
            sigma,
            k1,
            k2,
            dynamic_range,
        };
        params.validate()?;
        Ok(params)
    }

    /// Dynamic range taken from the spread of a reference image.
    pub fn for_reference(reference: &ImageGrid) -> Result<Self, MetricError> {
        let range = reference.max() - reference.min();
        if range <= 0.0 {
            return Err(MetricError::InvalidParams {
                detail: "reference image is constant; dynamic range would be 0".into(),
            });
        }
        Self::new(range)
    }

    fn validate(&self) -> Result<(), MetricError> {
        if self.window < 1 || self.window.is_multiple_of(2) {
            return Err(MetricError::InvalidParams {
                detail: format!("window must be odd and positive, got {}", self.window),
            });
        }
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(MetricError::InvalidParams {
                detail: format!("sigma must be positive, got {}", self.sigma),
            });
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(MetricError::InvalidParams {
                detail: format!("k1 and k2 must be positive, got {} and {}", self.k1, self.k2),
            });
        }
        if !(self.dynamic_range > 0.0 && self.dynamic_range.is_finite()) {
            return Err(MetricError::InvalidParams {
                detail: format!("dynamic range must be positive, got {}", self.dynamic_range),
            });
        }
        Ok(())
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product,
    /// so the full window also sums to 1.
    fn kernel(&self) -> Vec<f64> {
        let center = (self.window / 2) as f64;
        let mut taps: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - center;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= total;
        }
        taps
    }
}

/// Mean SSIM over all window positions fully inside both images (no
/// padding). Local statistics use the Gaussian-weighted means, variances and
/// covariance; the per-position index is
/// `((2*mu_a*mu_b + C1)(2*cov + C2)) / ((mu_a^2 + mu_b^2 + C1)(var_a + var_b + C2))`
/// with `C1 = (k1 L)^2`, `C2 = (k2 L)^2`.
pub fn ssim(a: &ImageGrid, b: &ImageGrid, params: &SsimParams) -> Result<f64, MetricError> {
    params.validate()?;
    if !a.same_shape(b) {
        return Err(MetricError::ShapeMismatch {
            left_width: a.width(),
            left_height: a.height(),
            right_width: b.width(),
            right_height: b.height(),
        });
    }
    if a.width() < params.window || a.height() < params.window {
        return Err(MetricError::ImageSmallerThanWindow {
            width: a.width(),
            height: a.height(),
            window: params.window,
        });
    }

    let kernel = params.kernel();
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);

    // Gaussian windows are separable: blur the five product maps with two
    // 1-D passes each instead of evaluating 2-D windows directly.
    let w = a.width();
    let h = a.height();
    let pa = a.pixels();
    let pb = b.pixels();
    let mut aa = vec![0.0; pa.len()];
    let mut bb = vec![0.0; pa.len()];
    let mut ab = vec![0.0; pa.len()];
    for i in 0..pa.len() {
        aa[i] = pa[i] * pa[i];
        bb[i] = pb[i] * pb[i];
        ab[i] = pa[i] * pb[i];
    }

    let mu_a = convolve_valid(pa, w, h, &kernel);
    let mu_b = convolve_valid(pb, w, h, &kernel);
    let mu_aa = convolve_valid(&aa, w, h, &kernel);
    let mu_bb = convolve_valid(&bb, w, h, &kernel);
    let mu_ab = convolve_valid(&ab, w, h, &kernel);

    let mut total = KahanSum::new();
    for i in 0..mu_a.len() {
        let ma = mu_a[i];
        let mb = mu_b[i];
        let var_a = mu_aa[i] - ma * ma;
        let var_b = mu_bb[i] - mb * mb;
        let cov = mu_ab[i] - ma * mb;
        let value = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        total.add(value);
    }
    Ok(total.value() / mu_a.len() as f64)
}

/// Separable valid-region convolution: horizontal pass then vertical pass.
/// Output is (w - k + 1) x (h - k + 1), row-major.
fn convolve_valid(pixels: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let out_w = w - k + 1;
    let out_h = h - k + 1;

    let mut horizontal = vec![0.0; out_w * h];
    for y in 0..h {
        let row = &pixels[y * w..(y + 1) * w];
        for x in 0..out_w {
            let mut acc = 0.0;
            for (j, &kv) in kernel.iter().enumerate() {
                acc += kv * row[x + j];
            }
            horizontal[y * out_w + x] = acc;
        }
    }

    let mut out = vec![0.0; out_w * out_h];
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (j, &kv) in kernel.iter().enumerate() {
                acc += kv * horizontal[(y + j) * out_w + x];
            }
            out[y * out_w + x] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Naive direct-formula oracle: evaluates every window position with an
    /// explicit double loop over the 2-D Gaussian window.
    pub(crate) fn ssim_naive(a: &ImageGrid, b: &ImageGrid, params: &SsimParams) -> f64 {
        let kernel = params.kernel();
        let k = params.window;
        let c1 = (params.k1 * params.dynamic_range).powi(2);
        let c2 = (params.k2 * params.dynamic_range).powi(2);
        let out_w = a.width() - k + 1;
        let out_h = a.height() - k + 1;

        let mut total = 0.0;
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut ma = 0.0;
                let mut mb = 0.0;
                let mut maa = 0.0;
                let mut mbb = 0.0;
                let mut mab = 0.0;
                for wy in 0..k {
                    for wx in 0..k {
                        let weight = kernel[wy] * kernel[wx];
                        let va = a.get(ox + wx, oy + wy);
                        let vb = b.get(ox + wx, oy + wy);
                        ma += weight * va;
                        mb += weight * vb;
                        maa += weight * va * va;
                        mbb += weight * vb * vb;
                        mab += weight * va * vb;
                    }
                }
                let var_a = maa - ma * ma;
                let var_b = mbb - mb * mb;
                let cov = mab - ma * mb;
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            }
        }
        total / (out_w * out_h) as f64
    }

    fn random_image(seed: u64, w: usize, h: usize, lo: f64, hi: f64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::from_fn(w, h, 1.0, 1.0, |_, _| rng.random_range(lo..hi)).unwrap()
    }

    #[test]
    fn identical_images_score_exactly_one() {
        let x = random_image(1, 16, 16, -50.0, 150.0);
        let p = SsimParams::new(200.0).unwrap();
        let s = ssim(&x, &x, &p).unwrap();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn full_range_offset_scores_below_one() {
        let x = random_image(2, 16, 16, 0.0, 100.0);
        let p = SsimParams::new(100.0).unwrap();
        let shifted = x.map(|v| v + 100.0).unwrap();
        let s = ssim(&x, &shifted, &p).unwrap();
        assert!(s < 1.0, "{s}");
    }

    #[test]
    fn gradient_with_flipped_pixel_matches_naive_oracle() {
        let grad = ImageGrid::from_fn(32, 32, 1.0, 1.0, |x, y| (x + 2 * y) as f64).unwrap();
        let mut px = grad.pixels().to_vec();
        px[17 * 32 + 11] = 0.0; // flip one pixel
        let flipped = ImageGrid::new(32, 32, px, 1.0, 1.0).unwrap();
        let p = SsimParams::for_reference(&grad).unwrap();
        let fast = ssim(&grad, &flipped, &p).unwrap();
        let naive = ssim_naive(&grad, &flipped, &p);
        assert!((fast - naive).abs() < 1e-10, "{fast} vs {naive}");
    }

    #[test]
    fn matches_naive_oracle_on_random_pairs() {
        for seed in 0..20u64 {
            let a = random_image(seed * 2 + 10, 16, 16, 0.0, 100.0);
            let b = random_image(seed * 2 + 11, 16, 16, 0.0, 100.0);
            let p = SsimParams::new(100.0).unwrap();
            let fast = ssim(&a, &b, &p).unwrap();
            let naive = ssim_naive(&a, &b, &p);
            assert!((fast - naive).abs() < 1e-10, "seed {seed}: {fast} vs {naive}");
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = random_image(33, 20, 14, -10.0, 10.0);
        let b = random_image(34, 20, 14, -10.0, 10.0);
        let p = SsimParams::new(20.0).unwrap();
        let ab = ssim(&a, &b, &p).unwrap();
        let ba = ssim(&b, &a, &p).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn never_exceeds_one() {
        for seed in 0..10u64 {
            let a = random_image(seed + 60, 13, 13, -5.0, 5.0);
            let b = random_image(seed + 80, 13, 13, -5.0, 5.0);
            let p = SsimParams::new(10.0).unwrap();
            assert!(ssim(&a, &b, &p).unwrap() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn image_smaller_than_window_is_rejected() {
        let a = random_image(5, 8, 8, 0.0, 1.0);
        let p = SsimParams::new(1.0).unwrap();
        let err = ssim(&a, &a, &p).unwrap_err();
        assert!(err.to_string().contains("smaller"), "{err}");
    }

    #[test]
    fn window_weights_sum_to_one() {
        let p = SsimParams::new(1.0).unwrap();
        let taps = p.kernel();
        let total: f64 = taps.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // 2-D outer product then also sums to ~1
        let full: f64 = taps.iter().flat_map(|a| taps.iter().map(move |b| a * b)).sum();
        assert!((full - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SsimParams::with_window(10, 1.5, 0.01, 0.03, 1.0).is_err());
        assert!(SsimParams::with_window(11, 0.0, 0.01, 0.03, 1.0).is_err());
        assert!(SsimParams::with_window(11, 1.5, 0.0, 0.03, 1.0).is_err());
        assert!(SsimParams::with_window(11, 1.5, 0.01, 0.03, 0.0).is_err());
    }
}
