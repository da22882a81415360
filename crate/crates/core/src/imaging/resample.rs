use super::{AffineTransform2D, ImageGrid, ImagingError};

/// Resample `src` onto an `out_width` x `out_height` grid.
///
/// Output pixel (u, v) takes the bilinear interpolation of `src` at `t(u, v)`
/// (pull semantics). Samples falling outside the source are clamped to the
/// nearest edge pixel, so no artificial background value ever enters the
/// interpolation. Output spacing is the source spacing scaled by the
/// transform's per-axis scale factors.
///
/// The identity transform with unchanged dimensions is a bit-exact no-op.
pub fn resample(
    src: &ImageGrid,
    t: &AffineTransform2D,
    out_width: usize,
    out_height: usize,
) -> Result<ImageGrid, ImagingError> {
    if out_width < 1 || out_height < 1 {
        return Err(ImagingError::EmptyDimensions {
            width: out_width,
            height: out_height,
        });
    }
    if t.determinant().abs() < 1e-12 {
        return Err(ImagingError::SingularTransform {
            det_abs: t.determinant().abs(),
        });
    }

    // Physical length of one output step along each output axis, measured in
    // the source frame.
    let sx = src.spacing_x();
    let sy = src.spacing_y();
    let out_sx = ((t.a * sx).powi(2) + (t.c * sy).powi(2)).sqrt();
    let out_sy = ((t.b * sx).powi(2) + (t.d * sy).powi(2)).sqrt();

    let mut pixels = Vec::with_capacity(out_width * out_height);
    for v in 0..out_height {
        for u in 0..out_width {
            let (x, y) = t.apply(u as f64, v as f64);
            pixels.push(sample_bilinear_clamped(src, x, y));
        }
    }
    ImageGrid::new(out_width, out_height, pixels, out_sx, out_sy)
}

/// Bilinear sample with clamp-to-edge semantics. Exact (no arithmetic) when
/// the sample point lands on a pixel center.
#[inline]
fn sample_bilinear_clamped(src: &ImageGrid, x: f64, y: f64) -> f64 {
    let w = src.width();
    let h = src.height();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);

    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0 as usize;
    let y0 = y0 as usize;

    if fx == 0.0 && fy == 0.0 {
        return src.get(x0, y0);
    }

    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);

    let v00 = src.get(x0, y0);
    let v01 = src.get(x1, y0);
    let v10 = src.get(x0, y1);
    let v11 = src.get(x1, y1);

    let value = (1.0 - fx) * (1.0 - fy) * v00
        + fx * (1.0 - fy) * v01
        + (1.0 - fx) * fy * v10
        + fx * fy * v11;

    // The weights sum to 1 up to rounding; pin the result to the convex hull
    // of the four corners so the interpolation invariant holds bit-for-bit.
    let lo = v00.min(v01).min(v10).min(v11);
    let hi = v00.max(v01).max(v10).max(v11);
    value.clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(w: usize, h: usize, px: Vec<f64>) -> ImageGrid {
        ImageGrid::new(w, h, px, 1.0, 1.0).unwrap()
    }

    #[test]
    fn identity_same_dims_is_bit_exact() {
        let src = grid(3, 2, vec![1.5, -2.0, 0.0, 7.25, 4.0, -0.0]);
        let out = resample(&src, &AffineTransform2D::identity(), 3, 2).unwrap();
        assert_eq!(out.pixels().len(), src.pixels().len());
        for (a, b) in out.pixels().iter().zip(src.pixels()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(out.spacing_x(), src.spacing_x());
        assert_eq!(out.spacing_y(), src.spacing_y());
    }

    #[test]
    fn center_of_2x2_averages_all_four() {
        // Output (0,0) sampled at source (0.5, 0.5); all four bilinear
        // weights are 0.25, so the value is (0+10+20+30)/4 = 15.
        let src = grid(2, 2, vec![0.0, 10.0, 20.0, 30.0]);
        let t = AffineTransform2D::translation(0.5, 0.5);
        let out = resample(&src, &t, 1, 1).unwrap();
        assert_eq!(out.pixels()[0], 15.0);
    }

    #[test]
    fn constant_image_survives_upscale_downscale() {
        let c = 7.25;
        let src = ImageGrid::constant(8, 8, c, 1.0, 1.0).unwrap();
        // 2x upscale: output -> source shrinks coordinates by half.
        let up = resample(&src, &AffineTransform2D::scale(0.5, 0.5).unwrap(), 16, 16).unwrap();
        assert!(up.pixels().iter().all(|&v| v == c));
        let down = resample(&up, &AffineTransform2D::scale(2.0, 2.0).unwrap(), 8, 8).unwrap();
        assert!(down.pixels().iter().all(|&v| v == c));
    }

    #[test]
    fn upscale_halves_output_spacing() {
        let src = ImageGrid::constant(4, 4, 1.0, 0.8, 0.6).unwrap();
        let up = resample(&src, &AffineTransform2D::scale(0.5, 0.5).unwrap(), 8, 8).unwrap();
        assert!((up.spacing_x() - 0.4).abs() < 1e-15);
        assert!((up.spacing_y() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn out_of_bounds_samples_clamp_to_edge() {
        let src = grid(2, 1, vec![5.0, 9.0]);
        // Shift far left: every sample lands before the first pixel.
        let t = AffineTransform2D::translation(-100.0, 0.0);
        let out = resample(&src, &t, 2, 1).unwrap();
        assert_eq!(out.pixels(), &[5.0, 5.0]);
    }

    #[test]
    fn singular_transform_rejected() {
        let src = grid(2, 2, vec![0.0; 4]);
        let t = AffineTransform2D {
            a: 1.0,
            b: 1.0,
            tx: 0.0,
            c: 1.0,
            d: 1.0,
            ty: 0.0,
        };
        assert!(matches!(
            resample(&src, &t, 2, 2),
            Err(ImagingError::SingularTransform { .. })
        ));
    }

    proptest! {
        // Bilinear interpolation with edge clamping is a convex combination:
        // the output never leaves [min(src), max(src)].
        #[test]
        fn output_stays_inside_source_hull(
            px in proptest::collection::vec(-1000.0f64..1000.0, 16),
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
            tx in -8.0f64..8.0,
            c in -2.0f64..2.0,
            d in -2.0f64..2.0,
            ty in -8.0f64..8.0,
        ) {
            prop_assume!((a * d - b * c).abs() >= 0.05);
            let src = grid(4, 4, px);
            let t = AffineTransform2D { a, b, tx, c, d, ty };
            let out = resample(&src, &t, 5, 5).unwrap();
            let (lo, hi) = (src.min(), src.max());
            for &v in out.pixels() {
                prop_assert!(v >= lo && v <= hi);
            }
        }

        #[test]
        fn identity_noop_for_arbitrary_images(
            px in proptest::collection::vec(-1e6f64..1e6, 12),
        ) {
            let src = grid(4, 3, px);
            let out = resample(&src, &AffineTransform2D::identity(), 4, 3).unwrap();
            prop_assert_eq!(src.pixels(), out.pixels());
        }
    }
}
