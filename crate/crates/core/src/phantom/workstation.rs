use super::PhantomError;
use crate::imaging::{resample, AffineTransform2D, ImageGrid};

/// Result of simulating the workstation's export: the resampled image plus
/// the transform that produced it, so the attacker pipeline can register
/// with the inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkstationExport {
    pub image: ImageGrid,
    pub transform: AffineTransform2D,
}

/// Default export motion: uniform scale that fits the source into the
/// output frame plus a 1.2 degree rotation about the centers. Output-to-
/// source (pull) convention, directly usable with [`resample`].
pub fn workstation_transform(
    src_width: usize,
    src_height: usize,
    out_width: usize,
    out_height: usize,
    rotation_deg: f64,
) -> AffineTransform2D {
    let zoom = (out_width as f64 / src_width as f64).min(out_height as f64 / src_height as f64);
    let pivot_u = (out_width as f64 - 1.0) / 2.0;
    let pivot_v = (out_height as f64 - 1.0) / 2.0;
    let center_x = (src_width as f64 - 1.0) / 2.0;
    let center_y = (src_height as f64 - 1.0) / 2.0;
    AffineTransform2D::similarity(
        1.0 / zoom,
        rotation_deg.to_radians(),
        pivot_u,
        pivot_v,
        center_x,
        center_y,
    )
    .expect("zoomed similarity is never singular")
}

/// Simulate the workstation export-and-resample step. With `transform`
/// `None`, the default 1.2 degree similarity for the requested output size
/// is used; the transform actually applied is returned alongside the image.
pub fn export_workstation(
    image: &ImageGrid,
    transform: Option<AffineTransform2D>,
    out_width: usize,
    out_height: usize,
) -> Result<WorkstationExport, PhantomError> {
    let transform = transform.unwrap_or_else(|| {
        workstation_transform(image.width(), image.height(), out_width, out_height, 1.2)
    });
    let exported = resample(image, &transform, out_width, out_height)?;
    Ok(WorkstationExport {
        image: exported,
        transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ssim, SsimParams};

    fn smooth_image(w: usize, h: usize) -> ImageGrid {
        ImageGrid::from_fn(w, h, 1.0, 1.0, |x, y| {
            let fx = x as f64 / w as f64;
            let fy = y as f64 / h as f64;
            100.0 * ((2.0 * std::f64::consts::PI * fx).sin() + (3.0 * std::f64::consts::PI * fy).cos())
        })
        .unwrap()
    }

    #[test]
    fn identity_transform_same_dims_is_unchanged() {
        let img = smooth_image(64, 64);
        let out = export_workstation(&img, Some(AffineTransform2D::identity()), 64, 64).unwrap();
        assert_eq!(out.image.pixels(), img.pixels());
    }

    #[test]
    fn default_export_hits_requested_dimensions() {
        let img = smooth_image(512, 512);
        let out = export_workstation(&img, None, 1200, 1024).unwrap();
        assert_eq!(out.image.width(), 1200);
        assert_eq!(out.image.height(), 1024);
    }

    #[test]
    fn scale_round_trip_preserves_smooth_images() {
        // Export with a pure 2x zoom and resample back; smoothness bounds
        // the interpolation loss well above SSIM 0.99.
        let img = smooth_image(128, 128);
        let t = workstation_transform(128, 128, 256, 256, 0.0);
        let exported = export_workstation(&img, Some(t), 256, 256).unwrap();
        let back = resample(
            &exported.image,
            &exported.transform.invert().unwrap(),
            128,
            128,
        )
        .unwrap();
        let params = SsimParams::for_reference(&img).unwrap();
        let score = ssim(&img, &back, &params).unwrap();
        assert!(score > 0.99, "round-trip SSIM {score}");
    }

    #[test]
    fn rotated_round_trip_recovers_interior() {
        let img = smooth_image(128, 128);
        let exported = export_workstation(&img, None, 300, 256).unwrap();
        let back = resample(
            &exported.image,
            &exported.transform.invert().unwrap(),
            128,
            128,
        )
        .unwrap();
        let params = SsimParams::for_reference(&img).unwrap();
        let score = ssim(&img, &back, &params).unwrap();
        assert!(score > 0.95, "rotated round-trip SSIM {score}");
    }
}
