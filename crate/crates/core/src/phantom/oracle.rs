use super::PhantomError;
use crate::imaging::{DualEnergySlice, ImageGrid};

/// The hidden workstation algorithms under attack.
///
/// Virtual mono-energetic images blend the two acquisitions with an
/// energy-dependent weight `alpha(E) = (E - 40) / 100` on the high-kV image,
/// so 40 keV reproduces the low-kV image and 140 keV the high-kV one. The
/// iodine map is a clamped quadratic in the spectral contrast
/// `delta = low - high`.
#[derive(Debug, Clone, PartialEq)]
pub struct VendorOracle {
    pub iodine_c1: f64,
    pub iodine_c2: f64,
}

impl Default for VendorOracle {
    fn default() -> Self {
        Self {
            iodine_c1: 0.8,
            iodine_c2: 0.002,
        }
    }
}

impl VendorOracle {
    pub const KEV_MIN: f64 = 40.0;
    pub const KEV_MAX: f64 = 140.0;

    /// Blend weight on the high-energy image for a virtual energy in keV.
    pub fn alpha(&self, kev: f64) -> Result<f64, PhantomError> {
        if !(Self::KEV_MIN..=Self::KEV_MAX).contains(&kev) {
            return Err(PhantomError::KevOutOfRange { kev });
        }
        Ok((kev - 40.0) / 100.0)
    }

    /// Per-pixel `alpha * high + (1 - alpha) * low`.
    pub fn monoenergetic(
        &self,
        slice: &DualEnergySlice,
        kev: f64,
    ) -> Result<ImageGrid, PhantomError> {
        let alpha = self.alpha(kev)?;
        let one_minus = 1.0 - alpha;
        Ok(slice
            .low()
            .zip_map(slice.high(), |l, h| alpha * h + one_minus * l)?)
    }

    /// Per-pixel `max(0, c1*delta + c2*delta^2)` with `delta = low - high`:
    /// smooth, non-linear, zero wherever the two energies agree.
    pub fn iodine_map(&self, slice: &DualEnergySlice) -> ImageGrid {
        slice
            .low()
            .zip_map(slice.high(), |l, h| {
                let delta = l - h;
                (self.iodine_c1 * delta + self.iodine_c2 * delta * delta).max(0.0)
            })
            .expect("slice images share a shape by construction")
    }
}

/// [`VendorOracle::monoenergetic`] with the default oracle constants.
pub fn vendor_monoenergetic(slice: &DualEnergySlice, kev: f64) -> Result<ImageGrid, PhantomError> {
    VendorOracle::default().monoenergetic(slice, kev)
}

/// [`VendorOracle::iodine_map`] with the default oracle constants.
pub fn vendor_iodine_map(slice: &DualEnergySlice) -> ImageGrid {
    VendorOracle::default().iodine_map(slice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{ImageGrid, TrainingRow};
    use crate::models::{fit_constrained_blend, fit_ols};
    use crate::phantom::{generate_slice, PhantomSpec, PhantomVariant};

    fn slice_from(low: Vec<f64>, high: Vec<f64>) -> DualEnergySlice {
        let n = low.len();
        DualEnergySlice::new(
            ImageGrid::new(n, 1, low, 1.0, 1.0).unwrap(),
            ImageGrid::new(n, 1, high, 1.0, 1.0).unwrap(),
            "t",
        )
        .unwrap()
    }

    #[test]
    fn alpha_ramp_endpoints_and_monotonicity() {
        let oracle = VendorOracle::default();
        assert_eq!(oracle.alpha(40.0).unwrap(), 0.0);
        assert_eq!(oracle.alpha(140.0).unwrap(), 1.0);
        assert_eq!(oracle.alpha(90.0).unwrap(), 0.5);
        let mut last = -1.0;
        for kev in (40..=140).step_by(10) {
            let a = oracle.alpha(kev as f64).unwrap();
            assert!(a > last);
            last = a;
        }
        assert!(oracle.alpha(39.9).is_err());
        assert!(oracle.alpha(140.1).is_err());
    }

    #[test]
    fn forty_kev_is_exactly_the_low_image() {
        let s = slice_from(vec![100.0, -50.0, 3.25], vec![60.0, -80.0, 1.5]);
        let out = vendor_monoenergetic(&s, 40.0).unwrap();
        assert_eq!(out.pixels(), s.low().pixels());
    }

    #[test]
    fn one_forty_kev_is_exactly_the_high_image() {
        let s = slice_from(vec![100.0, -50.0, 3.25], vec![60.0, -80.0, 1.5]);
        let out = vendor_monoenergetic(&s, 140.0).unwrap();
        assert_eq!(out.pixels(), s.high().pixels());
    }

    #[test]
    fn ninety_kev_blends_half_and_half() {
        let s = slice_from(vec![100.0], vec![60.0]);
        let out = vendor_monoenergetic(&s, 90.0).unwrap();
        assert_eq!(out.pixels(), &[80.0]);
    }

    #[test]
    fn output_decreases_with_energy_when_high_below_low() {
        let s = slice_from(vec![100.0], vec![20.0]);
        let mut last = f64::INFINITY;
        for kev in [40.0, 60.0, 80.0, 100.0, 120.0, 140.0] {
            let v = vendor_monoenergetic(&s, kev).unwrap().pixels()[0];
            assert!(v < last, "{v} at {kev} keV not below {last}");
            last = v;
        }
    }

    #[test]
    fn iodine_map_matches_hand_evaluation() {
        // delta 0 -> 0; delta 100 -> 0.8*100 + 0.002*10000 = 100;
        // delta -50 -> 0.8*(-50) + 0.002*2500 = -35, clamped to 0.
        let s = slice_from(vec![0.0, 160.0, 10.0], vec![0.0, 60.0, 60.0]);
        let map = vendor_iodine_map(&s);
        assert_eq!(map.pixels(), &[0.0, 100.0, 0.0]);
    }

    #[test]
    fn blend_fit_recovers_every_ramp_alpha_on_noiseless_slices() {
        // The mono-energetic oracle is exactly affine in (low, high) with
        // weights summing to 1, so the constrained fit recovers alpha.
        let spec = PhantomSpec::for_variant(PhantomVariant::Brain, 7).with_noise(0.0);
        let slice = generate_slice(&spec).unwrap();
        let oracle = VendorOracle::default();
        for kev in [40.0, 60.0, 80.0, 100.0, 120.0, 140.0] {
            let target = oracle.monoenergetic(&slice, kev).unwrap();
            let rows = crate::imaging::flatten_pairs(&slice, &target).unwrap();
            let model = fit_constrained_blend(&rows).unwrap();
            let expected = oracle.alpha(kev).unwrap();
            assert!(
                (model.alpha() - expected).abs() <= 1e-9,
                "kev {kev}: {} vs {expected}",
                model.alpha()
            );
        }
    }

    #[test]
    fn iodine_map_is_not_linearly_representable() {
        // On a slice whose spectral contrast spans [0, 200], the best linear
        // model keeps a strictly positive residual. The base intensity
        // wobbles so the two features are not collinear.
        let mut low = Vec::new();
        let mut high = Vec::new();
        for i in 0..=200 {
            let base = (i % 7) as f64 * 30.0;
            low.push(base + i as f64); // delta climbs 0..200
            high.push(base);
        }
        let s = slice_from(low, high);
        let map = vendor_iodine_map(&s);
        let rows: Vec<TrainingRow> = crate::imaging::flatten_pairs(&s, &map).unwrap();
        let model = fit_ols(&rows).unwrap();
        let sse: f64 = rows
            .iter()
            .map(|r| (r.target - model.evaluate(r.low, r.high)).powi(2))
            .sum();
        assert!(sse > 1.0, "linear fit residual unexpectedly small: {sse}");
    }
}
