use super::materials::{Material, MaterialTable};
use super::PhantomError;
use crate::imaging::{DualEnergySlice, ImageGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Anatomy-like slice variants. Training uses the brain slice; skull and
/// lung exist so generalization is tested on genuinely different layouts
/// built from the same material palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhantomVariant {
    Brain,
    Skull,
    Lung,
}

impl PhantomVariant {
    pub const ALL: [PhantomVariant; 3] = [
        PhantomVariant::Brain,
        PhantomVariant::Skull,
        PhantomVariant::Lung,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PhantomVariant::Brain => "brain",
            PhantomVariant::Skull => "skull",
            PhantomVariant::Lung => "lung",
        }
    }
}

impl std::str::FromStr for PhantomVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "brain" => Ok(PhantomVariant::Brain),
            "skull" => Ok(PhantomVariant::Skull),
            "lung" => Ok(PhantomVariant::Lung),
            other => Err(format!("unknown variant {other:?} (expected brain, skull or lung)")),
        }
    }
}

impl std::fmt::Display for PhantomVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One elliptical region painted onto the slice, later inserts over earlier
/// ones. Center and radii are in pixels; `concentration` is mg/mL and only
/// meaningful for iodine.
#[derive(Debug, Clone, PartialEq)]
pub struct Insert {
    pub center_x: f64,
    pub center_y: f64,
    pub radius_x: f64,
    pub radius_y: f64,
    pub material: Material,
    pub concentration: f64,
}

/// Full description of one synthetic acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub spacing_x: f64,
    pub spacing_y: f64,
    /// Gaussian noise added independently per energy, in HU.
    pub noise_sigma_hu: f64,
    pub inserts: Vec<Insert>,
    pub materials: MaterialTable,
    pub variant: PhantomVariant,
    pub seed: u64,
}

impl PhantomSpec {
    /// Default 512x512 layout for a variant. The first insert is the body
    /// ellipse; everything else is painted over it.
    pub fn for_variant(variant: PhantomVariant, seed: u64) -> Self {
        Self::for_variant_sized(variant, 512, 512, seed)
    }

    pub fn for_variant_sized(
        variant: PhantomVariant,
        width: usize,
        height: usize,
        seed: u64,
    ) -> Self {
        let w = width as f64;
        let h = height as f64;
        let e = |cx: f64, cy: f64, rx: f64, ry: f64, material: Material, conc: f64| Insert {
            center_x: cx * w,
            center_y: cy * h,
            radius_x: rx * w,
            radius_y: ry * h,
            material,
            concentration: conc,
        };

        use Material::*;
        let inserts = match variant {
            PhantomVariant::Brain => vec![
                e(0.50, 0.50, 0.40, 0.44, Water, 0.0),
                e(0.50, 0.50, 0.38, 0.42, Bone, 0.0),
                e(0.50, 0.50, 0.34, 0.38, Water, 0.0),
                e(0.35, 0.35, 0.060, 0.050, Iodine, 3.0),
                e(0.64, 0.38, 0.050, 0.070, Iodine, 6.0),
                e(0.42, 0.62, 0.070, 0.060, Iodine, 9.0),
                e(0.60, 0.64, 0.050, 0.050, Iodine, 12.0),
                e(0.50, 0.47, 0.045, 0.055, Iodine, 15.0),
                e(0.30, 0.50, 0.030, 0.030, Iodine, 20.0),
                e(0.44, 0.52, 0.020, 0.020, Bone, 0.0),
                e(0.56, 0.30, 0.030, 0.025, Air, 0.0),
            ],
            PhantomVariant::Skull => vec![
                e(0.50, 0.52, 0.42, 0.42, Water, 0.0),
                e(0.50, 0.52, 0.40, 0.40, Bone, 0.0),
                e(0.50, 0.52, 0.30, 0.30, Water, 0.0),
                e(0.36, 0.60, 0.060, 0.035, Bone, 0.0),
                e(0.64, 0.60, 0.060, 0.035, Bone, 0.0),
                e(0.50, 0.40, 0.050, 0.040, Iodine, 6.0),
                e(0.40, 0.45, 0.040, 0.050, Iodine, 12.0),
                e(0.58, 0.52, 0.035, 0.035, Iodine, 15.0),
                e(0.50, 0.62, 0.050, 0.030, Iodine, 3.0),
                e(0.62, 0.42, 0.030, 0.030, Iodine, 20.0),
                e(0.34, 0.52, 0.025, 0.030, Air, 0.0),
                e(0.66, 0.52, 0.025, 0.030, Air, 0.0),
            ],
            PhantomVariant::Lung => vec![
                e(0.50, 0.52, 0.44, 0.40, Water, 0.0),
                e(0.32, 0.50, 0.160, 0.280, Air, 0.0),
                e(0.68, 0.50, 0.160, 0.280, Air, 0.0),
                e(0.50, 0.50, 0.050, 0.060, Iodine, 9.0),
                e(0.50, 0.35, 0.030, 0.030, Iodine, 15.0),
                e(0.32, 0.45, 0.025, 0.040, Iodine, 6.0),
                e(0.68, 0.56, 0.025, 0.035, Iodine, 12.0),
                e(0.40, 0.68, 0.030, 0.025, Iodine, 3.0),
                e(0.58, 0.64, 0.025, 0.025, Iodine, 20.0),
                e(0.50, 0.80, 0.050, 0.045, Bone, 0.0),
            ],
        };

        Self {
            width,
            height,
            spacing_x: 0.5,
            spacing_y: 0.5,
            noise_sigma_hu: 5.0,
            inserts,
            materials: MaterialTable::default(),
            variant,
            seed,
        }
    }

    pub fn with_noise(mut self, sigma_hu: f64) -> Self {
        self.noise_sigma_hu = sigma_hu;
        self
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        if self.width < 1 || self.height < 1 {
            return Err(PhantomError::InvalidSpec {
                detail: format!("dimensions {}x{}", self.width, self.height),
            });
        }
        if self.noise_sigma_hu.is_nan() || self.noise_sigma_hu < 0.0 {
            return Err(PhantomError::InvalidSpec {
                detail: format!("noise sigma {}", self.noise_sigma_hu),
            });
        }
        for (index, insert) in self.inserts.iter().enumerate() {
            if insert.concentration < 0.0 {
                return Err(PhantomError::InvalidSpec {
                    detail: format!("insert {index} has negative concentration"),
                });
            }
            if insert.radius_x <= 0.0 || insert.radius_y <= 0.0 {
                return Err(PhantomError::InvalidSpec {
                    detail: format!("insert {index} has non-positive radius"),
                });
            }
            let inside = insert.center_x - insert.radius_x >= 0.0
                && insert.center_x + insert.radius_x <= (self.width - 1) as f64
                && insert.center_y - insert.radius_y >= 0.0
                && insert.center_y + insert.radius_y <= (self.height - 1) as f64;
            if !inside {
                return Err(PhantomError::InsertOutOfBounds {
                    index,
                    material: insert.material,
                    width: self.width,
                    height: self.height,
                });
            }
        }
        Ok(())
    }
}

/// Render a dual-energy slice: air background, inserts painted in order at
/// both energies, then seeded Gaussian noise added independently per energy.
/// Bit-identical for identical (spec, seed).
pub fn generate_slice(spec: &PhantomSpec) -> Result<DualEnergySlice, PhantomError> {
    spec.validate()?;

    let (air_low, air_high) = spec.materials.hu(Material::Air, 0.0);
    let n = spec.width * spec.height;
    let mut low = vec![air_low; n];
    let mut high = vec![air_high; n];

    for insert in &spec.inserts {
        let (hu_low, hu_high) = spec.materials.hu(insert.material, insert.concentration);
        paint_ellipse(&mut low, &mut high, spec.width, insert, hu_low, hu_high);
    }

    if spec.noise_sigma_hu > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma_hu).expect("sigma validated above");
        // Separate streams per energy keep the two noise fields independent
        // while staying reproducible from the one seed.
        let mut rng_low = ChaCha8Rng::seed_from_u64(spec.seed);
        rng_low.set_stream(1);
        let mut rng_high = ChaCha8Rng::seed_from_u64(spec.seed);
        rng_high.set_stream(2);
        for v in &mut low {
            *v += normal.sample(&mut rng_low);
        }
        for v in &mut high {
            *v += normal.sample(&mut rng_high);
        }
    }

    let low = ImageGrid::new(spec.width, spec.height, low, spec.spacing_x, spec.spacing_y)?;
    let high = ImageGrid::new(spec.width, spec.height, high, spec.spacing_x, spec.spacing_y)?;
    Ok(DualEnergySlice::new(low, high, spec.variant.name())?)
}

fn paint_ellipse(
    low: &mut [f64],
    high: &mut [f64],
    width: usize,
    insert: &Insert,
    hu_low: f64,
    hu_high: f64,
) {
    let x_min = (insert.center_x - insert.radius_x).floor().max(0.0) as usize;
    let x_max = (insert.center_x + insert.radius_x).ceil() as usize;
    let y_min = (insert.center_y - insert.radius_y).floor().max(0.0) as usize;
    let y_max = (insert.center_y + insert.radius_y).ceil() as usize;
    let height = low.len() / width;

    for y in y_min..=y_max.min(height - 1) {
        let dy = (y as f64 - insert.center_y) / insert.radius_y;
        for x in x_min..=x_max.min(width - 1) {
            let dx = (x as f64 - insert.center_x) / insert.radius_x;
            if dx * dx + dy * dy <= 1.0 {
                low[y * width + x] = hu_low;
                high[y * width + x] = hu_high;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn water_only_phantom_has_equal_energies_without_noise() {
        let mut spec = PhantomSpec::for_variant(PhantomVariant::Brain, 1).with_noise(0.0);
        spec.inserts = vec![Insert {
            center_x: 256.0,
            center_y: 256.0,
            radius_x: 200.0,
            radius_y: 220.0,
            material: Material::Water,
            concentration: 0.0,
        }];
        let slice = generate_slice(&spec).unwrap();
        // Water and air match at both energies, so the images are identical.
        assert_eq!(slice.low().pixels(), slice.high().pixels());
    }

    #[test]
    fn iodine_insert_is_brighter_at_low_kv() {
        let mut spec = PhantomSpec::for_variant(PhantomVariant::Brain, 1).with_noise(0.0);
        spec.inserts.push(Insert {
            center_x: 256.0,
            center_y: 256.0,
            radius_x: 30.0,
            radius_y: 30.0,
            material: Material::Iodine,
            concentration: 10.0,
        });
        let slice = generate_slice(&spec).unwrap();
        let center = slice.low().get(256, 256);
        let center_high = slice.high().get(256, 256);
        assert!(center > center_high, "{center} vs {center_high}");
        assert_eq!(center, 300.0);
        assert_eq!(center_high, 120.0);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = PhantomSpec::for_variant(PhantomVariant::Lung, 99);
        let a = generate_slice(&spec).unwrap();
        let b = generate_slice(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate_slice(&PhantomSpec::for_variant(PhantomVariant::Lung, 100)).unwrap();
        assert_ne!(a.low().pixels(), c.low().pixels());
    }

    #[test]
    fn low_and_high_noise_fields_differ() {
        let spec = PhantomSpec::for_variant(PhantomVariant::Brain, 5);
        let slice = generate_slice(&spec).unwrap();
        // noiseless variant for reference
        let clean = generate_slice(&spec.clone().with_noise(0.0)).unwrap();
        let noise_low: Vec<f64> = slice
            .low()
            .pixels()
            .iter()
            .zip(clean.low().pixels())
            .map(|(a, b)| a - b)
            .collect();
        let noise_high: Vec<f64> = slice
            .high()
            .pixels()
            .iter()
            .zip(clean.high().pixels())
            .map(|(a, b)| a - b)
            .collect();
        assert_ne!(noise_low, noise_high);
        let var: f64 = noise_low.iter().map(|v| v * v).sum::<f64>() / noise_low.len() as f64;
        assert!((var.sqrt() - 5.0).abs() < 0.1, "noise sigma came out {}", var.sqrt());
    }

    #[test]
    fn out_of_bounds_insert_is_rejected() {
        let mut spec = PhantomSpec::for_variant(PhantomVariant::Brain, 1);
        spec.inserts.push(Insert {
            center_x: 500.0,
            center_y: 256.0,
            radius_x: 30.0,
            radius_y: 30.0,
            material: Material::Bone,
            concentration: 0.0,
        });
        assert!(matches!(
            generate_slice(&spec),
            Err(PhantomError::InsertOutOfBounds { .. })
        ));
    }

    #[test]
    fn variants_have_distinct_layouts() {
        let brain = generate_slice(&PhantomSpec::for_variant(PhantomVariant::Brain, 1).with_noise(0.0)).unwrap();
        let skull = generate_slice(&PhantomSpec::for_variant(PhantomVariant::Skull, 1).with_noise(0.0)).unwrap();
        let lung = generate_slice(&PhantomSpec::for_variant(PhantomVariant::Lung, 1).with_noise(0.0)).unwrap();
        assert_ne!(brain.low().pixels(), skull.low().pixels());
        assert_ne!(skull.low().pixels(), lung.low().pixels());
        assert_eq!(brain.label(), "brain");
        assert_eq!(lung.label(), "lung");
    }
}
