/// Materials the phantom can render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Material {
    Air,
    Water,
    Bone,
    Iodine,
}

impl Material {
    pub fn name(&self) -> &'static str {
        match self {
            Material::Air => "air",
            Material::Water => "water",
            Material::Bone => "bone",
            Material::Iodine => "iodine",
        }
    }
}

impl std::str::FromStr for Material {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "air" => Ok(Material::Air),
            "water" => Ok(Material::Water),
            "bone" => Ok(Material::Bone),
            "iodine" => Ok(Material::Iodine),
            other => Err(format!("unknown material {other:?}")),
        }
    }
}

/// HU value per material at the 80 kV (low) and 140 kV (high) acquisitions.
///
/// Textbook-magnitude simulation parameters, not measurements: water sits at
/// 0 HU and air at -1000 HU regardless of energy, while iodine enhances much
/// more strongly at 80 kV than at 140 kV (k-edge effect) and bone somewhat.
/// Iodine values are given per 10 mg/mL and scale linearly with
/// concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTable {
    pub air: (f64, f64),
    pub water: (f64, f64),
    pub bone: (f64, f64),
    pub iodine_per_10mgml: (f64, f64),
}

impl Default for MaterialTable {
    fn default() -> Self {
        Self {
            air: (-1000.0, -1000.0),
            water: (0.0, 0.0),
            bone: (1000.0, 800.0),
            iodine_per_10mgml: (300.0, 120.0),
        }
    }
}

impl MaterialTable {
    /// (low kV, high kV) HU for a material; `concentration` is mg/mL and
    /// only scales iodine.
    pub fn hu(&self, material: Material, concentration: f64) -> (f64, f64) {
        match material {
            Material::Air => self.air,
            Material::Water => self.water,
            Material::Bone => self.bone,
            Material::Iodine => {
                let scale = concentration / 10.0;
                (
                    self.iodine_per_10mgml.0 * scale,
                    self.iodine_per_10mgml.1 * scale,
                )
            }
        }
    }
}
