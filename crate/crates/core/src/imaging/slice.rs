use super::{ImageGrid, ImagingError};

/// Paired low/high-kVp acquisitions on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEnergySlice {
    low: ImageGrid,
    high: ImageGrid,
    label: String,
}

impl DualEnergySlice {
    pub fn new(low: ImageGrid, high: ImageGrid, label: impl Into<String>) -> Result<Self, ImagingError> {
        if !low.same_geometry(&high) {
            return Err(ImagingError::SliceGeometryMismatch {
                low_width: low.width(),
                low_height: low.height(),
                low_sx: low.spacing_x(),
                low_sy: low.spacing_y(),
                high_width: high.width(),
                high_height: high.height(),
                high_sx: high.spacing_x(),
                high_sy: high.spacing_y(),
            });
        }
        Ok(Self {
            low,
            high,
            label: label.into(),
        })
    }

    pub fn low(&self) -> &ImageGrid {
        &self.low
    }

    pub fn high(&self) -> &ImageGrid {
        &self.high
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn width(&self) -> usize {
        self.low.width()
    }

    pub fn height(&self) -> usize {
        self.low.height()
    }
}

/// One pixel-wise training correspondence: the two measured intensities and
/// the value the hidden algorithm produced there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRow {
    pub low: f64,
    pub high: f64,
    pub target: f64,
}

impl TrainingRow {
    #[inline]
    pub fn feature(&self, index: FeatureIndex) -> f64 {
        match index {
            FeatureIndex::Low => self.low,
            FeatureIndex::High => self.high,
        }
    }
}

/// The two pixel-wise features every model in this crate sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureIndex {
    Low,
    High,
}

impl FeatureIndex {
    pub const ALL: [FeatureIndex; 2] = [FeatureIndex::Low, FeatureIndex::High];

    pub fn name(self) -> &'static str {
        match self {
            FeatureIndex::Low => "low",
            FeatureIndex::High => "high",
        }
    }
}

impl std::fmt::Display for FeatureIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Flatten a slice and its per-pixel target into row-major training rows.
///
/// Row `k` carries `(low[k], high[k]) -> target[k]`; reconstructing the
/// target from the rows reproduces it exactly.
pub fn flatten_pairs(
    inputs: &DualEnergySlice,
    target: &ImageGrid,
) -> Result<Vec<TrainingRow>, ImagingError> {
    if !inputs.low().same_shape(target) {
        return Err(ImagingError::ShapeMismatch {
            left_width: inputs.width(),
            left_height: inputs.height(),
            right_width: target.width(),
            right_height: target.height(),
        });
    }
    Ok(inputs
        .low()
        .pixels()
        .iter()
        .zip(inputs.high().pixels())
        .zip(target.pixels())
        .map(|((&low, &high), &target)| TrainingRow { low, high, target })
        .collect())
}
