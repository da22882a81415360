use super::ImagingError;

/// 2-D real-valued pixel raster with physical spacing metadata.
///
/// Pixels are stored row-major; values are HU for CT images and mg/mL for
/// material maps. The buffer is validated on construction and immutable
/// afterwards, so grids are cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    spacing_x: f64,
    spacing_y: f64,
}

impl ImageGrid {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        spacing_x: f64,
        spacing_y: f64,
    ) -> Result<Self, ImagingError> {
        if width < 1 || height < 1 {
            return Err(ImagingError::EmptyDimensions { width, height });
        }
        let expected = width
            .checked_mul(height)
            .ok_or(ImagingError::EmptyDimensions { width, height })?;
        if pixels.len() != expected {
            return Err(ImagingError::PixelCountMismatch {
                width,
                height,
                expected,
                got: pixels.len(),
            });
        }
        if let Some(index) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(ImagingError::NonFinitePixel { index });
        }
        if !(spacing_x > 0.0 && spacing_y > 0.0)
            || !spacing_x.is_finite()
            || !spacing_y.is_finite()
        {
            return Err(ImagingError::InvalidSpacing {
                spacing_x,
                spacing_y,
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
            spacing_x,
            spacing_y,
        })
    }

    /// Grid filled with a single value.
    pub fn constant(
        width: usize,
        height: usize,
        value: f64,
        spacing_x: f64,
        spacing_y: f64,
    ) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![value; width * height], spacing_x, spacing_y)
    }

    /// Build a grid by evaluating `f(x, y)` at every pixel, row-major.
    pub fn from_fn(
        width: usize,
        height: usize,
        spacing_x: f64,
        spacing_y: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, ImagingError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels, spacing_x, spacing_y)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing_x(&self) -> f64 {
        self.spacing_x
    }

    pub fn spacing_y(&self) -> f64 {
        self.spacing_y
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Same dims and identical spacing.
    pub fn same_geometry(&self, other: &Self) -> bool {
        self.same_shape(other)
            && self.spacing_x == other.spacing_x
            && self.spacing_y == other.spacing_y
    }

    pub fn min(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// New grid with the same geometry and per-pixel mapped values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, ImagingError> {
        Self::new(
            self.width,
            self.height,
            self.pixels.iter().map(|&v| f(v)).collect(),
            self.spacing_x,
            self.spacing_y,
        )
    }

    /// New grid combining two same-shape grids pixel by pixel.
    pub fn zip_map(
        &self,
        other: &Self,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, ImagingError> {
        if !self.same_shape(other) {
            return Err(ImagingError::ShapeMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Self::new(
            self.width,
            self.height,
            self.pixels
                .iter()
                .zip(other.pixels.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
            self.spacing_x,
            self.spacing_y,
        )
    }

    /// Same pixels, re-stamped spacing. Used when spacing arrives from a
    /// separate metadata channel (e.g. a DICOM header).
    pub fn with_spacing(&self, spacing_x: f64, spacing_y: f64) -> Result<Self, ImagingError> {
        Self::new(
            self.width,
            self.height,
            self.pixels.clone(),
            spacing_x,
            spacing_y,
        )
    }
}
