use super::dataset::DicomDataset;
use super::tag::{tags, DicomTag};
use super::DicomError;
use crate::imaging::ImageGrid;

/// Whether stored 16-bit words are two's-complement or plain unsigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PixelRepresentation {
    #[default]
    Unsigned,
    Signed,
}

impl PixelRepresentation {
    pub fn from_flag(flag: u16) -> Self {
        if flag == 1 {
            Self::Signed
        } else {
            Self::Unsigned
        }
    }

    pub fn flag(&self) -> u16 {
        match self {
            Self::Unsigned => 0,
            Self::Signed => 1,
        }
    }
}

/// How a 16-bit payload maps back to real-valued pixels:
/// `value = rescale_slope * stored + rescale_intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDescriptor {
    pub rows: usize,
    pub columns: usize,
    pub bits_allocated: u16,
    pub pixel_representation: PixelRepresentation,
    pub rescale_slope: f64,
    pub rescale_intercept: f64,
}

impl PixelDescriptor {
    pub fn new(
        rows: usize,
        columns: usize,
        pixel_representation: PixelRepresentation,
        rescale_slope: f64,
        rescale_intercept: f64,
    ) -> Result<Self, DicomError> {
        if rows == 0 || columns == 0 {
            return Err(DicomError::InvalidDescriptor {
                detail: format!("rows x columns = {rows} x {columns}"),
            });
        }
        if !rescale_slope.is_finite() || !rescale_intercept.is_finite() || rescale_slope == 0.0 {
            return Err(DicomError::InvalidDescriptor {
                detail: format!("rescale {rescale_slope} * v + {rescale_intercept}"),
            });
        }
        Ok(Self {
            rows,
            columns,
            bits_allocated: 16,
            pixel_representation,
            rescale_slope,
            rescale_intercept,
        })
    }

    /// Read the standard image-description tags.
    pub fn from_dataset(ds: &DicomDataset) -> Result<Self, DicomError> {
        let bits = ds.u16_value(tags::BITS_ALLOCATED)?;
        if bits != 16 {
            return Err(DicomError::UnsupportedBits { bits_allocated: bits });
        }
        let rows = ds.u16_value(tags::ROWS)? as usize;
        let columns = ds.u16_value(tags::COLUMNS)? as usize;
        let representation =
            PixelRepresentation::from_flag(ds.u16_value(tags::PIXEL_REPRESENTATION).unwrap_or(0));
        let slope = ds.f64_value(tags::RESCALE_SLOPE).unwrap_or(1.0);
        let intercept = ds.f64_value(tags::RESCALE_INTERCEPT).unwrap_or(0.0);
        Self::new(rows, columns, representation, slope, intercept)
    }

    pub fn expected_bytes(&self) -> usize {
        self.rows * self.columns * 2
    }
}

/// Decode a 16-bit payload into a real-valued image.
///
/// Output dimensions are (columns, rows); spacing is 1 mm until the caller
/// re-stamps it from separate metadata.
pub fn extract_pixel_image(
    ds: &DicomDataset,
    payload_tag: DicomTag,
    desc: &PixelDescriptor,
) -> Result<ImageGrid, DicomError> {
    let element = ds.require(payload_tag)?;
    if element.length() != desc.expected_bytes() {
        return Err(DicomError::DescriptorMismatch {
            tag: payload_tag,
            expected: desc.expected_bytes(),
            got: element.length(),
        });
    }
    let raw = element.value();
    let mut pixels = Vec::with_capacity(desc.rows * desc.columns);
    for chunk in raw.chunks_exact(2) {
        let word = u16::from_le_bytes([chunk[0], chunk[1]]);
        let stored = match desc.pixel_representation {
            PixelRepresentation::Unsigned => f64::from(word),
            PixelRepresentation::Signed => f64::from(word as i16),
        };
        pixels.push(desc.rescale_slope * stored + desc.rescale_intercept);
    }
    Ok(ImageGrid::new(desc.columns, desc.rows, pixels, 1.0, 1.0)?)
}

/// Every private-group tag whose payload is at least `min_bytes` long,
/// ascending. This is the discovery path for vendor-hidden images.
pub fn list_private_payloads(ds: &DicomDataset, min_bytes: usize) -> Vec<DicomTag> {
    ds.elements()
        .iter()
        .filter(|e| e.tag().is_private() && e.length() >= min_bytes)
        .map(|e| e.tag())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::dataset::DicomElement;

    fn payload_words(words: &[u16]) -> Vec<u8> {
        words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    #[test]
    fn rescale_applies_slope_and_intercept() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::ow(tags::PIXEL_DATA, payload_words(&[0, 1, 2, 3])))
            .unwrap();
        let desc =
            PixelDescriptor::new(2, 2, PixelRepresentation::Unsigned, 1.0, -1024.0).unwrap();
        let img = extract_pixel_image(&ds, tags::PIXEL_DATA, &desc).unwrap();
        assert_eq!(img.pixels(), &[-1024.0, -1023.0, -1022.0, -1021.0]);
        assert_eq!((img.width(), img.height()), (2, 2));
    }

    #[test]
    fn identity_rescale_passes_raw_values() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::ow(tags::PIXEL_DATA, payload_words(&[7, 300])))
            .unwrap();
        let desc = PixelDescriptor::new(1, 2, PixelRepresentation::Unsigned, 1.0, 0.0).unwrap();
        let img = extract_pixel_image(&ds, tags::PIXEL_DATA, &desc).unwrap();
        assert_eq!(img.pixels(), &[7.0, 300.0]);
    }

    #[test]
    fn signed_words_decode_as_twos_complement() {
        let stored = (-5i16) as u16;
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::ow(tags::PIXEL_DATA, payload_words(&[stored, stored])))
            .unwrap();
        let desc = PixelDescriptor::new(1, 2, PixelRepresentation::Signed, 2.0, 0.0).unwrap();
        let img = extract_pixel_image(&ds, tags::PIXEL_DATA, &desc).unwrap();
        assert_eq!(img.pixels(), &[-10.0, -10.0]);
    }

    #[test]
    fn missing_payload_names_tag() {
        let ds = DicomDataset::new();
        let desc = PixelDescriptor::new(1, 1, PixelRepresentation::Unsigned, 1.0, 0.0).unwrap();
        let err = extract_pixel_image(&ds, DicomTag::new(0x7FE1, 0x0010), &desc).unwrap_err();
        assert!(err.to_string().contains("(7FE1,0010)"), "{err}");
    }

    #[test]
    fn length_mismatch_is_descriptor_error() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::ow(tags::PIXEL_DATA, payload_words(&[1, 2])))
            .unwrap();
        let desc = PixelDescriptor::new(2, 2, PixelRepresentation::Unsigned, 1.0, 0.0).unwrap();
        let err = extract_pixel_image(&ds, tags::PIXEL_DATA, &desc).unwrap_err();
        assert!(
            matches!(err, DicomError::DescriptorMismatch { expected: 8, got: 4, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn private_discovery_empty_without_private_tags() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::ow(tags::PIXEL_DATA, vec![0u8; 4096])).unwrap();
        assert!(list_private_payloads(&ds, 1).is_empty());
    }

    #[test]
    fn private_discovery_finds_exactly_the_large_payloads() {
        let mut ds = DicomDataset::new();
        let big = vec![0u8; 2048];
        let expected: Vec<DicomTag> = [0x7FE1u16, 0x7FE3, 0x7FE5, 0x7FE7]
            .iter()
            .map(|&g| DicomTag::new(g, 0x0010))
            .collect();
        for &tag in &expected {
            ds.insert(DicomElement::ow(tag, big.clone())).unwrap();
        }
        // A small private element and a large standard one must not appear.
        ds.insert(DicomElement::lo(DicomTag::new(0x0009, 0x0010), "vendor")).unwrap();
        ds.insert(DicomElement::ow(tags::PIXEL_DATA, big.clone())).unwrap();
        assert_eq!(list_private_payloads(&ds, 1024), expected);
    }

    #[test]
    fn threshold_excludes_small_private_payloads() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::ow(DicomTag::new(0x7FE1, 0x0010), vec![0u8; 2]))
            .unwrap();
        assert!(list_private_payloads(&ds, 1024).is_empty());
        assert_eq!(list_private_payloads(&ds, 1).len(), 1);
    }
}
