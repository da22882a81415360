use super::PhantomError;
use crate::dicom::{
    extract_pixel_image, list_private_payloads, parse_dataset, tags, write_dataset, DicomDataset,
    DicomElement, DicomTag, PixelDescriptor, PixelRepresentation, TransferSyntax,
};
use crate::imaging::{DualEnergySlice, ImageGrid};

/// Default discovery threshold: image payloads are much larger than any
/// bookkeeping element, so 64 KiB separates them cleanly.
pub const PRIVATE_PAYLOAD_THRESHOLD: usize = 65536;

/// First private group used for hidden payloads; subsequent payloads take
/// the next odd groups (0x7FE3, 0x7FE5, ...).
const FIRST_PRIVATE_GROUP: u16 = 0x7FE1;

const PAYLOAD_ELEMENT: u16 = 0x0010;
const SLOPE_ELEMENT: u16 = 0x0011;
const INTERCEPT_ELEMENT: u16 = 0x0012;
const LABEL_ELEMENT: u16 = 0x0013;

/// Serialize a dual-energy study the way the simulated vendor does: the
/// low-kV image in the standard pixel-data tag, and the high-kV image plus
/// any extra maps hidden in private tags as 16-bit payloads with per-payload
/// rescale elements.
pub fn export_dicom_study(
    slice: &DualEnergySlice,
    maps: &[ImageGrid],
) -> Result<Vec<u8>, PhantomError> {
    for (i, map) in maps.iter().enumerate() {
        if !map.same_shape(slice.low()) {
            return Err(PhantomError::InvalidSpec {
                detail: format!(
                    "map {i} is {}x{}, study images are {}x{}",
                    map.width(),
                    map.height(),
                    slice.width(),
                    slice.height()
                ),
            });
        }
    }

    let mut ds = DicomDataset::new();
    ds.insert(DicomElement::ui(
        tags::TRANSFER_SYNTAX_UID,
        TransferSyntax::EXPLICIT_VR_LE_UID,
    ))?;
    ds.insert(DicomElement::us(tags::ROWS, slice.height() as u16))?;
    ds.insert(DicomElement::us(tags::COLUMNS, slice.width() as u16))?;
    // DICOM pixel spacing is row spacing (y) then column spacing (x).
    ds.insert(DicomElement::ds_multi(
        tags::PIXEL_SPACING,
        &[slice.low().spacing_y(), slice.low().spacing_x()],
    ))?;
    ds.insert(DicomElement::us(tags::BITS_ALLOCATED, 16))?;
    ds.insert(DicomElement::us(tags::PIXEL_REPRESENTATION, 0))?;

    let (low_bytes, low_slope, low_intercept) = quantize_u16(slice.low());
    ds.insert(DicomElement::ds(tags::RESCALE_INTERCEPT, low_intercept))?;
    ds.insert(DicomElement::ds(tags::RESCALE_SLOPE, low_slope))?;
    ds.insert(DicomElement::ow(tags::PIXEL_DATA, low_bytes))?;

    let mut hidden: Vec<(&ImageGrid, String)> = vec![(slice.high(), "high-energy".to_string())];
    for (i, map) in maps.iter().enumerate() {
        hidden.push((map, format!("map-{}", i + 1)));
    }
    for (k, (image, label)) in hidden.iter().enumerate() {
        let group = FIRST_PRIVATE_GROUP + (2 * k) as u16;
        let (bytes, slope, intercept) = quantize_u16(image);
        ds.insert(DicomElement::ow(DicomTag::new(group, PAYLOAD_ELEMENT), bytes))?;
        ds.insert(DicomElement::ds(DicomTag::new(group, SLOPE_ELEMENT), slope))?;
        ds.insert(DicomElement::ds(
            DicomTag::new(group, INTERCEPT_ELEMENT),
            intercept,
        ))?;
        ds.insert(DicomElement::lo(DicomTag::new(group, LABEL_ELEMENT), label))?;
    }

    Ok(write_dataset(&ds))
}

/// Cover [min, max] of the image with 65535 unsigned steps.
fn quantize_u16(image: &ImageGrid) -> (Vec<u8>, f64, f64) {
    let min = image.min();
    let max = image.max();
    let slope = if max > min { (max - min) / 65535.0 } else { 1.0 };
    let intercept = min;
    let mut bytes = Vec::with_capacity(image.len() * 2);
    for &v in image.pixels() {
        let stored = ((v - intercept) / slope).round().clamp(0.0, 65535.0) as u16;
        bytes.extend_from_slice(&stored.to_le_bytes());
    }
    (bytes, slope, intercept)
}

/// One recovered payload image and where it was hiding.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPayload {
    pub tag: DicomTag,
    pub label: String,
    pub image: ImageGrid,
}

/// Everything recovered from a study file.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyImages {
    pub low: ImageGrid,
    pub payloads: Vec<StudyPayload>,
}

impl StudyImages {
    /// The payload the exporter labels as the second acquisition energy, if
    /// present. Discovery itself makes no assumption about payload count.
    pub fn high_energy(&self) -> Option<&StudyPayload> {
        self.payloads.iter().find(|p| p.label == "high-energy")
    }
}

/// Parse a study file and recover the standard image plus every private
/// payload above the discovery threshold, applying per-payload rescales.
pub fn import_dicom_study(bytes: &[u8]) -> Result<StudyImages, PhantomError> {
    let ds = parse_dataset(bytes)?;
    let desc = PixelDescriptor::from_dataset(&ds)?;
    let (spacing_y, spacing_x) = pixel_spacing(&ds);
    let low = extract_pixel_image(&ds, tags::PIXEL_DATA, &desc)?.with_spacing(spacing_x, spacing_y)?;

    // Image payloads are exactly rows*cols*2 bytes; smaller studies than the
    // default threshold still discover theirs.
    let discovery_floor = PRIVATE_PAYLOAD_THRESHOLD.min(desc.expected_bytes());
    let mut payloads = Vec::new();
    for tag in list_private_payloads(&ds, discovery_floor) {
        let slope = ds
            .f64_value(DicomTag::new(tag.group, SLOPE_ELEMENT))
            .unwrap_or(1.0);
        let intercept = ds
            .f64_value(DicomTag::new(tag.group, INTERCEPT_ELEMENT))
            .unwrap_or(0.0);
        let label = ds
            .get(DicomTag::new(tag.group, LABEL_ELEMENT))
            .map(|e| e.trimmed_text())
            .unwrap_or_default();
        let payload_desc = PixelDescriptor::new(
            desc.rows,
            desc.columns,
            PixelRepresentation::Unsigned,
            slope,
            intercept,
        )?;
        let image =
            extract_pixel_image(&ds, tag, &payload_desc)?.with_spacing(spacing_x, spacing_y)?;
        payloads.push(StudyPayload { tag, label, image });
    }
    Ok(StudyImages { low, payloads })
}

fn pixel_spacing(ds: &DicomDataset) -> (f64, f64) {
    ds.get(tags::PIXEL_SPACING)
        .and_then(|e| e.as_f64_multi().ok())
        .filter(|v| v.len() == 2 && v.iter().all(|&s| s > 0.0))
        .map(|v| (v[0], v[1]))
        .unwrap_or((1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_slice, PhantomSpec, PhantomVariant};

    fn test_slice() -> DualEnergySlice {
        let spec = PhantomSpec::for_variant_sized(PhantomVariant::Brain, 64, 64, 3);
        generate_slice(&spec).unwrap()
    }

    #[test]
    fn high_image_only_gives_one_private_payload() {
        let slice = test_slice();
        let bytes = export_dicom_study(&slice, &[]).unwrap();
        let ds = parse_dataset(&bytes).unwrap();
        let found = list_private_payloads(&ds, 1024);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0], DicomTag::new(0x7FE1, 0x0010));
    }

    #[test]
    fn extra_maps_land_in_successive_odd_groups() {
        let slice = test_slice();
        let correction = ImageGrid::constant(64, 64, 1.0, 0.5, 0.5).unwrap();
        let iodine = crate::phantom::vendor_iodine_map(&slice);
        let bytes = export_dicom_study(&slice, &[correction, iodine]).unwrap();
        let ds = parse_dataset(&bytes).unwrap();
        let found = list_private_payloads(&ds, 1024);
        assert_eq!(
            found,
            vec![
                DicomTag::new(0x7FE1, 0x0010),
                DicomTag::new(0x7FE3, 0x0010),
                DicomTag::new(0x7FE5, 0x0010),
            ]
        );
    }

    #[test]
    fn round_trip_stays_within_one_quantization_step() {
        let slice = test_slice();
        let bytes = export_dicom_study(&slice, &[]).unwrap();
        let study = import_dicom_study(&bytes).unwrap();

        for (orig, got) in [
            (slice.low(), &study.low),
            (slice.high(), &study.high_energy().unwrap().image),
        ] {
            let step = (orig.max() - orig.min()) / 65535.0;
            for (&a, &b) in orig.pixels().iter().zip(got.pixels()) {
                assert!(
                    (a - b).abs() <= step * (1.0 + 1e-6),
                    "error {} exceeds step {step}",
                    (a - b).abs()
                );
            }
        }
        assert_eq!(study.low.spacing_x(), slice.low().spacing_x());
        assert_eq!(study.low.spacing_y(), slice.low().spacing_y());
    }

    #[test]
    fn constant_map_survives_quantization_exactly() {
        let slice = test_slice();
        let correction = ImageGrid::constant(64, 64, 1.0, 0.5, 0.5).unwrap();
        let bytes = export_dicom_study(&slice, &[correction]).unwrap();
        let study = import_dicom_study(&bytes).unwrap();
        let map = study.payloads.iter().find(|p| p.label == "map-1").unwrap();
        assert!(map.image.pixels().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mismatched_map_dimensions_are_rejected() {
        let slice = test_slice();
        let bad = ImageGrid::constant(32, 64, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            export_dicom_study(&slice, &[bad]),
            Err(PhantomError::InvalidSpec { .. })
        ));
    }
}
