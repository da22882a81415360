use super::tag::{DicomTag, Vr};
use super::DicomError;

/// The one transfer syntax this crate reads and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransferSyntax {
    #[default]
    ExplicitVrLittleEndian,
}

impl TransferSyntax {
    pub const EXPLICIT_VR_LE_UID: &'static str = "1.2.840.10008.1.2.1";

    pub fn uid(&self) -> &'static str {
        Self::EXPLICIT_VR_LE_UID
    }
}

/// One attribute: tag, VR and raw value bytes.
///
/// Values are padded to even length on construction (space for text VRs,
/// NUL for binary), so writing is verbatim and round-trips bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DicomElement {
    tag: DicomTag,
    vr: Vr,
    value: Vec<u8>,
    /// Set for sequences parsed with undefined length; the value then ends
    /// with the sequence-delimiter item and is written back verbatim.
    undefined_length: bool,
}

impl DicomElement {
    pub fn new(tag: DicomTag, vr: Vr, mut value: Vec<u8>) -> Result<Self, DicomError> {
        if value.len() % 2 == 1 {
            value.push(vr.pad_byte());
        }
        if !vr.uses_long_length() && value.len() > 0xFFFE {
            return Err(DicomError::ValueTooLong {
                vr,
                len: value.len(),
            });
        }
        Ok(Self {
            tag,
            vr,
            value,
            undefined_length: false,
        })
    }

    /// Verbatim constructor used by the parser; no padding is applied so the
    /// element mirrors the file bytes exactly.
    pub(super) fn from_raw(
        tag: DicomTag,
        vr: Vr,
        value: Vec<u8>,
        undefined_length: bool,
    ) -> Self {
        Self {
            tag,
            vr,
            value,
            undefined_length,
        }
    }

    pub fn tag(&self) -> DicomTag {
        self.tag
    }

    pub fn vr(&self) -> Vr {
        self.vr
    }

    pub fn value(&self) -> &[u8] {
        &self.value
    }

    pub fn length(&self) -> usize {
        self.value.len()
    }

    pub fn has_undefined_length(&self) -> bool {
        self.undefined_length
    }

    // -- typed constructors ------------------------------------------------

    pub fn us(tag: DicomTag, value: u16) -> Self {
        Self::new(tag, Vr::US, value.to_le_bytes().to_vec()).expect("US is always even")
    }

    pub fn ds(tag: DicomTag, value: f64) -> Self {
        Self::new(tag, Vr::DS, format_ds(value).into_bytes()).expect("DS fits the short form")
    }

    /// Multi-valued decimal string, values separated by backslashes.
    pub fn ds_multi(tag: DicomTag, values: &[f64]) -> Self {
        let text = values.iter().map(|&v| format_ds(v)).collect::<Vec<_>>().join("\\");
        Self::new(tag, Vr::DS, text.into_bytes()).expect("DS fits the short form")
    }

    pub fn ui(tag: DicomTag, value: &str) -> Self {
        Self::new(tag, Vr::UI, value.as_bytes().to_vec()).expect("UID fits the short form")
    }

    pub fn lo(tag: DicomTag, value: &str) -> Self {
        Self::new(tag, Vr::LO, value.as_bytes().to_vec()).expect("LO fits the short form")
    }

    pub fn ow(tag: DicomTag, bytes: Vec<u8>) -> Self {
        Self::new(tag, Vr::OW, bytes).expect("OW uses the long form")
    }

    // -- typed accessors ---------------------------------------------------

    pub fn as_u16(&self) -> Result<u16, DicomError> {
        if self.value.len() < 2 {
            return Err(DicomError::ValueType {
                tag: self.tag,
                expected: "16-bit unsigned",
                detail: format!("{} byte(s)", self.value.len()),
            });
        }
        Ok(u16::from_le_bytes([self.value[0], self.value[1]]))
    }

    /// First component of a decimal string.
    pub fn as_f64(&self) -> Result<f64, DicomError> {
        let text = self.trimmed_text();
        let first = text.split('\\').next().unwrap_or("");
        first.trim().parse::<f64>().map_err(|e| DicomError::ValueType {
            tag: self.tag,
            expected: "decimal string",
            detail: format!("{text:?}: {e}"),
        })
    }

    /// All components of a multi-valued decimal string.
    pub fn as_f64_multi(&self) -> Result<Vec<f64>, DicomError> {
        self.trimmed_text()
            .split('\\')
            .map(|part| {
                part.trim().parse::<f64>().map_err(|e| DicomError::ValueType {
                    tag: self.tag,
                    expected: "decimal string",
                    detail: format!("{part:?}: {e}"),
                })
            })
            .collect()
    }

    pub fn trimmed_text(&self) -> String {
        String::from_utf8_lossy(&self.value)
            .trim_matches(|c| c == ' ' || c == '\0')
            .to_string()
    }
}

/// Decimal-string encoding capped at DICOM's 16-byte component limit.
fn format_ds(value: f64) -> String {
    let plain = format!("{value}");
    if plain.len() <= 16 {
        return plain;
    }
    for precision in (1..=10).rev() {
        let sci = format!("{value:.precision$e}");
        if sci.len() <= 16 {
            return sci;
        }
    }
    format!("{value:.1e}")
}

/// An ordered, duplicate-free collection of elements.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DicomDataset {
    elements: Vec<DicomElement>,
    transfer_syntax: TransferSyntax,
}

impl DicomDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn transfer_syntax(&self) -> TransferSyntax {
        self.transfer_syntax
    }

    /// Insert keeping (group, element) order; duplicates are rejected.
    pub fn insert(&mut self, element: DicomElement) -> Result<(), DicomError> {
        match self.elements.binary_search_by_key(&element.tag(), |e| e.tag()) {
            Ok(_) => Err(DicomError::DuplicateTag { tag: element.tag() }),
            Err(pos) => {
                self.elements.insert(pos, element);
                Ok(())
            }
        }
    }

    /// Append used by the parser, which requires ascending file order.
    pub(super) fn push_ordered(
        &mut self,
        element: DicomElement,
        offset: usize,
    ) -> Result<(), DicomError> {
        if let Some(last) = self.elements.last() {
            use std::cmp::Ordering;
            match element.tag().cmp(&last.tag()) {
                Ordering::Equal => return Err(DicomError::DuplicateTag { tag: element.tag() }),
                Ordering::Less => {
                    return Err(DicomError::OutOfOrderTag {
                        tag: element.tag(),
                        offset,
                    })
                }
                Ordering::Greater => {}
            }
        }
        self.elements.push(element);
        Ok(())
    }

    pub fn elements(&self) -> &[DicomElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, tag: DicomTag) -> Option<&DicomElement> {
        self.elements
            .binary_search_by_key(&tag, |e| e.tag())
            .ok()
            .map(|i| &self.elements[i])
    }

    pub fn require(&self, tag: DicomTag) -> Result<&DicomElement, DicomError> {
        self.get(tag).ok_or(DicomError::MissingTag { tag })
    }

    pub fn u16_value(&self, tag: DicomTag) -> Result<u16, DicomError> {
        self.require(tag)?.as_u16()
    }

    pub fn f64_value(&self, tag: DicomTag) -> Result<f64, DicomError> {
        self.require(tag)?.as_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::tags;

    #[test]
    fn odd_values_are_padded_on_construction() {
        let e = DicomElement::new(tags::RESCALE_SLOPE, Vr::DS, b"1.5".to_vec()).unwrap();
        assert_eq!(e.value(), b"1.5 ");
        assert_eq!(e.length(), 4);

        let e = DicomElement::new(DicomTag::new(0x7FE1, 0x0010), Vr::OB, vec![0xAB]).unwrap();
        assert_eq!(e.value(), &[0xAB, 0x00]);
    }

    #[test]
    fn insert_keeps_order_and_rejects_duplicates() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::us(tags::COLUMNS, 2)).unwrap();
        ds.insert(DicomElement::us(tags::ROWS, 2)).unwrap();
        assert_eq!(ds.elements()[0].tag(), tags::ROWS);
        assert_eq!(ds.elements()[1].tag(), tags::COLUMNS);
        assert!(matches!(
            ds.insert(DicomElement::us(tags::ROWS, 4)),
            Err(DicomError::DuplicateTag { .. })
        ));
    }

    #[test]
    fn ds_round_trips_f64() {
        for v in [-1024.0, 0.0, 0.030517578125, 1.7e-7, 123456.789] {
            let e = DicomElement::ds(tags::RESCALE_SLOPE, v);
            assert!(e.length() <= 16 || e.length() % 2 == 0);
            let back = e.as_f64().unwrap();
            assert!(
                (back - v).abs() <= v.abs() * 1e-9,
                "{v} came back as {back}"
            );
        }
    }

    #[test]
    fn ds_stays_within_sixteen_bytes_before_padding() {
        let e = DicomElement::ds(tags::RESCALE_SLOPE, 0.000030517578125);
        assert!(e.trimmed_text().len() <= 16, "{:?}", e.trimmed_text());
    }

    #[test]
    fn multi_valued_ds() {
        let e = DicomElement::ds_multi(tags::PIXEL_SPACING, &[0.5, 0.25]);
        assert_eq!(e.as_f64_multi().unwrap(), vec![0.5, 0.25]);
    }

    #[test]
    fn signed_stored_values_via_u16() {
        let e = DicomElement::us(tags::PIXEL_REPRESENTATION, 1);
        assert_eq!(e.as_u16().unwrap(), 1);
    }

    #[test]
    fn missing_tag_error_names_tag_in_hex() {
        let ds = DicomDataset::new();
        let err = ds.require(DicomTag::new(0x7FE1, 0x0010)).unwrap_err();
        assert!(err.to_string().contains("(7FE1,0010)"), "{err}");
    }
}
