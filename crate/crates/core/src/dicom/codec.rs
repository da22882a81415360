use super::dataset::{DicomDataset, DicomElement, TransferSyntax};
use super::tag::{tags, DicomTag, Vr};
use super::DicomError;

const PREAMBLE_LEN: usize = 128;
const MAGIC: &[u8; 4] = b"DICM";
const UNDEFINED_LENGTH: u32 = 0xFFFF_FFFF;

/// Parse an explicit-VR little-endian byte stream.
///
/// Accepts both full Part-10 files (128-byte preamble + "DICM") and bare
/// element streams. Every input byte is attributed to the preamble or to an
/// element; anything else is an error carrying the offending byte offset.
pub fn parse_dataset(bytes: &[u8]) -> Result<DicomDataset, DicomError> {
    let mut pos = if bytes.len() >= PREAMBLE_LEN + 4
        && &bytes[PREAMBLE_LEN..PREAMBLE_LEN + 4] == MAGIC
    {
        PREAMBLE_LEN + 4
    } else {
        0
    };

    let mut ds = DicomDataset::new();
    while pos < bytes.len() {
        let element_offset = pos;
        let header = take(bytes, pos, 8)?;
        let tag = DicomTag::new(
            u16::from_le_bytes([header[0], header[1]]),
            u16::from_le_bytes([header[2], header[3]]),
        );
        let vr_bytes = [header[4], header[5]];
        let vr = Vr::from_bytes(vr_bytes);
        if !vr.is_plausible() {
            return Err(DicomError::InvalidVr {
                offset: pos + 4,
                bytes: vr_bytes,
            });
        }

        let (length, header_len) = if vr.uses_long_length() {
            let long = take(bytes, pos, 12)?;
            (
                u32::from_le_bytes([long[8], long[9], long[10], long[11]]),
                12,
            )
        } else {
            (u32::from(u16::from_le_bytes([header[6], header[7]])), 8)
        };
        pos += header_len;

        let element = if length == UNDEFINED_LENGTH {
            if vr != Vr::SQ {
                return Err(DicomError::UndefinedLengthOutsideSequence {
                    offset: element_offset,
                });
            }
            let end = scan_sequence(bytes, pos, element_offset)?;
            let value = bytes[pos..end].to_vec();
            pos = end;
            DicomElement::from_raw(tag, vr, value, true)
        } else {
            let length = length as usize;
            let value = take(bytes, pos, length)?.to_vec();
            pos += length;
            DicomElement::from_raw(tag, vr, value, false)
        };
        ds.push_ordered(element, element_offset)?;
    }

    if let Some(el) = ds.get(tags::TRANSFER_SYNTAX_UID) {
        let uid = el.trimmed_text();
        if uid != TransferSyntax::EXPLICIT_VR_LE_UID {
            return Err(DicomError::UnsupportedTransferSyntax { uid });
        }
    }
    Ok(ds)
}

/// Serialize to a Part-10-style stream: zero preamble, "DICM", then the
/// elements in dataset order. `parse_dataset` inverts this byte-for-byte.
pub fn write_dataset(ds: &DicomDataset) -> Vec<u8> {
    let payload: usize = ds
        .elements()
        .iter()
        .map(|e| 12 + e.length())
        .sum::<usize>();
    let mut out = Vec::with_capacity(PREAMBLE_LEN + 4 + payload);
    out.extend(std::iter::repeat_n(0u8, PREAMBLE_LEN));
    out.extend_from_slice(MAGIC);

    for element in ds.elements() {
        out.extend_from_slice(&element.tag().group.to_le_bytes());
        out.extend_from_slice(&element.tag().element.to_le_bytes());
        out.extend_from_slice(&element.vr().0);
        if element.vr().uses_long_length() {
            out.extend_from_slice(&[0u8, 0u8]);
            let length = if element.has_undefined_length() {
                UNDEFINED_LENGTH
            } else {
                element.length() as u32
            };
            out.extend_from_slice(&length.to_le_bytes());
        } else {
            out.extend_from_slice(&(element.length() as u16).to_le_bytes());
        }
        out.extend_from_slice(element.value());
    }
    out
}

fn take(bytes: &[u8], pos: usize, needed: usize) -> Result<&[u8], DicomError> {
    if pos + needed > bytes.len() {
        Err(DicomError::Truncated {
            offset: pos,
            needed,
            available: bytes.len() - pos,
        })
    } else {
        Ok(&bytes[pos..pos + needed])
    }
}

/// Walk an undefined-length sequence item by item, returning the position
/// just past the sequence-delimiter item. Nested sequences inside
/// undefined-length items are not interpreted; those items are skipped by a
/// raw scan for the item-delimiter pattern.
fn scan_sequence(bytes: &[u8], mut pos: usize, seq_offset: usize) -> Result<usize, DicomError> {
    loop {
        let head = match take(bytes, pos, 8) {
            Ok(h) => h,
            Err(_) => return Err(DicomError::MissingSequenceDelimiter { offset: seq_offset }),
        };
        let tag = DicomTag::new(
            u16::from_le_bytes([head[0], head[1]]),
            u16::from_le_bytes([head[2], head[3]]),
        );
        let length = u32::from_le_bytes([head[4], head[5], head[6], head[7]]);
        pos += 8;

        if tag == tags::SEQUENCE_DELIMITER {
            return Ok(pos);
        }
        if tag != tags::ITEM {
            return Err(DicomError::InvalidSequenceItem { tag, offset: pos - 8 });
        }
        if length == UNDEFINED_LENGTH {
            pos = scan_to_item_delimiter(bytes, pos, seq_offset)?;
        } else {
            take(bytes, pos, length as usize)
                .map_err(|_| DicomError::MissingSequenceDelimiter { offset: seq_offset })?;
            pos += length as usize;
        }
    }
}

fn scan_to_item_delimiter(
    bytes: &[u8],
    pos: usize,
    seq_offset: usize,
) -> Result<usize, DicomError> {
    // (FFFE,E00D) with zero length, little endian.
    const PATTERN: [u8; 8] = [0xFE, 0xFF, 0x0D, 0xE0, 0x00, 0x00, 0x00, 0x00];
    let mut i = pos;
    while i + 8 <= bytes.len() {
        if bytes[i..i + 8] == PATTERN {
            return Ok(i + 8);
        }
        i += 2; // elements are always even-aligned
    }
    Err(DicomError::MissingSequenceDelimiter { offset: seq_offset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(ds: &DicomDataset) -> DicomDataset {
        parse_dataset(&write_dataset(ds)).unwrap()
    }

    #[test]
    fn empty_dataset_is_preamble_and_magic_only() {
        let ds = DicomDataset::new();
        let bytes = write_dataset(&ds);
        assert_eq!(bytes.len(), 132);
        assert_eq!(&bytes[128..132], b"DICM");
        assert!(bytes[..128].iter().all(|&b| b == 0));
        assert!(roundtrip(&ds).is_empty());
    }

    #[test]
    fn single_rows_element() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::us(tags::ROWS, 512)).unwrap();
        let parsed = roundtrip(&ds);
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed.u16_value(tags::ROWS).unwrap(), 512);
    }

    #[test]
    fn pixel_payload_bytes_are_hand_checkable() {
        // (7FE0,0010) OW, 8 bytes: values 1..=4 little endian.
        let mut ds = DicomDataset::new();
        let payload: Vec<u8> = [1u16, 2, 3, 4].iter().flat_map(|v| v.to_le_bytes()).collect();
        ds.insert(DicomElement::ow(tags::PIXEL_DATA, payload)).unwrap();
        let bytes = write_dataset(&ds);
        let expected = [
            0xE0, 0x7F, 0x10, 0x00, // tag
            b'O', b'W', 0x00, 0x00, // VR + reserved
            0x08, 0x00, 0x00, 0x00, // 32-bit length
            0x01, 0x00, 0x02, 0x00, 0x03, 0x00, 0x04, 0x00,
        ];
        assert_eq!(&bytes[132..], &expected);
    }

    #[test]
    fn bare_stream_without_preamble_is_accepted() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::us(tags::ROWS, 7)).unwrap();
        let bytes = write_dataset(&ds);
        let parsed = parse_dataset(&bytes[132..]).unwrap();
        assert_eq!(parsed.u16_value(tags::ROWS).unwrap(), 7);
    }

    #[test]
    fn standard_plus_private_payloads_recovered_bit_exactly() {
        let mut ds = DicomDataset::new();
        let standard: Vec<u8> = (0u16..64).flat_map(|v| v.to_le_bytes()).collect();
        let hidden: Vec<u8> = (1000u16..1064).flat_map(|v| v.to_le_bytes()).collect();
        ds.insert(DicomElement::ow(tags::PIXEL_DATA, standard.clone())).unwrap();
        ds.insert(DicomElement::ow(DicomTag::new(0x7FE1, 0x0010), hidden.clone())).unwrap();
        let parsed = roundtrip(&ds);
        assert_eq!(parsed.require(tags::PIXEL_DATA).unwrap().value(), &standard[..]);
        assert_eq!(
            parsed.require(DicomTag::new(0x7FE1, 0x0010)).unwrap().value(),
            &hidden[..]
        );
        assert_eq!(parsed, ds);
    }

    #[test]
    fn truncated_element_reports_offset() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::us(tags::ROWS, 512)).unwrap();
        let mut bytes = write_dataset(&ds);
        bytes.truncate(bytes.len() - 1); // chop into the value
        let err = parse_dataset(&bytes).unwrap_err();
        assert!(matches!(err, DicomError::Truncated { offset: 140, .. }), "{err:?}");
    }

    #[test]
    fn unknown_vr_is_opaque_long_form() {
        let element = DicomElement::new(DicomTag::new(0x0009, 0x0001), Vr(*b"ZZ"), vec![1, 2, 3, 4])
            .unwrap();
        let mut ds = DicomDataset::new();
        ds.insert(element).unwrap();
        let parsed = roundtrip(&ds);
        assert_eq!(parsed.elements()[0].vr(), Vr(*b"ZZ"));
        assert_eq!(parsed.elements()[0].value(), &[1, 2, 3, 4]);
    }

    #[test]
    fn implicit_vr_input_is_rejected_with_vr_error() {
        // Tag followed by a 32-bit length where the VR bytes should be:
        // low byte 0x04 is not an uppercase letter.
        let bytes = [0x28u8, 0x00, 0x10, 0x00, 0x04, 0x00, 0x00, 0x00, 0x00, 0x02];
        let err = parse_dataset(&bytes).unwrap_err();
        assert!(matches!(err, DicomError::InvalidVr { offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn defined_length_sequence_is_opaque() {
        // One item of 4 bytes, defined lengths everywhere.
        let mut inner = Vec::new();
        inner.extend_from_slice(&[0xFE, 0xFF, 0x00, 0xE0]); // item tag
        inner.extend_from_slice(&4u32.to_le_bytes());
        inner.extend_from_slice(&[9, 9, 9, 9]);
        let el = DicomElement::new(DicomTag::new(0x0008, 0x1140), Vr::SQ, inner.clone()).unwrap();
        let mut ds = DicomDataset::new();
        ds.insert(el).unwrap();
        let parsed = roundtrip(&ds);
        assert_eq!(parsed.elements()[0].value(), &inner[..]);
        assert!(!parsed.elements()[0].has_undefined_length());
    }

    #[test]
    fn undefined_length_sequence_round_trips() {
        // Hand-assembled: SQ with undefined length, one defined-length item,
        // then the sequence delimiter.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&[0x08, 0x00, 0x40, 0x11]); // (0008,1140)
        bytes.extend_from_slice(b"SQ");
        bytes.extend_from_slice(&[0, 0]); // reserved
        bytes.extend_from_slice(&0xFFFF_FFFFu32.to_le_bytes());
        bytes.extend_from_slice(&[0xFE, 0xFF, 0x00, 0xE0]); // item
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[7, 7]);
        bytes.extend_from_slice(&[0xFE, 0xFF, 0xDD, 0xE0]); // sequence delimiter
        bytes.extend_from_slice(&0u32.to_le_bytes());

        let ds = parse_dataset(&bytes).unwrap();
        assert_eq!(ds.len(), 1);
        assert!(ds.elements()[0].has_undefined_length());
        let rewritten = write_dataset(&ds);
        assert_eq!(&rewritten[132..], &bytes[..]);
    }

    #[test]
    fn undefined_length_pixel_data_is_rejected() {
        // Encapsulated (compressed) pixel data uses undefined length on OW/OB.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&[0xE0, 0x7F, 0x10, 0x00]);
        bytes.extend_from_slice(b"OB");
        bytes.extend_from_slice(&[0, 0]);
        bytes.extend_from_slice(&0xFFFF_FFFFu32.to_le_bytes());
        let err = parse_dataset(&bytes).unwrap_err();
        assert!(matches!(err, DicomError::UndefinedLengthOutsideSequence { offset: 0 }), "{err:?}");
    }

    #[test]
    fn foreign_transfer_syntax_is_rejected() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::ui(tags::TRANSFER_SYNTAX_UID, "1.2.840.10008.1.2.4.90"))
            .unwrap();
        let err = parse_dataset(&write_dataset(&ds)).unwrap_err();
        assert!(matches!(err, DicomError::UnsupportedTransferSyntax { .. }), "{err:?}");
    }

    #[test]
    fn matching_transfer_syntax_is_accepted() {
        let mut ds = DicomDataset::new();
        ds.insert(DicomElement::ui(
            tags::TRANSFER_SYNTAX_UID,
            TransferSyntax::EXPLICIT_VR_LE_UID,
        ))
        .unwrap();
        assert_eq!(roundtrip(&ds), ds);
    }

    #[test]
    fn out_of_order_tags_are_rejected() {
        let mut a = DicomDataset::new();
        a.insert(DicomElement::us(tags::COLUMNS, 1)).unwrap();
        let mut b = DicomDataset::new();
        b.insert(DicomElement::us(tags::ROWS, 1)).unwrap();
        // Concatenate the element bytes in descending tag order.
        let mut bytes = write_dataset(&a);
        bytes.extend_from_slice(&write_dataset(&b)[132..]);
        let err = parse_dataset(&bytes).unwrap_err();
        assert!(matches!(err, DicomError::OutOfOrderTag { .. }), "{err:?}");
    }

    fn arb_vr() -> impl Strategy<Value = Vr> {
        prop::sample::select(vec![
            Vr::US,
            Vr::UL,
            Vr::DS,
            Vr::CS,
            Vr::LO,
            Vr::UI,
            Vr::OB,
            Vr::OW,
            Vr::UN,
        ])
    }

    prop_compose! {
        fn arb_dataset()(
            seeds in prop::collection::btree_map(
                (0x0008u16..0x7FF0, 0x0000u16..0x0100),
                (arb_vr(), prop::collection::vec(any::<u8>(), 0..64)),
                0..20,
            )
        ) -> DicomDataset {
            let mut ds = DicomDataset::new();
            for ((group, element), (vr, value)) in seeds {
                let vr = if vr == Vr::DS || vr == Vr::CS || vr == Vr::LO || vr == Vr::UI {
                    // keep text VRs printable so trims stay harmless
                    vr
                } else {
                    vr
                };
                let el = DicomElement::new(DicomTag::new(group, element), vr, value).unwrap();
                ds.insert(el).unwrap();
            }
            ds
        }
    }

    proptest! {
        #[test]
        fn random_datasets_round_trip(ds in arb_dataset()) {
            // Skip datasets that happen to fake a foreign transfer syntax.
            prop_assume!(ds.get(tags::TRANSFER_SYNTAX_UID).is_none());
            let parsed = parse_dataset(&write_dataset(&ds)).unwrap();
            prop_assert_eq!(parsed, ds);
        }
    }
}
