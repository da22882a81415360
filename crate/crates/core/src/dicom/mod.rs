//! Minimal DICOM reader/writer: explicit-VR little-endian only, with just
//! enough surface to plant and recover pixel payloads in both the standard
//! pixel-data tag and vendor private tags.
//!
//! Compressed transfer syntaxes and nested-sequence semantics are out of
//! scope; sequences are carried as opaque byte blobs so files round-trip
//! bit-exactly.

mod codec;
mod dataset;
mod pixels;
mod tag;

pub use codec::{parse_dataset, write_dataset};
pub use dataset::{DicomDataset, DicomElement, TransferSyntax};
pub use pixels::{extract_pixel_image, list_private_payloads, PixelDescriptor, PixelRepresentation};
pub use tag::{tags, DicomTag, Vr};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DicomError {
    #[error("truncated element at byte offset {offset}: need {needed} more bytes, {available} left")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("invalid VR bytes {bytes:02X?} at byte offset {offset} (not explicit VR little endian?)")]
    InvalidVr { offset: usize, bytes: [u8; 2] },

    #[error("undefined length on non-sequence element at byte offset {offset} (compressed pixel data is unsupported)")]
    UndefinedLengthOutsideSequence { offset: usize },

    #[error("unterminated undefined-length sequence starting at byte offset {offset}")]
    MissingSequenceDelimiter { offset: usize },

    #[error("malformed sequence item tag {tag} at byte offset {offset}")]
    InvalidSequenceItem { tag: DicomTag, offset: usize },

    #[error("unsupported transfer syntax {uid:?}; only explicit VR little endian (1.2.840.10008.1.2.1) is handled")]
    UnsupportedTransferSyntax { uid: String },

    #[error("element {tag} out of order at byte offset {offset}; dataset tags must ascend")]
    OutOfOrderTag { tag: DicomTag, offset: usize },

    #[error("duplicate element {tag}")]
    DuplicateTag { tag: DicomTag },

    #[error("element {tag} not found")]
    MissingTag { tag: DicomTag },

    #[error("value of {tag} is not a {expected}: {detail}")]
    ValueType {
        tag: DicomTag,
        expected: &'static str,
        detail: String,
    },

    #[error("value too long for {vr} ({len} bytes exceeds the 16-bit length field)")]
    ValueTooLong { vr: Vr, len: usize },

    #[error("pixel descriptor mismatch for {tag}: descriptor implies {expected} bytes, payload has {got}")]
    DescriptorMismatch {
        tag: DicomTag,
        expected: usize,
        got: usize,
    },

    #[error("unsupported pixel descriptor: bits_allocated must be 16, got {bits_allocated}")]
    UnsupportedBits { bits_allocated: u16 },

    #[error("invalid pixel descriptor: {detail}")]
    InvalidDescriptor { detail: String },

    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
}
