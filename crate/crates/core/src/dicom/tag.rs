use std::fmt;

/// A (group, element) pair identifying one dataset attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DicomTag {
    pub group: u16,
    pub element: u16,
}

impl DicomTag {
    pub const fn new(group: u16, element: u16) -> Self {
        Self { group, element }
    }

    /// Odd group numbers are reserved for vendor-private data.
    pub fn is_private(&self) -> bool {
        self.group % 2 == 1
    }
}

impl fmt::Display for DicomTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:04X},{:04X})", self.group, self.element)
    }
}

/// Standard tags this crate relies on.
pub mod tags {
    use super::DicomTag;

    pub const TRANSFER_SYNTAX_UID: DicomTag = DicomTag::new(0x0002, 0x0010);
    pub const ROWS: DicomTag = DicomTag::new(0x0028, 0x0010);
    pub const COLUMNS: DicomTag = DicomTag::new(0x0028, 0x0011);
    pub const PIXEL_SPACING: DicomTag = DicomTag::new(0x0028, 0x0030);
    pub const BITS_ALLOCATED: DicomTag = DicomTag::new(0x0028, 0x0100);
    pub const PIXEL_REPRESENTATION: DicomTag = DicomTag::new(0x0028, 0x0103);
    pub const RESCALE_INTERCEPT: DicomTag = DicomTag::new(0x0028, 0x1052);
    pub const RESCALE_SLOPE: DicomTag = DicomTag::new(0x0028, 0x1053);
    pub const PIXEL_DATA: DicomTag = DicomTag::new(0x7FE0, 0x0010);

    pub const ITEM: DicomTag = DicomTag::new(0xFFFE, 0xE000);
    pub const ITEM_DELIMITER: DicomTag = DicomTag::new(0xFFFE, 0xE00D);
    pub const SEQUENCE_DELIMITER: DicomTag = DicomTag::new(0xFFFE, 0xE0DD);
}

/// Two-letter value representation code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Vr(pub [u8; 2]);

impl Vr {
    pub const AE: Vr = Vr(*b"AE");
    pub const AS: Vr = Vr(*b"AS");
    pub const AT: Vr = Vr(*b"AT");
    pub const CS: Vr = Vr(*b"CS");
    pub const DA: Vr = Vr(*b"DA");
    pub const DS: Vr = Vr(*b"DS");
    pub const DT: Vr = Vr(*b"DT");
    pub const FD: Vr = Vr(*b"FD");
    pub const FL: Vr = Vr(*b"FL");
    pub const IS: Vr = Vr(*b"IS");
    pub const LO: Vr = Vr(*b"LO");
    pub const LT: Vr = Vr(*b"LT");
    pub const OB: Vr = Vr(*b"OB");
    pub const OD: Vr = Vr(*b"OD");
    pub const OF: Vr = Vr(*b"OF");
    pub const OL: Vr = Vr(*b"OL");
    pub const OW: Vr = Vr(*b"OW");
    pub const PN: Vr = Vr(*b"PN");
    pub const SH: Vr = Vr(*b"SH");
    pub const SL: Vr = Vr(*b"SL");
    pub const SQ: Vr = Vr(*b"SQ");
    pub const SS: Vr = Vr(*b"SS");
    pub const ST: Vr = Vr(*b"ST");
    pub const TM: Vr = Vr(*b"TM");
    pub const UC: Vr = Vr(*b"UC");
    pub const UI: Vr = Vr(*b"UI");
    pub const UL: Vr = Vr(*b"UL");
    pub const UN: Vr = Vr(*b"UN");
    pub const UR: Vr = Vr(*b"UR");
    pub const US: Vr = Vr(*b"US");
    pub const UT: Vr = Vr(*b"UT");

    pub fn from_bytes(bytes: [u8; 2]) -> Self {
        Vr(bytes)
    }

    pub fn is_plausible(&self) -> bool {
        self.0.iter().all(|b| b.is_ascii_uppercase())
    }

    const KNOWN_SHORT: [Vr; 21] = [
        Vr::AE,
        Vr::AS,
        Vr::AT,
        Vr::CS,
        Vr::DA,
        Vr::DS,
        Vr::DT,
        Vr::FD,
        Vr::FL,
        Vr::IS,
        Vr::LO,
        Vr::LT,
        Vr::PN,
        Vr::SH,
        Vr::SL,
        Vr::SS,
        Vr::ST,
        Vr::TM,
        Vr::UI,
        Vr::UL,
        Vr::US,
    ];

    /// Long-form VRs carry 2 reserved bytes plus a 32-bit length. Anything
    /// not in the known 16-bit-length set falls back to the long form, which
    /// is also the standard's rule for unrecognized VRs.
    pub fn uses_long_length(&self) -> bool {
        !Self::KNOWN_SHORT.contains(self)
    }

    /// Pad byte for odd-length values: space for text VRs, NUL otherwise
    /// (UIs pad with NUL despite being text).
    pub fn pad_byte(&self) -> u8 {
        const TEXT: [Vr; 15] = [
            Vr::AE,
            Vr::AS,
            Vr::CS,
            Vr::DA,
            Vr::DS,
            Vr::DT,
            Vr::IS,
            Vr::LO,
            Vr::LT,
            Vr::PN,
            Vr::SH,
            Vr::ST,
            Vr::TM,
            Vr::UC,
            Vr::UT,
        ];
        if TEXT.contains(self) {
            b' '
        } else {
            0x00
        }
    }
}

impl fmt::Display for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0[0] as char, self.0[1] as char)
    }
}
