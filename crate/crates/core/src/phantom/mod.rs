//! The stand-in for the clinical scanner and the vendor workstation:
//! generates dual-energy slices for three anatomy-like variants and hides
//! the "vendor oracle" algorithms the rest of the crate tries to recover.
//!
//! Oracle constants are this crate's own ground truth, chosen so the hidden
//! iodine map is smooth, non-negative and non-linear; they claim nothing
//! about any real vendor.

mod materials;
mod oracle;
mod spec;
mod study;
mod workstation;

pub use materials::{Material, MaterialTable};
pub use oracle::{vendor_iodine_map, vendor_monoenergetic, VendorOracle};
pub use spec::{generate_slice, Insert, PhantomSpec, PhantomVariant};
pub use study::{export_dicom_study, import_dicom_study, StudyImages, PRIVATE_PAYLOAD_THRESHOLD};
pub use workstation::{export_workstation, workstation_transform, WorkstationExport};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhantomError {
    #[error("insert {index} ({material:?}) extends outside the {width}x{height} image")]
    InsertOutOfBounds {
        index: usize,
        material: Material,
        width: usize,
        height: usize,
    },

    #[error("invalid phantom spec: {detail}")]
    InvalidSpec { detail: String },

    #[error("virtual energy {kev} keV is outside the supported [40, 140] range")]
    KevOutOfRange { kev: f64 },

    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),

    #[error(transparent)]
    Dicom(#[from] crate::dicom::DicomError),
}
