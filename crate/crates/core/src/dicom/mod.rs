//! DICOM Part 10 data model: parse, represent and serialize little-endian
//! datasets with byte-exact round trips.

mod codec;
mod dataset;
pub mod dictionary;
mod element;
mod pixel;
mod tag;
mod vr;

use thiserror::Error;

pub use codec::{parse_dicom, parse_dicom_with, serialize_dicom, ParseOptions};
pub use dataset::{DataSet, TransferSyntax, EXPLICIT_VR_LE, IMPLICIT_VR_LE};
pub use dictionary::Dictionary;
pub use element::{DataElement, Item, Sequence, Value};
pub use pixel::{get_frames, put_frames, set_pixel_module, PixelLayout};
pub use tag::{tags, ParseTagError, Tag};
pub use vr::Vr;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DicomError {
    #[error("missing DICM magic at offset 128 (stream is not Part 10)")]
    MissingMagic,
    #[error("truncated element at offset {offset}: {needed} more bytes expected")]
    Truncated { offset: usize, needed: usize },
    #[error("defined length overrun at offset {offset}")]
    LengthOverrun { offset: usize },
    #[error("element {tag} at offset {offset} is out of ascending order")]
    OutOfOrder { tag: Tag, offset: usize },
    #[error("unexpected {tag} at offset {offset}")]
    UnexpectedDelimiter { tag: Tag, offset: usize },
    #[error("undefined length on non-sequence element {tag} at offset {offset}")]
    UndefinedLength { tag: Tag, offset: usize },
    #[error("unsupported transfer syntax {0}")]
    UnsupportedTransferSyntax(String),
    #[error("element {0} has odd value length")]
    OddLength(Tag),
    #[error("element {tag} value of {len} bytes does not fit its length field")]
    ValueTooLong { tag: Tag, len: usize },
    #[error("compressed pixel data ({0}) is not decoded")]
    UnsupportedCodec(String),
    #[error("missing required attribute {0}")]
    MissingAttribute(&'static str),
    #[error("unsupported pixel layout: {0}")]
    BadPixelLayout(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}
