//! Uncompressed native pixel data access.

use super::{tags, DataElement, DataSet, DicomError, Value, Vr};
use crate::frame::{ImageFrame, Samples};

/// Image pixel module attributes needed to slice PixelData into frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelLayout {
    pub rows: usize,
    pub columns: usize,
    pub samples_per_pixel: usize,
    pub bits_allocated: u16,
    pub frames: usize,
}

impl PixelLayout {
    pub fn of(ds: &DataSet) -> Result<Self, DicomError> {
        let rows = ds.u16(tags::ROWS).ok_or(DicomError::MissingAttribute("Rows"))? as usize;
        let columns = ds.u16(tags::COLUMNS).ok_or(DicomError::MissingAttribute("Columns"))? as usize;
        let bits_allocated = ds
            .u16(tags::BITS_ALLOCATED)
            .ok_or(DicomError::MissingAttribute("BitsAllocated"))?;
        let samples_per_pixel = ds.u16(tags::SAMPLES_PER_PIXEL).unwrap_or(1) as usize;
        let frames = ds.int(tags::NUMBER_OF_FRAMES).unwrap_or(1).max(1) as usize;
        if bits_allocated != 8 && bits_allocated != 16 {
            return Err(DicomError::BadPixelLayout(format!("BitsAllocated {bits_allocated}")));
        }
        if samples_per_pixel != 1 && samples_per_pixel != 3 {
            return Err(DicomError::BadPixelLayout(format!("SamplesPerPixel {samples_per_pixel}")));
        }
        if samples_per_pixel == 3 && ds.u16(tags::PLANAR_CONFIGURATION).unwrap_or(0) != 0 {
            return Err(DicomError::BadPixelLayout("planar configuration 1".into()));
        }
        Ok(PixelLayout {
            rows,
            columns,
            samples_per_pixel,
            bits_allocated,
            frames,
        })
    }

    pub fn frame_bytes(&self) -> usize {
        self.rows * self.columns * self.samples_per_pixel * (self.bits_allocated as usize / 8)
    }

    pub fn total_bytes(&self) -> usize {
        self.frame_bytes() * self.frames
    }
}

fn native_pixels(ds: &DataSet) -> Result<&[u8], DicomError> {
    let element = ds.get(tags::PIXEL_DATA).ok_or(DicomError::MissingAttribute("PixelData"))?;
    match &element.value {
        Value::Fragments(_) => Err(DicomError::UnsupportedCodec(ds.transfer_syntax().uid().to_string())),
        _ if ds.transfer_syntax().is_encapsulated() => {
            Err(DicomError::UnsupportedCodec(ds.transfer_syntax().uid().to_string()))
        }
        Value::Bytes(b) => Ok(b),
        Value::Sequence(_) => Err(DicomError::BadPixelLayout("PixelData is a sequence".into())),
    }
}

/// Splits native PixelData into frames.
pub fn get_frames(ds: &DataSet) -> Result<Vec<ImageFrame>, DicomError> {
    let data = native_pixels(ds)?;
    let layout = PixelLayout::of(ds)?;
    if data.len() < layout.total_bytes() {
        return Err(DicomError::BadPixelLayout(format!(
            "PixelData has {} bytes, layout needs {}",
            data.len(),
            layout.total_bytes()
        )));
    }
    let (w, h, c) = (layout.columns, layout.rows, layout.samples_per_pixel);
    data[..layout.total_bytes()]
        .chunks_exact(layout.frame_bytes().max(1))
        .take(layout.frames)
        .map(|chunk| {
            let frame = if layout.bits_allocated == 8 {
                ImageFrame::from_u8(w, h, c, chunk.to_vec())
            } else {
                ImageFrame::from_u16(
                    w,
                    h,
                    c,
                    chunk.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect(),
                )
            };
            frame.map_err(|e| DicomError::BadPixelLayout(e.to_string()))
        })
        .collect()
}

/// Replaces PixelData with `frames`, leaving every other element untouched.
/// Trailing bytes past the frame grid (odd-length padding) are preserved.
pub fn put_frames(ds: &DataSet, frames: &[ImageFrame]) -> Result<DataSet, DicomError> {
    let old = native_pixels(ds)?;
    let layout = PixelLayout::of(ds)?;
    if frames.len() != layout.frames {
        return Err(DicomError::DimensionMismatch(format!(
            "{} frames supplied, dataset has {}",
            frames.len(),
            layout.frames
        )));
    }
    let mut bytes = Vec::with_capacity(old.len().max(layout.total_bytes()));
    for (i, f) in frames.iter().enumerate() {
        if f.width() != layout.columns
            || f.height() != layout.rows
            || f.channels() != layout.samples_per_pixel
            || f.bit_depth() as u16 != layout.bits_allocated
        {
            return Err(DicomError::DimensionMismatch(format!(
                "frame {i} is {}x{}x{}@{} bits, dataset is {}x{}x{}@{} bits",
                f.width(),
                f.height(),
                f.channels(),
                f.bit_depth(),
                layout.columns,
                layout.rows,
                layout.samples_per_pixel,
                layout.bits_allocated
            )));
        }
        match f.samples() {
            Samples::U8(v) => bytes.extend_from_slice(v),
            Samples::U16(v) => bytes.extend(v.iter().flat_map(|s| s.to_le_bytes())),
        }
    }
    if old.len() > bytes.len() {
        bytes.extend_from_slice(&old[bytes.len()..]);
    }
    if bytes.len() % 2 == 1 {
        bytes.push(0);
    }
    let vr = ds.get(tags::PIXEL_DATA).map_or(Vr::OW, |e| e.vr);
    let mut out = ds.clone();
    out.insert(DataElement::new(tags::PIXEL_DATA, vr, Value::Bytes(bytes)));
    Ok(out)
}

/// Writes a complete image pixel module plus PixelData for `frames`
/// (all frames must share one shape). Used when building datasets.
pub fn set_pixel_module(ds: &mut DataSet, frames: &[ImageFrame]) -> Result<(), DicomError> {
    let first = frames
        .first()
        .ok_or_else(|| DicomError::DimensionMismatch("no frames".into()))?;
    if frames.iter().any(|f| !f.same_shape(first)) {
        return Err(DicomError::DimensionMismatch("frames differ in shape".into()));
    }
    let bits = first.bit_depth() as u16;
    let photometric = if first.channels() == 3 { "RGB" } else { "MONOCHROME2" };
    ds.insert(DataElement::u16(tags::SAMPLES_PER_PIXEL, first.channels() as u16));
    ds.insert(DataElement::text(tags::PHOTOMETRIC_INTERPRETATION, Vr::CS, photometric));
    if first.channels() == 3 {
        ds.insert(DataElement::u16(tags::PLANAR_CONFIGURATION, 0));
    }
    if frames.len() > 1 {
        ds.insert(DataElement::text(tags::NUMBER_OF_FRAMES, Vr::IS, &frames.len().to_string()));
    }
    ds.insert(DataElement::u16(tags::ROWS, first.height() as u16));
    ds.insert(DataElement::u16(tags::COLUMNS, first.width() as u16));
    ds.insert(DataElement::u16(tags::BITS_ALLOCATED, bits));
    ds.insert(DataElement::u16(tags::BITS_STORED, bits));
    ds.insert(DataElement::u16(tags::HIGH_BIT, bits - 1));
    ds.insert(DataElement::u16(tags::PIXEL_REPRESENTATION, 0));
    let mut bytes = Vec::new();
    for f in frames {
        match f.samples() {
            Samples::U8(v) => bytes.extend_from_slice(v),
            Samples::U16(v) => bytes.extend(v.iter().flat_map(|s| s.to_le_bytes())),
        }
    }
    if bytes.len() % 2 == 1 {
        bytes.push(0);
    }
    let vr = if bits == 8 { Vr::OB } else { Vr::OW };
    ds.insert(DataElement::new(tags::PIXEL_DATA, vr, Value::Bytes(bytes)));
    Ok(())
}
