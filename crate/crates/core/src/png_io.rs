//! PNG encoding for standalone-image mode and mask export.

use std::fs;
use std::io::{BufReader, Cursor};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};
use thiserror::Error;

use crate::frame::{FrameError, ImageFrame, Mask, Samples};

#[derive(Debug, Error)]
pub enum PngError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("unsupported png layout: {0:?} at {1:?}")]
    Unsupported(ColorType, BitDepth),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Decodes a PNG into a frame. Gray and RGB are kept, alpha is dropped,
/// palettes and sub-byte depths are expanded.
pub fn decode_frame(bytes: &[u8]) -> Result<ImageFrame, PngError> {
    let mut decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or(PngError::Unsupported(ColorType::Grayscale, BitDepth::Sixteen))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width as usize, info.height as usize);

    let (src_channels, keep) = match info.color_type {
        ColorType::Grayscale => (1, 1),
        ColorType::GrayscaleAlpha => (2, 1),
        ColorType::Rgb => (3, 3),
        ColorType::Rgba => (4, 3),
        other => return Err(PngError::Unsupported(other, info.bit_depth)),
    };
    let frame = match info.bit_depth {
        BitDepth::Eight => {
            let data: Vec<u8> = buf
                .chunks_exact(src_channels)
                .flat_map(|px| px[..keep].iter().copied())
                .collect();
            ImageFrame::from_u8(w, h, keep, data)?
        }
        BitDepth::Sixteen => {
            let data: Vec<u16> = buf
                .chunks_exact(2 * src_channels)
                .flat_map(|px| {
                    px[..2 * keep]
                        .chunks_exact(2)
                        .map(|b| u16::from_be_bytes([b[0], b[1]]))
                        .collect::<Vec<_>>()
                })
                .collect();
            ImageFrame::from_u16(w, h, keep, data)?
        }
        other => return Err(PngError::Unsupported(info.color_type, other)),
    };
    Ok(frame)
}

pub fn encode_frame(frame: &ImageFrame) -> Result<Vec<u8>, PngError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, frame.width() as u32, frame.height() as u32);
        enc.set_color(if frame.channels() == 3 {
            ColorType::Rgb
        } else {
            ColorType::Grayscale
        });
        match frame.samples() {
            Samples::U8(v) => {
                enc.set_depth(BitDepth::Eight);
                let mut writer = enc.write_header()?;
                writer.write_image_data(v)?;
            }
            Samples::U16(v) => {
                enc.set_depth(BitDepth::Sixteen);
                let mut writer = enc.write_header()?;
                let bytes: Vec<u8> = v.iter().flat_map(|s| s.to_be_bytes()).collect();
                writer.write_image_data(&bytes)?;
            }
        }
    }
    Ok(out)
}

/// 1-bit grayscale PNG, white where the mask is set.
pub fn encode_mask(mask: &Mask) -> Result<Vec<u8>, PngError> {
    let (w, h) = (mask.width(), mask.height());
    let stride = w.div_ceil(8);
    let mut packed = vec![0u8; stride * h];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
        enc.set_color(ColorType::Grayscale);
        enc.set_depth(BitDepth::One);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&packed)?;
    }
    Ok(out)
}

/// Any nonzero sample (in any channel) is inside the mask.
pub fn decode_mask(bytes: &[u8]) -> Result<Mask, PngError> {
    let frame = decode_frame(bytes)?;
    let ch = frame.channels();
    let bits = (0..frame.pixel_count())
        .map(|p| (0..ch).any(|c| frame.sample(p * ch + c) != 0) as u8)
        .collect();
    Ok(Mask::from_bits(frame.width(), frame.height(), bits)?)
}

pub fn read_frame(path: &Path) -> Result<ImageFrame, PngError> {
    decode_frame(&fs::read(path)?)
}

pub fn write_frame(path: &Path, frame: &ImageFrame) -> Result<(), PngError> {
    fs::write(path, encode_frame(frame)?)?;
    Ok(())
}

pub fn read_mask(path: &Path) -> Result<Mask, PngError> {
    decode_mask(&fs::read(path)?)
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<(), PngError> {
    fs::write(path, encode_mask(mask)?)?;
    Ok(())
}
