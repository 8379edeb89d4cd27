//! Client for an external inpainting service over TCP.
//!
//! Request: four fields, each a big-endian `u32` length followed by bytes:
//! PNG masked frame (RGB, `side x side`), PNG mask (1-bit, same size),
//! UTF-8 prompt, UTF-8 request id. Response: the echoed request id and a PNG
//! frame of the same size, framed the same way.

use std::io::{self, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use image::imageops::{self, FilterType};
use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{composite_identity, InpaintError};
use crate::frame::{ImageFrame, Mask, Window};
use crate::png_io::{self, PngError};

const MAX_FIELD: u32 = 256 << 20;

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("network: {0}")]
    Network(#[from] io::Error),
    #[error("backend answered request {got:?}, expected {expected:?}")]
    IdMismatch { expected: String, got: String },
    #[error("backend returned {got_w}x{got_h}, expected {side}x{side}")]
    BadSize { got_w: usize, got_h: usize, side: usize },
    #[error("backend frame: {0}")]
    Png(#[from] PngError),
    #[error("external backend needs an 8-bit frame")]
    Depth,
    #[error(transparent)]
    Inpaint(#[from] InpaintError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    /// `host:port`.
    pub endpoint: String,
    pub timeout_ms: u64,
    pub retries: usize,
    /// Square working size of the backend.
    pub side: usize,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            endpoint: "127.0.0.1:7860".into(),
            timeout_ms: 30_000,
            retries: 2,
            side: 512,
        }
    }
}

pub struct BackendRequest<'a> {
    /// Redacted frame; pixels outside the mask are the originals.
    pub frame: &'a ImageFrame,
    pub mask: &'a Mask,
    /// Empty for the no-context variant, the modality name otherwise.
    pub prompt: String,
    pub request_id: String,
}

pub fn write_field(w: &mut impl Write, bytes: &[u8]) -> io::Result<()> {
    w.write_all(&(bytes.len() as u32).to_be_bytes())?;
    w.write_all(bytes)
}

pub fn read_field(r: &mut impl Read) -> io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len);
    if len > MAX_FIELD {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("field of {len} bytes")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn to_rgb(frame: &ImageFrame) -> Result<RgbImage, ExternalError> {
    let data = frame.as_u8().ok_or(ExternalError::Depth)?;
    let rgb: Vec<u8> = if frame.channels() == 3 {
        data.to_vec()
    } else {
        data.iter().flat_map(|&v| [v, v, v]).collect()
    };
    Ok(RgbImage::from_raw(frame.width() as u32, frame.height() as u32, rgb).expect("rgb buffer size"))
}

fn from_rgb(img: &RgbImage, channels: usize) -> ImageFrame {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<u8> = if channels == 3 {
        img.as_raw().clone()
    } else {
        img.pixels()
            .map(|p| ((p[0] as u16 + p[1] as u16 + p[2] as u16 + 1) / 3) as u8)
            .collect()
    };
    ImageFrame::from_u8(w, h, channels, data).expect("frame buffer size")
}

fn resize_mask(mask: &Mask, w: usize, h: usize) -> Mask {
    let gray = GrayImage::from_raw(
        mask.width() as u32,
        mask.height() as u32,
        mask.bits().iter().map(|&b| b * 255).collect(),
    )
    .expect("mask buffer size");
    let out = imageops::resize(&gray, w as u32, h as u32, FilterType::Nearest);
    Mask::from_bits(w, h, out.into_raw()).expect("mask size")
}

/// Encodes the request body at the backend's working size.
pub fn encode_request(req: &BackendRequest, side: usize) -> Result<Vec<u8>, ExternalError> {
    let rgb = to_rgb(req.frame)?;
    let sent = imageops::resize(&rgb, side as u32, side as u32, FilterType::Triangle);
    let sent = from_rgb(&sent, 3);
    let mask = resize_mask(req.mask, side, side);
    let mut body = Vec::new();
    write_field(&mut body, &png_io::encode_frame(&sent)?)?;
    write_field(&mut body, &png_io::encode_mask(&mask)?)?;
    write_field(&mut body, req.prompt.as_bytes())?;
    write_field(&mut body, req.request_id.as_bytes())?;
    Ok(body)
}

fn exchange(body: &[u8], cfg: &ExternalConfig) -> io::Result<(String, Vec<u8>)> {
    let timeout = Duration::from_millis(cfg.timeout_ms.max(1));
    let addr = cfg
        .endpoint
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, "endpoint does not resolve"))?;
    let mut stream = TcpStream::connect_timeout(&addr, timeout)?;
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.write_all(body)?;
    stream.flush()?;
    let id = String::from_utf8_lossy(&read_field(&mut stream)?).into_owned();
    let png = read_field(&mut stream)?;
    Ok((id, png))
}

/// Sends the request, resamples the answer back to the frame size and
/// composites it so that only mask pixels change.
pub fn external_inpaint(req: &BackendRequest, cfg: &ExternalConfig) -> Result<ImageFrame, ExternalError> {
    let body = encode_request(req, cfg.side)?;
    let mut attempt = 0;
    let (id, png) = loop {
        match exchange(&body, cfg) {
            Ok(answer) => break answer,
            Err(err) if attempt < cfg.retries => {
                log::warn!("external backend attempt {} failed: {err}", attempt + 1);
                attempt += 1;
            }
            Err(err) => return Err(err.into()),
        }
    };
    if id != req.request_id {
        return Err(ExternalError::IdMismatch {
            expected: req.request_id.clone(),
            got: id,
        });
    }
    let answer = png_io::decode_frame(&png)?;
    if answer.width() != cfg.side || answer.height() != cfg.side {
        return Err(ExternalError::BadSize {
            got_w: answer.width(),
            got_h: answer.height(),
            side: cfg.side,
        });
    }
    let answer = if answer.bit_depth() == 8 {
        to_rgb(&answer)?
    } else {
        to_rgb(&Window::of(&answer).to_u8(&answer))?
    };
    let back = imageops::resize(&answer, req.frame.width() as u32, req.frame.height() as u32, FilterType::Triangle);
    let restored = from_rgb(&back, req.frame.channels());
    Ok(composite_identity(req.frame, &restored, req.mask)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_framing_round_trips() {
        let mut buf = Vec::new();
        write_field(&mut buf, b"abc").unwrap();
        write_field(&mut buf, b"").unwrap();
        assert_eq!(&buf[..4], &[0, 0, 0, 3]);
        let mut r = io::Cursor::new(buf);
        assert_eq!(read_field(&mut r).unwrap(), b"abc");
        assert_eq!(read_field(&mut r).unwrap(), b"");
        assert!(read_field(&mut r).is_err());
    }

    #[test]
    fn request_is_resampled_to_side() {
        let f = ImageFrame::filled_u8(30, 20, 90);
        let m = Mask::from_fn(30, 20, |x, _| x < 10);
        let body = encode_request(
            &BackendRequest {
                frame: &f,
                mask: &m,
                prompt: "CT".into(),
                request_id: "r1".into(),
            },
            64,
        )
        .unwrap();
        let mut r = io::Cursor::new(body);
        let frame = png_io::decode_frame(&read_field(&mut r).unwrap()).unwrap();
        assert_eq!((frame.width(), frame.height(), frame.channels()), (64, 64, 3));
        let mask = png_io::decode_mask(&read_field(&mut r).unwrap()).unwrap();
        assert!(mask.get(0, 0) && !mask.get(63, 0));
        assert_eq!(read_field(&mut r).unwrap(), b"CT");
        assert_eq!(read_field(&mut r).unwrap(), b"r1");
    }
}
