//! Pixel containers shared by every stage: frames, binary masks and
//! axis-aligned rectangles.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("sample buffer has {actual} values, expected {expected} ({width}x{height}x{channels})")]
    BadLength {
        width: usize,
        height: usize,
        channels: usize,
        expected: usize,
        actual: usize,
    },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    BadChannels(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Interleaved sample storage.
#[derive(Clone, PartialEq, Eq)]
pub enum Samples {
    U8(Vec<u8>),
    U16(Vec<u16>),
}

impl fmt::Debug for Samples {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Samples::U8(v) => write!(f, "U8[{}]", v.len()),
            Samples::U16(v) => write!(f, "U16[{}]", v.len()),
        }
    }
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::U8(v) => v.len(),
            Samples::U16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One image plane (or interleaved RGB plane) of unsigned samples.
///
/// Invariant: `samples.len() == width * height * channels`, channels is 1 or 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageFrame {
    width: usize,
    height: usize,
    channels: usize,
    samples: Samples,
}

impl ImageFrame {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        samples: Samples,
    ) -> Result<Self, FrameError> {
        if channels != 1 && channels != 3 {
            return Err(FrameError::BadChannels(channels));
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(FrameError::BadLength {
                width,
                height,
                channels,
                expected,
                actual: samples.len(),
            });
        }
        Ok(ImageFrame {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn from_u8(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, FrameError> {
        Self::new(width, height, channels, Samples::U8(data))
    }

    pub fn from_u16(width: usize, height: usize, channels: usize, data: Vec<u16>) -> Result<Self, FrameError> {
        Self::new(width, height, channels, Samples::U16(data))
    }

    /// Single-channel 8-bit frame filled with `value`.
    pub fn filled_u8(width: usize, height: usize, value: u8) -> Self {
        ImageFrame {
            width,
            height,
            channels: 1,
            samples: Samples::U8(vec![value; width * height]),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn bit_depth(&self) -> u8 {
        match self.samples {
            Samples::U8(_) => 8,
            Samples::U16(_) => 16,
        }
    }

    /// Largest representable sample value (255 or 65535).
    pub fn max_value(&self) -> f64 {
        match self.samples {
            Samples::U8(_) => u8::MAX as f64,
            Samples::U16(_) => u16::MAX as f64,
        }
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn into_samples(self) -> Samples {
        self.samples
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.samples {
            Samples::U8(v) => Some(v),
            Samples::U16(_) => None,
        }
    }

    pub fn as_u8_mut(&mut self) -> Option<&mut [u8]> {
        match &mut self.samples {
            Samples::U8(v) => Some(v),
            Samples::U16(_) => None,
        }
    }

    pub fn as_u16(&self) -> Option<&[u16]> {
        match &self.samples {
            Samples::U16(v) => Some(v),
            Samples::U8(_) => None,
        }
    }

    /// Sample at interleaved index `i`, widened.
    #[inline]
    pub fn sample(&self, i: usize) -> u32 {
        match &self.samples {
            Samples::U8(v) => v[i] as u32,
            Samples::U16(v) => v[i] as u32,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u32 {
        self.sample((y * self.width + x) * self.channels + c)
    }

    pub fn same_shape(&self, other: &ImageFrame) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
            && self.bit_depth() == other.bit_depth()
    }

    pub fn check_mask(&self, mask: &Mask) -> Result<(), FrameError> {
        if mask.width() != self.width || mask.height() != self.height {
            return Err(FrameError::DimensionMismatch(format!(
                "frame {}x{} vs mask {}x{}",
                self.width,
                self.height,
                mask.width(),
                mask.height()
            )));
        }
        Ok(())
    }

    /// Per-pixel maximum over channels, as an 8-bit intensity plane.
    ///
    /// Returns `None` for 16-bit frames; window them first.
    pub fn max_channel_u8(&self) -> Option<Vec<u8>> {
        let data = self.as_u8()?;
        if self.channels == 1 {
            return Some(data.to_vec());
        }
        Some(
            data.chunks_exact(self.channels)
                .map(|px| px.iter().copied().max().unwrap_or(0))
                .collect(),
        )
    }
}

/// Binary pixel mask; `1` marks a pixel in the region.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![1; width * height],
        }
    }

    /// Any nonzero byte counts as set.
    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self, FrameError> {
        if bits.len() != width * height {
            return Err(FrameError::BadLength {
                width,
                height,
                channels: 1,
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Mask {
            width,
            height,
            bits: bits.into_iter().map(|b| (b != 0) as u8).collect(),
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y) as u8);
            }
        }
        Mask { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    #[inline]
    pub fn at(&self, i: usize) -> bool {
        self.bits[i] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b != 0)
    }

    /// Sets every pixel of `rect` (clipped to the mask).
    pub fn fill_rect(&mut self, rect: &Rect) {
        let x1 = (rect.x + rect.w).min(self.width);
        let y1 = (rect.y + rect.h).min(self.height);
        for y in rect.y.min(self.height)..y1 {
            let row = y * self.width;
            self.bits[row + rect.x.min(x1)..row + x1].fill(1);
        }
    }

    pub fn union_with(&mut self, other: &Mask) {
        debug_assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    /// Tight bounding box of the set pixels.
    pub fn bbox(&self) -> Option<Rect> {
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bounds = Some(match bounds {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bounds.map(|(x0, y0, x1, y1)| Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }
}

/// Axis-aligned pixel rectangle `[x, x+w) x [y, y+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width && self.bottom() <= height
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn union_bbox(&self, other: &Rect) -> Rect {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection(other).map_or(0, |r| r.area());
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Per-axis gaps between the two rectangles (0 where they overlap).
    pub fn gaps(&self, other: &Rect) -> (usize, usize) {
        let gx = other.x.saturating_sub(self.right()).max(self.x.saturating_sub(other.right()));
        let gy = other.y.saturating_sub(self.bottom()).max(self.y.saturating_sub(other.bottom()));
        (gx, gy)
    }
}

/// Min-max intensity window mapping a 16-bit frame onto 8 bits and back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub min: u16,
    pub max: u16,
}

impl Window {
    pub fn of(frame: &ImageFrame) -> Window {
        match frame.samples() {
            Samples::U8(v) => Window {
                min: v.iter().copied().min().unwrap_or(0) as u16,
                max: v.iter().copied().max().unwrap_or(0) as u16,
            },
            Samples::U16(v) => Window {
                min: v.iter().copied().min().unwrap_or(0),
                max: v.iter().copied().max().unwrap_or(0),
            },
        }
    }

    #[inline]
    pub fn forward(&self, v: u16) -> u8 {
        if self.max <= self.min {
            return 0;
        }
        let span = (self.max - self.min) as f64;
        let t = (v.clamp(self.min, self.max) - self.min) as f64 / span;
        (t * 255.0).round() as u8
    }

    #[inline]
    pub fn inverse(&self, v: u8) -> u16 {
        let span = self.max.saturating_sub(self.min) as f64;
        (self.min as f64 + (v as f64 / 255.0) * span).round() as u16
    }

    /// 8-bit view of a frame. 8-bit frames are returned unchanged.
    pub fn to_u8(&self, frame: &ImageFrame) -> ImageFrame {
        match frame.samples() {
            Samples::U8(_) => frame.clone(),
            Samples::U16(v) => ImageFrame {
                width: frame.width,
                height: frame.height,
                channels: frame.channels,
                samples: Samples::U8(v.iter().map(|&s| self.forward(s)).collect()),
            },
        }
    }

    /// Writes `processed` back at the original depth: pixels under `mask` are
    /// inverse-windowed, every other pixel is copied from `original`.
    pub fn restore_masked(
        &self,
        original: &ImageFrame,
        processed: &ImageFrame,
        mask: &Mask,
    ) -> Result<ImageFrame, FrameError> {
        original.check_mask(mask)?;
        let proc = processed.as_u8().ok_or_else(|| {
            FrameError::DimensionMismatch("processed frame must be 8-bit".into())
        })?;
        if processed.width != original.width
            || processed.height != original.height
            || processed.channels != original.channels
        {
            return Err(FrameError::DimensionMismatch("processed vs original".into()));
        }
        let ch = original.channels;
        let samples = match original.samples() {
            Samples::U8(orig) => Samples::U8(
                orig.iter()
                    .enumerate()
                    .map(|(i, &o)| if mask.at(i / ch) { proc[i] } else { o })
                    .collect(),
            ),
            Samples::U16(orig) => Samples::U16(
                orig.iter()
                    .enumerate()
                    .map(|(i, &o)| if mask.at(i / ch) { self.inverse(proc[i]) } else { o })
                    .collect(),
            ),
        };
        Ok(ImageFrame {
            samples,
            ..original.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_length_invariant() {
        assert!(ImageFrame::from_u8(4, 4, 1, vec![0; 16]).is_ok());
        assert!(matches!(
            ImageFrame::from_u8(4, 4, 3, vec![0; 16]),
            Err(FrameError::BadLength { expected: 48, .. })
        ));
        assert_eq!(ImageFrame::from_u8(1, 1, 2, vec![0; 2]), Err(FrameError::BadChannels(2)));
    }

    #[test]
    fn rect_geometry() {
        let a = Rect::new(0, 0, 4, 4);
        let b = Rect::new(2, 2, 4, 4);
        assert_eq!(a.intersection(&b), Some(Rect::new(2, 2, 2, 2)));
        assert!((a.iou(&b) - 4.0 / 28.0).abs() < 1e-12);
        assert_eq!(a.gaps(&Rect::new(7, 1, 2, 2)), (3, 0));
        assert_eq!(Rect::new(7, 1, 2, 2).gaps(&a), (3, 0));
        assert_eq!(a.union_bbox(&b), Rect::new(0, 0, 6, 6));
    }

    #[test]
    fn mask_fill_and_bbox() {
        let mut m = Mask::new(10, 10);
        m.fill_rect(&Rect::new(2, 3, 4, 2));
        m.fill_rect(&Rect::new(8, 8, 5, 5));
        assert_eq!(m.count(), 8 + 4);
        assert_eq!(m.bbox(), Some(Rect::new(2, 3, 8, 7)));
    }

    #[test]
    fn window_round_trip_outside_mask_is_exact() {
        let data: Vec<u16> = (0..16).map(|i| 1000 + i * 37).collect();
        let f = ImageFrame::from_u16(4, 4, 1, data.clone()).unwrap();
        let w = Window::of(&f);
        assert_eq!(w, Window { min: 1000, max: 1555 });
        let eight = w.to_u8(&f);
        let mut mask = Mask::new(4, 4);
        mask.set(1, 1, true);
        let back = w.restore_masked(&f, &eight, &mask).unwrap();
        let out = back.as_u16().unwrap();
        for i in 0..16 {
            if i == 5 {
                assert!((out[i] as i32 - data[i] as i32).abs() <= 2);
            } else {
                assert_eq!(out[i], data[i]);
            }
        }
    }
}
