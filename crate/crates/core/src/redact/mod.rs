//! Burned-in text: the detector seam, the reference detector, box masking
//! and the text sidecar.

mod reference;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::frame::{ImageFrame, Mask, Rect, Samples};

pub use reference::{detect_reference, transcribe, ReferenceDetector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBox {
    pub bbox: Rect,
    pub transcript: String,
    pub confidence: f64,
    pub frame_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Pixels at or above this level (max over channels) count as text.
    pub intensity_floor: u8,
    /// Components closer than this on both axes join one word box.
    /// `None` uses 1.5 x the median component size.
    pub word_gap: Option<f64>,
    /// Components with fewer pixels are ignored.
    pub min_pixels: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            intensity_floor: 230,
            word_gap: None,
            min_pixels: 1,
        }
    }
}

/// Anything that finds text boxes in a frame. Returned boxes lie inside
/// the frame and are at least 1x1.
pub trait Detector: Send + Sync {
    fn name(&self) -> &str;
    fn detect(&self, frame: &ImageFrame, frame_index: usize) -> Vec<TextBox>;
}

type Factory = Box<dyn Fn(&DetectorParams) -> Box<dyn Detector> + Send + Sync>;

/// Detectors by configuration name.
pub struct DetectorRegistry {
    factories: BTreeMap<String, Factory>,
}

impl Default for DetectorRegistry {
    fn default() -> Self {
        let mut r = DetectorRegistry {
            factories: BTreeMap::new(),
        };
        r.register("reference", |p| Box::new(ReferenceDetector::new(p.clone())));
        r
    }
}

impl DetectorRegistry {
    pub fn register(
        &mut self,
        name: &str,
        factory: impl Fn(&DetectorParams) -> Box<dyn Detector> + Send + Sync + 'static,
    ) {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn create(&self, name: &str, params: &DetectorParams) -> Option<Box<dyn Detector>> {
        self.factories.get(name).map(|f| f(params))
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}

/// Zeroes every pixel inside any box. The mask is the union of the boxes
/// clipped to the frame.
pub fn redact(frame: &ImageFrame, boxes: &[TextBox]) -> (ImageFrame, Mask) {
    let mut mask = Mask::new(frame.width(), frame.height());
    for b in boxes {
        mask.fill_rect(&b.bbox);
    }
    let ch = frame.channels();
    let samples = match frame.samples() {
        Samples::U8(v) => Samples::U8(v.iter().enumerate().map(|(i, &s)| if mask.at(i / ch) { 0 } else { s }).collect()),
        Samples::U16(v) => Samples::U16(v.iter().enumerate().map(|(i, &s)| if mask.at(i / ch) { 0 } else { s }).collect()),
    };
    let out = ImageFrame::new(frame.width(), frame.height(), ch, samples).expect("same shape");
    (out, mask)
}

pub const SIDECAR_HEADER: [&str; 8] = ["image_id", "frame_index", "x", "y", "w", "h", "transcript", "confidence"];

/// CSV sink for extracted text. Text fields are always quoted.
pub struct Sidecar<W: Write> {
    wtr: csv::Writer<W>,
}

impl<W: Write> Sidecar<W> {
    pub fn new(inner: W) -> csv::Result<Self> {
        let mut wtr = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::NonNumeric)
            .from_writer(inner);
        wtr.write_record(SIDECAR_HEADER)?;
        Ok(Sidecar { wtr })
    }

    pub fn into_inner(self) -> csv::Result<W> {
        self.wtr.into_inner().map_err(|e| e.into_error().into())
    }
}

/// Appends one row per box.
pub fn sequester<W: Write>(boxes: &[TextBox], image_id: &str, sink: &mut Sidecar<W>) -> csv::Result<usize> {
    for b in boxes {
        sink.wtr.write_record([
            image_id.to_string(),
            b.frame_index.to_string(),
            b.bbox.x.to_string(),
            b.bbox.y.to_string(),
            b.bbox.w.to_string(),
            b.bbox.h.to_string(),
            b.transcript.clone(),
            format!("{:.4}", b.confidence),
        ])?;
    }
    sink.wtr.flush()?;
    Ok(boxes.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tb(x: usize, y: usize, w: usize, h: usize) -> TextBox {
        TextBox {
            bbox: Rect::new(x, y, w, h),
            transcript: String::new(),
            confidence: 1.0,
            frame_index: 0,
        }
    }

    #[test]
    fn redact_empty_and_full() {
        let f = ImageFrame::filled_u8(6, 4, 77);
        let (out, m) = redact(&f, &[]);
        assert_eq!(out, f);
        assert!(m.is_empty());
        let (out, m) = redact(&f, &[tb(0, 0, 6, 4)]);
        assert!(out.as_u8().unwrap().iter().all(|&v| v == 0));
        assert!(m.is_full());
    }

    #[test]
    fn overlapping_boxes_count_once() {
        let f = ImageFrame::filled_u8(10, 10, 9);
        let (_, m) = redact(&f, &[tb(0, 0, 4, 4), tb(2, 2, 4, 4)]);
        assert_eq!(m.count(), 16 + 16 - 4);
    }

    #[test]
    fn sidecar_quotes_text() {
        let mut s = Sidecar::new(Vec::new()).unwrap();
        let mut b = tb(1, 2, 3, 4);
        b.transcript = "DOE, \"JANE\"".into();
        b.confidence = 0.5;
        assert_eq!(sequester(&[b], "study1", &mut s).unwrap(), 1);
        let text = String::from_utf8(s.into_inner().unwrap()).unwrap();
        assert_eq!(
            text,
            "\"image_id\",\"frame_index\",\"x\",\"y\",\"w\",\"h\",\"transcript\",\"confidence\"\n\
             \"study1\",0,1,2,3,4,\"DOE, \"\"JANE\"\"\",0.5000\n"
        );
    }

    #[test]
    fn registry_knows_reference() {
        let r = DetectorRegistry::default();
        assert_eq!(r.names(), vec!["reference"]);
        assert!(r.create("crnn", &DetectorParams::default()).is_none());
        assert_eq!(r.create("reference", &DetectorParams::default()).unwrap().name(), "reference");
    }
}
