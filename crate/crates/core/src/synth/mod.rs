//! Synthetic burned-in PHI: fictitious text, opaque overlays with exact
//! ground truth, and the seeded corpus generator.

mod corpus;
pub mod words;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::font::{self, FontError};
use crate::frame::{FrameError, ImageFrame, Mask, Rect, Samples};

pub use corpus::{generate_corpus, phantom, place_items, read_manifest, ManifestRow, SynthConfig, SynthSummary};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Font(#[from] FontError),
    #[error("overlay item {index} ({w}x{h} at {x},{y}) does not fit in the {fw}x{fh} frame")]
    Clipped {
        index: usize,
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        fw: usize,
        fh: usize,
    },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Png(#[from] crate::png_io::PngError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextKind {
    Name,
    Address,
    Mrn,
    Date,
    SequenceLabel,
    Institution,
}

impl TextKind {
    pub const ALL: [TextKind; 6] = [
        TextKind::Name,
        TextKind::Address,
        TextKind::Mrn,
        TextKind::Date,
        TextKind::SequenceLabel,
        TextKind::Institution,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TextKind::Name => "name",
            TextKind::Address => "address",
            TextKind::Mrn => "mrn",
            TextKind::Date => "date",
            TextKind::SequenceLabel => "sequence_label",
            TextKind::Institution => "institution",
        }
    }
}

impl fmt::Display for TextKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TextKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TextKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| format!("unknown text kind {s:?}"))
    }
}

fn pick<'a>(rng: &mut impl Rng, list: &[&'a str]) -> &'a str {
    list[rng.random_range(0..list.len())]
}

/// Fictitious text of the given kind, fully determined by `seed`.
pub fn fabricate_text(seed: u64, kind: TextKind) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        TextKind::Name => format!("{}^{}", pick(&mut rng, words::LAST_NAMES), pick(&mut rng, words::FIRST_NAMES)),
        TextKind::Address => {
            if rng.random_bool(0.3) {
                return format!("{}, {}", pick(&mut rng, words::CITIES), pick(&mut rng, words::STATES));
            }
            let num = rng.random_range(1..10_000);
            let street = pick(&mut rng, words::STREET_NAMES);
            format!("{num} {street} {}", pick(&mut rng, words::STREET_SUFFIXES))
        }
        TextKind::Mrn => {
            let letter = (b'A' + rng.random_range(0..26u8)) as char;
            format!("{letter}{:07}", rng.random_range(0..10_000_000u32))
        }
        TextKind::Date => {
            let (y, m, d) = (
                rng.random_range(1930..=2023),
                rng.random_range(1..=12),
                rng.random_range(1..=28),
            );
            match rng.random_range(0..3) {
                0 => format!("{y:04}-{m:02}-{d:02}"),
                1 => format!("{m:02}/{d:02}/{y:04}"),
                _ => format!("{y:04}{m:02}{d:02}"),
            }
        }
        TextKind::SequenceLabel => pick(&mut rng, words::SEQUENCE_LABELS).to_string(),
        TextKind::Institution => format!(
            "{} {}",
            pick(&mut rng, words::INSTITUTION_PREFIXES),
            pick(&mut rng, words::INSTITUTION_TYPES)
        ),
    }
}

/// One line of burned-in text. `x, y` is the top-left corner of the
/// rotated extent; `rotation` is counter-clockwise in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayItem {
    pub text: String,
    pub x: usize,
    pub y: usize,
    pub font_px: usize,
    pub rotation: f64,
    pub intensity: u8,
    pub spacing: usize,
}

impl OverlayItem {
    pub fn raster(&self) -> Result<font::Raster, FontError> {
        font::rasterize(&self.text, self.font_px, self.spacing, self.rotation)
    }

    /// Rotated extent placed at the anchor.
    pub fn extent(&self) -> Result<Rect, FontError> {
        let layout = font::TextLayout::new(&self.text, self.font_px, self.spacing)?;
        let (w, h) = font::rotated_extent(layout.width(), layout.height(), self.rotation);
        Ok(Rect::new(self.x, self.y, w, h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Union of rendered glyph pixels.
    pub mask: Mask,
    /// Each item with the tight box of its own glyph pixels.
    pub items: Vec<(OverlayItem, Rect)>,
}

impl GroundTruth {
    /// Union of the item boxes.
    pub fn box_mask(&self) -> Mask {
        let mut m = Mask::new(self.mask.width(), self.mask.height());
        for (_, r) in &self.items {
            m.fill_rect(r);
        }
        m
    }
}

/// Burns `items` into a copy of `frame` by opaque replacement on every
/// channel. A pixel whose value already equals the overlay level gets the
/// level with its lowest bit flipped, so the output differs from the input
/// exactly on the mask.
pub fn render_overlay(frame: &ImageFrame, items: &[OverlayItem]) -> Result<(ImageFrame, GroundTruth), SynthError> {
    let (fw, fh, ch) = (frame.width(), frame.height(), frame.channels());
    let mut mask = Mask::new(fw, fh);
    let mut levels: Vec<Option<u8>> = vec![None; fw * fh];
    let mut truth = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let r = item.raster()?;
        if item.x + r.width > fw || item.y + r.height > fh {
            return Err(SynthError::Clipped {
                index,
                x: item.x,
                y: item.y,
                w: r.width,
                h: r.height,
                fw,
                fh,
            });
        }
        let mut own = Mask::new(r.width, r.height);
        for y in 0..r.height {
            for x in 0..r.width {
                if r.get(x, y) {
                    own.set(x, y, true);
                    mask.set(item.x + x, item.y + y, true);
                    levels[(item.y + y) * fw + item.x + x] = Some(item.intensity);
                }
            }
        }
        let tight = own
            .bbox()
            .map(|b| Rect::new(item.x + b.x, item.y + b.y, b.w, b.h))
            .unwrap_or(Rect::new(item.x, item.y, 0, 0));
        truth.push((item.clone(), tight));
    }

    fn burn<T: Copy + PartialEq + std::ops::BitXor<Output = T>>(
        data: &mut [T],
        levels: &[Option<u8>],
        ch: usize,
        one: T,
        conv: impl Fn(u8) -> T,
    ) {
        for (px, level) in levels.iter().enumerate() {
            let Some(level) = *level else { continue };
            let v = conv(level);
            let cell = &mut data[px * ch..(px + 1) * ch];
            let v = if cell.iter().all(|&s| s == v) { v ^ one } else { v };
            cell.fill(v);
        }
    }

    let samples = match frame.samples().clone() {
        Samples::U8(mut d) => {
            burn(&mut d, &levels, ch, 1u8, |l| l);
            Samples::U8(d)
        }
        Samples::U16(mut d) => {
            burn(&mut d, &levels, ch, 1u16, |l| l as u16 * 257);
            Samples::U16(d)
        }
    };
    let out = ImageFrame::new(fw, fh, ch, samples)?;
    Ok((out, GroundTruth { mask, items: truth }))
}
