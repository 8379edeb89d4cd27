//! Bundled 5x7 fixed-stroke bitmap font and the text rasterizer shared by
//! the overlay generator and the reference detector's templates.
//!
//! Glyph rows are stored top to bottom, bit 4 is the leftmost column.
//! Lowercase input renders with the uppercase glyph.

use thiserror::Error;

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FontError {
    #[error("character {0:?} is not in the bundled font")]
    Unsupported(char),
    #[error("font size {0} is below the 7 px minimum")]
    TooSmall(usize),
    #[error("empty text")]
    Empty,
}

#[rustfmt::skip]
const GLYPHS: &[(char, [u8; GLYPH_H])] = &[
    ('A', [0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001]),
    ('B', [0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110]),
    ('C', [0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110]),
    ('D', [0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100]),
    ('E', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111]),
    ('F', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('G', [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111]),
    ('H', [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001]),
    ('I', [0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110]),
    ('J', [0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100]),
    ('K', [0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001]),
    ('L', [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111]),
    ('M', [0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001]),
    ('N', [0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001]),
    ('O', [0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110]),
    ('P', [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('Q', [0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101]),
    ('R', [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001]),
    ('S', [0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110]),
    ('T', [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100]),
    ('U', [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110]),
    ('V', [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100]),
    ('W', [0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010]),
    ('X', [0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001]),
    ('Y', [0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100]),
    ('Z', [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111]),
    ('0', [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110]),
    ('1', [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110]),
    ('2', [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111]),
    ('3', [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110]),
    ('4', [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010]),
    ('5', [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110]),
    ('6', [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110]),
    ('7', [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000]),
    ('8', [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110]),
    ('9', [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100]),
    ('-', [0b00000, 0b00000, 0b00000, 0b11111, 0b00000, 0b00000, 0b00000]),
    ('.', [0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100]),
    ('/', [0b00000, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b00000]),
    (':', [0b00000, 0b01100, 0b01100, 0b00000, 0b01100, 0b01100, 0b00000]),
    ('^', [0b00100, 0b01010, 0b10001, 0b00000, 0b00000, 0b00000, 0b00000]),
    ('#', [0b01010, 0b01010, 0b11111, 0b01010, 0b11111, 0b01010, 0b01010]),
    (',', [0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b00100, 0b01000]),
    ('\'', [0b01100, 0b00100, 0b01000, 0b00000, 0b00000, 0b00000, 0b00000]),
    ('(', [0b00010, 0b00100, 0b01000, 0b01000, 0b01000, 0b00100, 0b00010]),
    (')', [0b01000, 0b00100, 0b00010, 0b00010, 0b00010, 0b00100, 0b01000]),
];

/// Space advances this many glyph columns.
const SPACE_COLS: usize = 3;

/// A single glyph bitmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Glyph {
    pub ch: char,
    rows: [u8; GLYPH_H],
}

impl Glyph {
    #[inline]
    pub fn bit(&self, col: usize, row: usize) -> bool {
        col < GLYPH_W && row < GLYPH_H && self.rows[row] >> (GLYPH_W - 1 - col) & 1 == 1
    }

    pub fn ink_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// First and last column holding ink.
    pub fn ink_cols(&self) -> (usize, usize) {
        let any = |c: usize| (0..GLYPH_H).any(|r| self.bit(c, r));
        let first = (0..GLYPH_W).find(|&c| any(c)).unwrap_or(0);
        let last = (0..GLYPH_W).rev().find(|&c| any(c)).unwrap_or(GLYPH_W - 1);
        (first, last)
    }
}

pub fn glyph(ch: char) -> Option<Glyph> {
    let up = ch.to_ascii_uppercase();
    GLYPHS.iter().find(|(c, _)| *c == up).map(|&(ch, rows)| Glyph { ch, rows })
}

pub fn glyphs() -> impl Iterator<Item = Glyph> {
    GLYPHS.iter().map(|&(ch, rows)| Glyph { ch, rows })
}

pub fn supports(ch: char) -> bool {
    ch == ' ' || glyph(ch).is_some()
}

/// Width of one glyph cell at `font_px`: `round(5 * font_px / 7)`.
pub fn cell_width(font_px: usize) -> usize {
    ((GLYPH_W * font_px) as f64 / GLYPH_H as f64).round().max(1.0) as usize
}

pub fn space_width(font_px: usize) -> usize {
    ((SPACE_COLS * font_px) as f64 / GLYPH_H as f64).round().max(1.0) as usize
}

/// Horizontal layout of a line of text, unrotated, in its own pixel frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TextLayout {
    font_px: usize,
    cells: Vec<(usize, usize, Option<Glyph>)>,
    width: usize,
}

impl TextLayout {
    pub fn new(text: &str, font_px: usize, spacing: usize) -> Result<Self, FontError> {
        if font_px < GLYPH_H {
            return Err(FontError::TooSmall(font_px));
        }
        if text.is_empty() {
            return Err(FontError::Empty);
        }
        let (cw, sw) = (cell_width(font_px), space_width(font_px));
        let mut cells = Vec::new();
        let mut x = 0;
        for (i, ch) in text.chars().enumerate() {
            if i > 0 {
                x += spacing;
            }
            let (w, g) = if ch == ' ' {
                (sw, None)
            } else {
                (cw, Some(glyph(ch).ok_or(FontError::Unsupported(ch))?))
            };
            cells.push((x, w, g));
            x += w;
        }
        Ok(TextLayout {
            font_px,
            cells,
            width: x,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.font_px
    }

    /// Whether the point `(u, v)` of the layout plane falls on ink.
    pub fn ink(&self, u: f64, v: f64) -> bool {
        if u < 0.0 || v < 0.0 || u >= self.width as f64 || v >= self.font_px as f64 {
            return false;
        }
        let i = self.cells.partition_point(|&(x0, _, _)| x0 as f64 <= u);
        let Some(&(x0, w, Some(g))) = i.checked_sub(1).and_then(|i| self.cells.get(i)) else {
            return false;
        };
        let du = u - x0 as f64;
        if du >= w as f64 {
            return false;
        }
        let col = (du * GLYPH_W as f64 / w as f64).floor() as usize;
        let row = ((v * GLYPH_H as f64 / self.font_px as f64).floor() as usize).min(GLYPH_H - 1);
        g.bit(col, row)
    }
}

/// Exact cosine and sine for multiples of 90 degrees.
fn cos_sin(degrees: f64) -> (f64, f64) {
    let quarter = degrees / 90.0;
    if quarter == quarter.round() {
        return match (quarter as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    let r = degrees.to_radians();
    (r.cos(), r.sin())
}

/// Size of the axis-aligned box enclosing a `w x h` rectangle rotated by
/// `degrees` about its center.
pub fn rotated_extent(w: usize, h: usize, degrees: f64) -> (usize, usize) {
    let (c, s) = cos_sin(degrees);
    let (c, s) = (c.abs(), s.abs());
    let (w, h) = (w as f64, h as f64);
    let bw = (w * c + h * s - 1e-9).ceil().max(1.0) as usize;
    let bh = (w * s + h * c - 1e-9).ceil().max(1.0) as usize;
    (bw, bh)
}

/// Binary raster of rendered text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Raster {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Renders `text` rotated counter-clockwise (as displayed) by `degrees`.
/// The raster is the rotated extent; each pixel samples the layout at its
/// center through the inverse rotation.
pub fn rasterize(text: &str, font_px: usize, spacing: usize, degrees: f64) -> Result<Raster, FontError> {
    let layout = TextLayout::new(text, font_px, spacing)?;
    let (w, h) = (layout.width(), layout.height());
    let (bw, bh) = rotated_extent(w, h, degrees);
    let (c, s) = cos_sin(degrees);
    let mut bits = vec![false; bw * bh];
    for j in 0..bh {
        for i in 0..bw {
            let x = i as f64 + 0.5 - bw as f64 / 2.0;
            let y = j as f64 + 0.5 - bh as f64 / 2.0;
            let u = x * c - y * s + w as f64 / 2.0;
            let v = x * s + y * c + h as f64 / 2.0;
            bits[j * bw + i] = layout.ink(u, v);
        }
    }
    Ok(Raster {
        width: bw,
        height: bh,
        bits,
    })
}
