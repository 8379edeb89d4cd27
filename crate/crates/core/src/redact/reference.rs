//! Stand-in detector for near-white burned-in text: threshold, 8-connected
//! components, single-linkage word grouping, and transcription by template
//! scoring against the bundled font decoded with best-path CTC.

use std::collections::VecDeque;

use super::{Detector, DetectorParams, TextBox};
use crate::ctc::{best_path_decode_with, Alphabet, CollapseRule, ProbMatrix, BLANK};
use crate::font::{self, Glyph, GLYPH_H, GLYPH_W};
use crate::frame::{ImageFrame, Rect, Window};

pub struct ReferenceDetector {
    params: DetectorParams,
}

impl ReferenceDetector {
    pub fn new(params: DetectorParams) -> Self {
        ReferenceDetector { params }
    }
}

impl Detector for ReferenceDetector {
    fn name(&self) -> &str {
        "reference"
    }

    fn detect(&self, frame: &ImageFrame, frame_index: usize) -> Vec<TextBox> {
        let mut boxes = detect_reference(frame, &self.params);
        boxes.iter_mut().for_each(|b| b.frame_index = frame_index);
        boxes
    }
}

struct Component {
    rect: Rect,
    pixels: usize,
}

/// Labels 8-connected foreground pixels; returns the label plane
/// (`usize::MAX` for background) and the components.
fn components(fg: &[bool], w: usize, h: usize) -> (Vec<usize>, Vec<Component>) {
    let mut label = vec![usize::MAX; w * h];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !fg[start] || label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        label[start] = id;
        queue.push_back(start);
        let (mut x0, mut y0, mut x1, mut y1, mut n) = (w, h, 0, 0, 0);
        while let Some(p) = queue.pop_front() {
            let (x, y) = (p % w, p / w);
            (x0, y0, x1, y1, n) = (x0.min(x), y0.min(y), x1.max(x), y1.max(y), n + 1);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if fg[q] && label[q] == usize::MAX {
                        label[q] = id;
                        queue.push_back(q);
                    }
                }
            }
        }
        comps.push(Component {
            rect: Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
            pixels: n,
        });
    }
    (label, comps)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn detect_reference(frame: &ImageFrame, params: &DetectorParams) -> Vec<TextBox> {
    let view;
    let frame = if frame.bit_depth() == 8 {
        frame
    } else {
        view = Window::of(frame).to_u8(frame);
        &view
    };
    let plane = frame.max_channel_u8().expect("8-bit view");
    let (w, h) = (frame.width(), frame.height());
    let fg: Vec<bool> = plane.iter().map(|&v| v >= params.intensity_floor).collect();
    let (label, all) = components(&fg, w, h);
    let keep: Vec<usize> = (0..all.len()).filter(|&i| all[i].pixels >= params.min_pixels).collect();
    if keep.is_empty() {
        return Vec::new();
    }
    let gap = params
        .word_gap
        .unwrap_or_else(|| 1.5 * median(keep.iter().map(|&i| all[i].rect.w.max(all[i].rect.h) as f64).collect()));

    let mut parent: Vec<usize> = (0..keep.len()).collect();
    for a in 0..keep.len() {
        for b in a + 1..keep.len() {
            let (gx, gy) = all[keep[a]].rect.gaps(&all[keep[b]].rect);
            if gx as f64 <= gap && gy as f64 <= gap {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    // group id per original component, in order of first member
    let mut group_of = vec![usize::MAX; all.len()];
    let mut groups: Vec<Rect> = Vec::new();
    let mut root_group = vec![usize::MAX; keep.len()];
    for (k, &ci) in keep.iter().enumerate() {
        let root = find(&mut parent, k);
        if root_group[root] == usize::MAX {
            root_group[root] = groups.len();
            groups.push(all[ci].rect);
        } else {
            let g = root_group[root];
            groups[g] = groups[g].union_bbox(&all[ci].rect);
        }
        group_of[ci] = root_group[root];
    }

    groups
        .iter()
        .enumerate()
        .map(|(g, r)| {
            let mut crop = vec![false; r.w * r.h];
            for y in 0..r.h {
                for x in 0..r.w {
                    let l = label[(r.y + y) * w + r.x + x];
                    crop[y * r.w + x] = l != usize::MAX && group_of[l] == g;
                }
            }
            let (transcript, confidence) = transcribe(&crop, r.w, r.h);
            TextBox {
                bbox: *r,
                transcript,
                confidence,
                frame_index: 0,
            }
        })
        .collect()
}

fn alphabet() -> Alphabet {
    Alphabet::new(font::glyphs().map(|g| g.ch).chain([' ']))
}

/// Fraction of ink in the pixel-center cell `[x0,x1) x [y0,y1)`; an empty
/// cell samples its nearest pixel.
fn ink_fraction(bits: &[bool], w: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let xs = (x0 - 0.5).ceil().max(0.0) as usize;
    let xe = ((x1 - 0.5).ceil() as usize).max(xs + 1);
    let ys = (y0 - 0.5).ceil().max(0.0) as usize;
    let ye = ((y1 - 0.5).ceil() as usize).max(ys + 1);
    let h = bits.len() / w;
    let (mut on, mut n) = (0, 0);
    for y in ys..ye.min(h) {
        for x in xs..xe.min(w) {
            on += bits[y * w + x] as usize;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        on as f64 / n as f64
    }
}

fn glyph_score(bits: &[bool], w: usize, h: usize, seg: (usize, usize), g: &Glyph) -> f64 {
    let (c0, c1) = g.ink_cols();
    let ncols = c1 - c0 + 1;
    let (sx, sw) = (seg.0 as f64, (seg.1 - seg.0) as f64);
    let row_h = h as f64 / GLYPH_H as f64;
    let mut hits = 0;
    for r in 0..GLYPH_H {
        for c in c0..=c1 {
            let k = (c - c0) as f64;
            let frac = ink_fraction(
                bits,
                w,
                sx + k * sw / ncols as f64,
                sx + (k + 1.0) * sw / ncols as f64,
                r as f64 * row_h,
                (r + 1) as f64 * row_h,
            );
            hits += ((frac >= 0.5) == g.bit(c, r)) as usize;
        }
    }
    let acc = hits as f64 / (GLYPH_H * ncols) as f64;
    let expected = ncols as f64 * row_h;
    acc - 0.5 * (sw / expected).ln().abs()
}

/// Reads a horizontal line: columns with ink form glyph segments, each
/// scored against every template; blank rows separate segments and a space
/// row is added where the gap exceeds normal letter spacing.
fn read_line(bits: &[bool], w: usize, h: usize) -> (String, f64) {
    let ink_col = |x: usize| (0..h).any(|y| bits[y * w + x]);
    let mut segs = Vec::new();
    let mut x = 0;
    while x < w {
        if ink_col(x) {
            let s = x;
            while x < w && ink_col(x) {
                x += 1;
            }
            segs.push((s, x));
        }
        x += 1;
    }
    if segs.is_empty() {
        return (String::new(), 0.0);
    }
    let ab = alphabet();
    let k = ab.classes();
    let glyphs: Vec<Glyph> = font::glyphs().collect();
    let s = h as f64 / GLYPH_H as f64;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut prev: Option<(usize, usize)> = None;
    let one_hot = |c: usize| {
        let mut r = vec![0.0; k];
        r[c] = 1.0;
        r
    };
    for &seg in &segs {
        let scores: Vec<f64> = glyphs.iter().map(|g| glyph_score(bits, w, h, seg, g)).collect();
        let best = (0..glyphs.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        if let Some((prev_end, prev_best)) = prev {
            let rb = (GLYPH_W - 1 - glyphs[prev_best].ink_cols().1) as f64 * s;
            let lb = glyphs[best].ink_cols().0 as f64 * s;
            let gap = (seg.0 - prev_end) as f64 - rb - lb;
            rows.push(one_hot(BLANK));
            if gap > 1.5 * s + 1.0 {
                rows.push(one_hot(ab.class_of(' ').expect("space class")));
                rows.push(one_hot(BLANK));
            }
        }
        let top = scores[best];
        let mut row = vec![0.0; k];
        for (g, sc) in glyphs.iter().zip(&scores) {
            row[ab.class_of(g.ch).expect("glyph class")] = (25.0 * (sc - top)).exp();
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
        rows.push(row);
        prev = Some((seg.1, best));
    }
    let y = ProbMatrix::from_rows(&rows).expect("normalized rows");
    let (label, conf) = best_path_decode_with(&y, CollapseRule::RunsFirst);
    (ab.decode(&label), conf)
}

/// Transcribes a binary crop. Crops taller than wide are read after a
/// quarter turn in whichever direction scores higher.
pub fn transcribe(bits: &[bool], w: usize, h: usize) -> (String, f64) {
    if h <= w {
        return read_line(bits, w, h);
    }
    let turn = |cw: bool| {
        let mut out = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                // new plane is h wide, w tall
                let (nx, ny) = if cw { (h - 1 - y, x) } else { (y, w - 1 - x) };
                out[ny * h + nx] = bits[y * w + x];
            }
        }
        out
    };
    let a = read_line(&turn(true), h, w);
    let b = read_line(&turn(false), h, w);
    if b.1 > a.1 {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(text: &str, font_px: usize, rot: f64) -> (Vec<bool>, usize, usize) {
        let r = font::rasterize(text, font_px, 2, rot).unwrap();
        (r.bits.clone(), r.width, r.height)
    }

    #[test]
    fn reads_clean_text() {
        for text in ["A1234567", "SMITH^JOHN", "2021-03-04", "HILL", "12 OAK ST"] {
            for fp in [8, 12, 16, 24] {
                let (b, w, h) = raster(text, fp, 0.0);
                assert_eq!(transcribe(&b, w, h).0, text, "{fp}px");
            }
        }
    }

    #[test]
    fn reads_quarter_turns() {
        let (b, w, h) = raster("MRN 0042", 14, 90.0);
        assert_eq!(transcribe(&b, w, h).0, "MRN 0042");
        let (b, w, h) = raster("MRN 0042", 14, 270.0);
        assert_eq!(transcribe(&b, w, h).0, "MRN 0042");
    }

    #[test]
    fn components_are_eight_connected() {
        // a diagonal pair joins; a pixel two columns away does not
        let fg = [true, false, false, false, false, true, false, false, false, false, false, true];
        let (label, c) = components(&fg, 4, 3);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].rect, Rect::new(0, 0, 2, 2));
        assert_eq!((c[0].pixels, c[1].pixels), (2, 1));
        assert_eq!(label[5], 0);
    }
}
