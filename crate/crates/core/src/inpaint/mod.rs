//! Fast-marching distance map and TELEA-style inpainting over a mask, the
//! identity compositing step, and a client for an external inpainting
//! service.
//!
//! Pixels outside the mask are KNOWN with distance 0. Mask pixels enter the
//! narrow band once a 4-neighbor is KNOWN and are finalized in order of
//! increasing distance, ties broken by row-major index.

pub mod external;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{FrameError, ImageFrame, Mask, Samples};

#[derive(Debug, Error)]
pub enum InpaintError {
    #[error("mask covers the whole frame; nothing to propagate from")]
    NoBoundary,
    #[error("radius must be at least 1, got {0}")]
    BadRadius(f64),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelState {
    Known,
    Band,
    Inside,
}

#[derive(Debug, Clone)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    d: Vec<f64>,
    state: Vec<PixelState>,
    order: Vec<usize>,
}

impl DistanceMap {
    /// Initial state for `mask`: outside KNOWN at 0, inside unknown.
    pub fn init(mask: &Mask) -> Self {
        let n = mask.width() * mask.height();
        let mut d = vec![0.0; n];
        let mut state = vec![PixelState::Known; n];
        for i in 0..n {
            if mask.at(i) {
                d[i] = f64::INFINITY;
                state[i] = PixelState::Inside;
            }
        }
        DistanceMap {
            width: mask.width(),
            height: mask.height(),
            d,
            state,
            order: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.d[y * self.width + x]
    }

    pub fn state(&self, x: usize, y: usize) -> PixelState {
        self.state[y * self.width + x]
    }

    pub fn distances(&self) -> &[f64] {
        &self.d
    }

    /// Row-major indices of mask pixels in the order they were finalized.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn set(&mut self, x: usize, y: usize, d: f64, state: PixelState) {
        let i = y * self.width + x;
        self.d[i] = d;
        self.state[i] = state;
    }

    fn known(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return f64::INFINITY;
        }
        let i = y as usize * self.width + x as usize;
        if self.state[i] == PixelState::Known {
            self.d[i]
        } else {
            f64::INFINITY
        }
    }
}

/// Candidate distance at `(x, y)` from its KNOWN 4-neighbors: the smallest
/// solution over the four (left|right) x (up|down) quadrants of
/// `(T-a)^2 + (T-b)^2 = 1`, or `min + 1` when one axis is missing or the
/// neighbors differ by at least 1.
pub fn eikonal_update(dm: &DistanceMap, x: usize, y: usize) -> f64 {
    let (x, y) = (x as i64, y as i64);
    let mut best = f64::INFINITY;
    for a in [dm.known(x - 1, y), dm.known(x + 1, y)] {
        for b in [dm.known(x, y - 1), dm.known(x, y + 1)] {
            let t = match (a.is_finite(), b.is_finite()) {
                (false, false) => f64::INFINITY,
                (true, false) => a + 1.0,
                (false, true) => b + 1.0,
                (true, true) if (a - b).abs() >= 1.0 => a.min(b) + 1.0,
                (true, true) => (a + b + (2.0 - (a - b) * (a - b)).sqrt()) / 2.0,
            };
            best = best.min(t);
        }
    }
    best
}

#[derive(PartialEq)]
struct Entry {
    d: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // reversed so BinaryHeap pops the smallest (d, idx)
    fn cmp(&self, other: &Self) -> Ordering {
        other.d.total_cmp(&self.d).then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const N4: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

pub fn fast_march(mask: &Mask) -> DistanceMap {
    let mut dm = DistanceMap::init(mask);
    let (w, h) = (dm.width, dm.height);
    let mut heap = BinaryHeap::new();
    let relax = |dm: &mut DistanceMap, heap: &mut BinaryHeap<Entry>, x: usize, y: usize| {
        for (dx, dy) in N4 {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            let i = ny * w + nx;
            if dm.state[i] == PixelState::Known {
                continue;
            }
            let t = eikonal_update(dm, nx, ny);
            if t < dm.d[i] {
                dm.d[i] = t;
                dm.state[i] = PixelState::Band;
                heap.push(Entry { d: t, idx: i });
            }
        }
    };
    for i in 0..w * h {
        if dm.state[i] == PixelState::Inside
            && N4.iter().any(|&(dx, dy)| dm.known((i % w) as i64 + dx, (i / w) as i64 + dy).is_finite())
        {
            let t = eikonal_update(&dm, i % w, i / w);
            dm.d[i] = t;
            dm.state[i] = PixelState::Band;
            heap.push(Entry { d: t, idx: i });
        }
    }
    while let Some(Entry { d, idx }) = heap.pop() {
        if dm.state[idx] == PixelState::Known || d != dm.d[idx] {
            continue;
        }
        dm.state[idx] = PixelState::Known;
        dm.order.push(idx);
        relax(&mut dm, &mut heap, idx % w, idx / w);
    }
    dm
}

/// Normalized gradient of D at `(x, y)`: central differences, one-sided
/// where a neighbor is off-frame or not finite. Zero when flat.
pub fn boundary_normal(dm: &DistanceMap, x: usize, y: usize) -> (f64, f64) {
    let here = dm.get(x, y);
    if !here.is_finite() {
        return (0.0, 0.0);
    }
    let at = |x: i64, y: i64| {
        if x < 0 || y < 0 || x >= dm.width as i64 || y >= dm.height as i64 {
            f64::INFINITY
        } else {
            dm.get(x as usize, y as usize)
        }
    };
    let diff = |lo: f64, hi: f64| match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (hi - lo) / 2.0,
        (true, false) => here - lo,
        (false, true) => hi - here,
        (false, false) => 0.0,
    };
    let (xi, yi) = (x as i64, y as i64);
    let gx = diff(at(xi - 1, yi), at(xi + 1, yi));
    let gy = diff(at(xi, yi - 1), at(xi, yi + 1));
    let norm = (gx * gx + gy * gy).sqrt();
    if norm == 0.0 {
        (0.0, 0.0)
    } else {
        (gx / norm, gy / norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Telea,
    External,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "telea" => Ok(Backend::Telea),
            "external" => Ok(Backend::External),
            _ => Err(format!("unknown backend {s:?} (expected telea or external)")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Telea => "telea",
            Backend::External => "external",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InpaintConfig {
    pub radius: f64,
    pub backend: Backend,
}

impl Default for InpaintConfig {
    fn default() -> Self {
        InpaintConfig {
            radius: 3.0,
            backend: Backend::Telea,
        }
    }
}

impl InpaintConfig {
    pub fn validate(&self) -> Result<(), InpaintError> {
        if self.radius.is_finite() && self.radius >= 1.0 {
            Ok(())
        } else {
            Err(InpaintError::BadRadius(self.radius))
        }
    }
}

/// Fills the mask in fast-march order. Each pixel becomes the weighted mean
/// of already-known pixels `q` with `|p - q| <= radius`, weighted by
/// `max(0, (p - q) . n(p)) / |p - q|^2`; when every such weight is zero the
/// weights fall back to `1 / |p - q|^2`. Channels share one distance map.
pub fn telea_fill(frame: &ImageFrame, mask: &Mask, cfg: &InpaintConfig) -> Result<ImageFrame, InpaintError> {
    cfg.validate()?;
    frame.check_mask(mask)?;
    if mask.is_empty() {
        return Ok(frame.clone());
    }
    if mask.is_full() {
        return Err(InpaintError::NoBoundary);
    }
    let dm = fast_march(mask);
    let (w, h, ch) = (frame.width(), frame.height(), frame.channels());
    let r = cfg.radius;
    let reach = r.floor() as i64;
    let mut offsets = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let d2 = (dx * dx + dy * dy) as f64;
            if d2 > 0.0 && d2 <= r * r {
                offsets.push((dx, dy, d2));
            }
        }
    }

    let mut vals: Vec<f64> = (0..w * h * ch).map(|i| frame.sample(i) as f64).collect();
    let mut known: Vec<bool> = (0..w * h).map(|i| !mask.at(i)).collect();
    let mut acc = vec![0.0; ch];
    let mut fallback = vec![0.0; ch];
    for &p in dm.order() {
        let (x, y) = ((p % w) as i64, (p / w) as i64);
        let (nx, ny) = boundary_normal(&dm, p % w, p / w);
        let (mut sw, mut sf) = (0.0, 0.0);
        acc.iter_mut().for_each(|v| *v = 0.0);
        fallback.iter_mut().for_each(|v| *v = 0.0);
        for &(dx, dy, d2) in &offsets {
            let (qx, qy) = (x + dx, y + dy);
            if qx < 0 || qy < 0 || qx >= w as i64 || qy >= h as i64 {
                continue;
            }
            let q = qy as usize * w + qx as usize;
            if !known[q] {
                continue;
            }
            // p - q = (-dx, -dy)
            let wt = (-(dx as f64) * nx - dy as f64 * ny).max(0.0) / d2;
            let wf = 1.0 / d2;
            sw += wt;
            sf += wf;
            for c in 0..ch {
                let v = vals[q * ch + c];
                acc[c] += wt * v;
                fallback[c] += wf * v;
            }
        }
        for c in 0..ch {
            vals[p * ch + c] = if sw > 0.0 { acc[c] / sw } else { fallback[c] / sf };
        }
        known[p] = true;
    }

    let samples = match frame.samples() {
        Samples::U8(orig) => Samples::U8(
            (0..orig.len())
                .map(|i| if mask.at(i / ch) { vals[i].round().clamp(0.0, 255.0) as u8 } else { orig[i] })
                .collect(),
        ),
        Samples::U16(orig) => Samples::U16(
            (0..orig.len())
                .map(|i| if mask.at(i / ch) { vals[i].round().clamp(0.0, 65535.0) as u16 } else { orig[i] })
                .collect(),
        ),
    };
    Ok(ImageFrame::new(w, h, ch, samples)?)
}

/// `original` where the mask is 0, `restored` where it is 1.
pub fn composite_identity(original: &ImageFrame, restored: &ImageFrame, mask: &Mask) -> Result<ImageFrame, InpaintError> {
    original.check_mask(mask)?;
    if !original.same_shape(restored) {
        return Err(FrameError::DimensionMismatch("restored frame differs in shape from the original".into()).into());
    }
    let ch = original.channels();
    let pick = |i: usize| mask.at(i / ch);
    let samples = match (original.samples(), restored.samples()) {
        (Samples::U8(o), Samples::U8(r)) => Samples::U8((0..o.len()).map(|i| if pick(i) { r[i] } else { o[i] }).collect()),
        (Samples::U16(o), Samples::U16(r)) => {
            Samples::U16((0..o.len()).map(|i| if pick(i) { r[i] } else { o[i] }).collect())
        }
        _ => unreachable!("same_shape checks bit depth"),
    };
    Ok(ImageFrame::new(original.width(), original.height(), ch, samples)?)
}
