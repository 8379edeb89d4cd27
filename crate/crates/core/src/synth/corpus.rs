use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fabricate_text, render_overlay, OverlayItem, SynthError, TextKind};
use crate::exec::Execution;
use crate::font::{rotated_extent, TextLayout};
use crate::frame::{ImageFrame, Rect};
use crate::png_io;

/// Randomization ranges; all bounds inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Phantom size when no clean directory is given.
    pub width: usize,
    pub height: usize,
    pub font_px: (usize, usize),
    pub items: (usize, usize),
    pub spacing: (usize, usize),
    /// Chance an item is turned a quarter turn.
    pub vertical_prob: f64,
    /// Uniform jitter added to the base rotation, degrees.
    pub jitter_deg: f64,
    /// Chance of pure white text; otherwise a level in 230..=254.
    pub white_prob: f64,
    /// Chance a phantom is RGB instead of gray.
    pub rgb_prob: f64,
    pub max_attempts: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            width: 256,
            height: 256,
            font_px: (8, 24),
            items: (1, 6),
            spacing: (1, 2),
            vertical_prob: 0.25,
            jitter_deg: 5.0,
            white_prob: 0.5,
            rgb_prob: 0.2,
            max_attempts: 50,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.into()));
        if self.font_px.0 < 7 || self.font_px.0 > self.font_px.1 {
            return bad("font_px range must satisfy 7 <= min <= max");
        }
        if self.items.0 > self.items.1 || self.spacing.0 > self.spacing.1 {
            return bad("empty items or spacing range");
        }
        if !(0.0..=1.0).contains(&self.vertical_prob)
            || !(0.0..=1.0).contains(&self.white_prob)
            || !(0.0..=1.0).contains(&self.rgb_prob)
        {
            return bad("probabilities must lie in [0,1]");
        }
        if !(0.0..45.0).contains(&self.jitter_deg) {
            return bad("jitter_deg must lie in [0,45)");
        }
        Ok(())
    }

    /// Minimum gap between item extents, so the reference detector never
    /// merges two items into one word box.
    pub fn item_margin(&self) -> usize {
        2 * self.font_px.1
    }
}

/// Clean stand-in anatomy: nested ellipses with mild texture, every sample
/// at most 200 so nothing reaches the near-white overlay band.
pub fn phantom(seed: u64, width: usize, height: usize, channels: usize) -> ImageFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let background = rng.random_range(5..40) as f64;
    let mut blobs = vec![(w / 2.0, h / 2.0, w * rng.random_range(0.30..0.45), h * rng.random_range(0.30..0.45), rng.random_range(60.0..110.0))];
    for _ in 0..rng.random_range(2..6) {
        blobs.push((
            w * rng.random_range(0.3..0.7),
            h * rng.random_range(0.3..0.7),
            w * rng.random_range(0.04..0.15),
            h * rng.random_range(0.04..0.15),
            rng.random_range(-40.0..80.0),
        ));
    }
    let tint: Vec<f64> = (0..channels).map(|_| rng.random_range(0.8..1.0)).collect();
    let (fx, fy) = (rng.random_range(0.05..0.3), rng.random_range(0.05..0.3));
    let mut data = Vec::with_capacity(width * height * channels);
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut v = background;
            for &(cx, cy, rx, ry, add) in &blobs {
                if ((px - cx) / rx).powi(2) + ((py - cy) / ry).powi(2) <= 1.0 {
                    v += add;
                }
            }
            v += 6.0 * (px * fx).sin() * (py * fy).cos() + rng.random_range(-4.0..4.0);
            for t in &tint {
                data.push((v * t).round().clamp(0.0, 200.0) as u8);
            }
        }
    }
    ImageFrame::from_u8(width, height, channels, data).expect("phantom buffer size")
}

fn range(rng: &mut impl Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi)
}

/// Draws items with random kind, text, size, rotation and position, keeping
/// every item inside the frame and at least `item_margin` away from the
/// others on some axis. Items that cannot be placed are dropped.
pub fn place_items(rng: &mut impl Rng, width: usize, height: usize, cfg: &SynthConfig) -> Vec<(TextKind, OverlayItem)> {
    let n = range(rng, cfg.items);
    let margin = cfg.item_margin();
    let mut placed: Vec<(TextKind, OverlayItem, Rect)> = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..cfg.max_attempts {
            let kind = TextKind::ALL[rng.random_range(0..TextKind::ALL.len())];
            let text = fabricate_text(rng.random(), kind);
            let font_px = range(rng, cfg.font_px);
            let spacing = range(rng, cfg.spacing);
            let base = if rng.random_bool(cfg.vertical_prob) { 90.0 } else { 0.0 };
            let jitter = if cfg.jitter_deg > 0.0 {
                (rng.random_range(-cfg.jitter_deg..=cfg.jitter_deg) * 10.0).round() / 10.0
            } else {
                0.0
            };
            let intensity = if rng.random_bool(cfg.white_prob) { 255 } else { rng.random_range(230..=254) };
            let Ok(layout) = TextLayout::new(&text, font_px, spacing) else { continue };
            let (w, h) = rotated_extent(layout.width(), layout.height(), base + jitter);
            if w > width || h > height {
                continue;
            }
            let rect = Rect::new(rng.random_range(0..=width - w), rng.random_range(0..=height - h), w, h);
            let clear = placed.iter().all(|(_, _, other)| {
                let (gx, gy) = rect.gaps(other);
                gx.max(gy) >= margin
            });
            if !clear {
                continue;
            }
            let item = OverlayItem {
                text,
                x: rect.x,
                y: rect.y,
                font_px,
                rotation: base + jitter,
                intensity,
                spacing,
            };
            placed.push((kind, item, rect));
            break;
        }
    }
    placed.into_iter().map(|(k, i, _)| (k, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub image_id: String,
    pub item_index: usize,
    pub kind: TextKind,
    pub text: String,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub font_px: usize,
    pub rotation: f64,
}

impl ManifestRow {
    pub fn bbox(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, SynthError> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub images: usize,
    pub items: usize,
    pub clean_sources: usize,
    pub skipped_sources: usize,
}

fn load_clean(dir: &Path) -> Result<(Vec<ImageFrame>, usize), SynthError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut frames = Vec::new();
    let mut skipped = 0;
    for p in paths {
        match png_io::read_frame(&p) {
            Ok(f) => frames.push(f),
            Err(err) => {
                log::warn!("skipping unreadable clean image {}: {err}", p.display());
                skipped += 1;
            }
        }
    }
    if frames.is_empty() {
        return Err(SynthError::Config(format!("no readable images in {}", dir.display())));
    }
    Ok((frames, skipped))
}

pub fn image_id(index: usize) -> String {
    format!("img_{index:05}")
}

/// Writes `images/`, `masks/`, `clean/` (the source frame of each image),
/// `manifest.csv` and `synth_config.json` under `out_dir`. Image `i` uses
/// its own generator seeded with `seed ^ i`, so the corpus is identical
/// under any execution strategy. Without `clean_dir`, phantoms are used.
pub fn generate_corpus(
    clean_dir: Option<&Path>,
    out_dir: &Path,
    n: usize,
    cfg: &SynthConfig,
    seed: u64,
    exec: Execution,
) -> Result<SynthSummary, SynthError> {
    cfg.validate()?;
    let (sources, skipped) = match clean_dir {
        Some(dir) => load_clean(dir)?,
        None => (Vec::new(), 0),
    };
    for sub in ["images", "masks", "clean"] {
        fs::create_dir_all(out_dir.join(sub))?;
    }

    let results = exec.map_indices(n, |i| -> Result<Vec<ManifestRow>, SynthError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
        let clean = if sources.is_empty() {
            let channels = if rng.random_bool(cfg.rgb_prob) { 3 } else { 1 };
            phantom(rng.random(), cfg.width, cfg.height, channels)
        } else {
            sources[i % sources.len()].clone()
        };
        let placed = place_items(&mut rng, clean.width(), clean.height(), cfg);
        let items: Vec<OverlayItem> = placed.iter().map(|(_, it)| it.clone()).collect();
        let (overlaid, truth) = render_overlay(&clean, &items)?;
        let id = image_id(i);
        let name = format!("{id}.png");
        png_io::write_frame(&out_dir.join("images").join(&name), &overlaid)?;
        png_io::write_mask(&out_dir.join("masks").join(&name), &truth.mask)?;
        png_io::write_frame(&out_dir.join("clean").join(&name), &clean)?;
        Ok(placed
            .iter()
            .zip(&truth.items)
            .enumerate()
            .map(|(k, ((kind, item), (_, b)))| ManifestRow {
                image_id: id.clone(),
                item_index: k,
                kind: *kind,
                text: item.text.clone(),
                x: b.x,
                y: b.y,
                w: b.w,
                h: b.h,
                font_px: item.font_px,
                rotation: item.rotation,
            })
            .collect())
    });

    let mut wtr = csv::Writer::from_path(out_dir.join("manifest.csv"))?;
    let mut items = 0;
    for rows in results {
        for row in rows? {
            wtr.serialize(&row)?;
            items += 1;
        }
    }
    wtr.flush()?;
    let cfg_json = serde_json::to_string_pretty(&serde_json::json!({ "seed": seed, "n": n, "config": cfg }))
        .expect("config serializes");
    fs::write(out_dir.join("synth_config.json"), cfg_json)?;
    Ok(SynthSummary {
        images: n,
        items,
        clean_sources: sources.len(),
        skipped_sources: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phantom_stays_below_overlay_band() {
        for seed in 0..5 {
            let f = phantom(seed, 64, 48, if seed % 2 == 0 { 1 } else { 3 });
            assert!(f.as_u8().unwrap().iter().all(|&v| v <= 200));
        }
        assert_eq!(phantom(3, 32, 32, 1), phantom(3, 32, 32, 1));
    }

    #[test]
    fn placement_respects_frame_and_margin() {
        let cfg = SynthConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let placed = place_items(&mut rng, 256, 256, &cfg);
            assert!(!placed.is_empty());
            let rects: Vec<Rect> = placed.iter().map(|(_, i)| i.extent().unwrap()).collect();
            for (a, ra) in rects.iter().enumerate() {
                assert!(ra.fits_in(256, 256));
                for rb in &rects[a + 1..] {
                    let (gx, gy) = ra.gaps(rb);
                    assert!(gx.max(gy) >= cfg.item_margin());
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SynthConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.font_px = (5, 10);
        assert!(cfg.validate().is_err());
    }
}
