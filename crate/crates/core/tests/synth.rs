use std::collections::HashSet;
use std::fs;

use deid_core::exec::Execution;
use deid_core::frame::{ImageFrame, Rect};
use deid_core::png_io;
use deid_core::synth::{
    fabricate_text, generate_corpus, phantom, read_manifest, render_overlay, words, OverlayItem, SynthConfig, TextKind,
};
use proptest::prelude::*;

/// 'A' in the 5x7 font, written out independently of the library table.
const A: [&str; 7] = [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"];

/// Pixels whose centers fall in `[k*span/n, (k+1)*span/n)`.
fn cells_on_axis(k: usize, n: usize, span: usize) -> usize {
    let edge = |k: usize| ((k * span) as f64 / n as f64 - 0.5).ceil().max(0.0) as usize;
    edge(k + 1) - edge(k)
}

#[test]
fn glyph_pixel_count_matches_scaled_bitmap() {
    for font_px in [7, 8, 11, 14, 17, 24] {
        let cw = (5.0 * font_px as f64 / 7.0).round() as usize;
        let mut expected = 0;
        for (r, row) in A.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                if ch == '#' {
                    expected += cells_on_axis(c, 5, cw) * cells_on_axis(r, 7, font_px);
                }
            }
        }
        let frame = ImageFrame::filled_u8(40, 40, 20);
        let item = OverlayItem {
            text: "A".into(),
            x: 3,
            y: 4,
            font_px,
            rotation: 0.0,
            intensity: 255,
            spacing: 1,
        };
        let (_, gt) = render_overlay(&frame, &[item]).unwrap();
        assert_eq!(gt.mask.count(), expected, "font_px {font_px}");
    }
}

#[test]
fn names_come_from_bundled_lists() {
    let last: HashSet<&str> = words::LAST_NAMES.iter().copied().collect();
    let first: HashSet<&str> = words::FIRST_NAMES.iter().copied().collect();
    for seed in 0..1000 {
        let name = fabricate_text(seed, TextKind::Name);
        let (l, f) = name.split_once('^').unwrap();
        assert!(last.contains(l) && first.contains(f), "{name}");
    }
}

#[test]
fn every_kind_renders() {
    for kind in TextKind::ALL {
        for seed in 0..50 {
            let text = fabricate_text(seed, kind);
            let item = OverlayItem {
                text,
                x: 0,
                y: 0,
                font_px: 8,
                rotation: 0.0,
                intensity: 240,
                spacing: 1,
            };
            assert!(item.raster().is_ok(), "{kind} {}", item.text);
        }
    }
}

fn arb_item() -> impl Strategy<Value = OverlayItem> {
    (
        "[A-Z0-9^/:.-]{1,6}",
        0usize..30,
        0usize..30,
        8usize..14,
        prop_oneof![Just(0.0), Just(90.0), -5.0f64..5.0, 85.0f64..95.0],
        230u8..=255,
        1usize..3,
    )
        .prop_map(|(text, x, y, font_px, rotation, intensity, spacing)| OverlayItem {
            text,
            x,
            y,
            font_px,
            rotation,
            intensity,
            spacing,
        })
}

proptest! {
    #[test]
    fn output_differs_exactly_on_mask(items in prop::collection::vec(arb_item(), 0..4), base in 200u8..=255, rgb in any::<bool>()) {
        let (w, h) = (160, 160);
        let ch = if rgb { 3 } else { 1 };
        let data: Vec<u8> = (0..w * h * ch).map(|i| base.wrapping_add((i % 7) as u8)).collect();
        let frame = ImageFrame::from_u8(w, h, ch, data).unwrap();
        let (out, gt) = render_overlay(&frame, &items).unwrap();
        for p in 0..w * h {
            let differs = (0..ch).any(|c| out.sample(p * ch + c) != frame.sample(p * ch + c));
            prop_assert_eq!(differs, gt.mask.at(p));
        }
        // every item box holds its glyph pixels and nothing lies outside all boxes
        let boxes = gt.box_mask();
        for p in 0..w * h {
            prop_assert!(!gt.mask.at(p) || boxes.at(p));
        }
        for (_, r) in &gt.items {
            let inside = (r.y..r.bottom()).flat_map(|y| (r.x..r.right()).map(move |x| (x, y))).filter(|&(x, y)| gt.mask.get(x, y)).count();
            prop_assert!(inside >= 1);
        }
    }
}

fn tree_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["images", "masks", "clean"] {
        let mut names: Vec<_> = fs::read_dir(dir.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
        }
    }
    out.push(("manifest.csv".into(), fs::read(dir.join("manifest.csv")).unwrap()));
    out
}

#[test]
fn corpus_is_deterministic_and_sound() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        width: 128,
        height: 128,
        ..SynthConfig::default()
    };
    let sa = generate_corpus(None, a.path(), 12, &cfg, 42, Execution::Parallel { workers: 3 }).unwrap();
    let sb = generate_corpus(None, b.path(), 12, &cfg, 42, Execution::Sequential).unwrap();
    assert_eq!(sa, sb);
    assert_eq!(tree_bytes(a.path()), tree_bytes(b.path()));

    let rows = read_manifest(&a.path().join("manifest.csv")).unwrap();
    assert_eq!(rows.len(), sa.items);
    let header = fs::read_to_string(a.path().join("manifest.csv")).unwrap();
    assert!(header.starts_with("image_id,item_index,kind,text,x,y,w,h,font_px,rotation\n"));
    for i in 0..12 {
        let id = format!("img_{i:05}");
        let clean = png_io::read_frame(&a.path().join("clean").join(format!("{id}.png"))).unwrap();
        let over = png_io::read_frame(&a.path().join("images").join(format!("{id}.png"))).unwrap();
        let mask = png_io::read_mask(&a.path().join("masks").join(format!("{id}.png"))).unwrap();
        let boxes: Vec<Rect> = rows.iter().filter(|r| r.image_id == id).map(|r| r.bbox()).collect();
        let ch = clean.channels();
        for y in 0..clean.height() {
            for x in 0..clean.width() {
                let p = y * clean.width() + x;
                let differs = (0..ch).any(|c| clean.sample(p * ch + c) != over.sample(p * ch + c));
                assert_eq!(differs, mask.get(x, y));
                if mask.get(x, y) {
                    assert!(boxes.iter().any(|b| b.contains(x, y)));
                }
            }
        }
        for b in &boxes {
            assert!((b.y..b.bottom()).any(|y| (b.x..b.right()).any(|x| mask.get(x, y))));
        }
    }
}

#[test]
fn clean_dir_sources_and_unreadable_files() {
    let clean = tempfile::tempdir().unwrap();
    png_io::write_frame(&clean.path().join("a.png"), &phantom(1, 96, 80, 1)).unwrap();
    fs::write(clean.path().join("broken.png"), b"not a png").unwrap();
    let out = tempfile::tempdir().unwrap();
    let s = generate_corpus(Some(clean.path()), out.path(), 3, &SynthConfig::default(), 5, Execution::Sequential).unwrap();
    assert_eq!((s.clean_sources, s.skipped_sources), (1, 1));
    let img = png_io::read_frame(&out.path().join("images/img_00002.png")).unwrap();
    assert_eq!((img.width(), img.height()), (96, 80));
}
