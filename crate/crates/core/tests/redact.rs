use deid_core::frame::{ImageFrame, Rect};
use deid_core::redact::{detect_reference, redact, DetectorParams, DetectorRegistry, TextBox};
use deid_core::synth::{fabricate_text, phantom, place_items, render_overlay, OverlayItem, SynthConfig, TextKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single_item(rng: &mut ChaCha8Rng) -> OverlayItem {
    let kind = TextKind::ALL[rng.random_range(0..6)];
    let font_px = rng.random_range(8..=24);
    let rotation = if rng.random_bool(0.3) { 90.0 } else { 0.0 } + rng.random_range(-5.0..=5.0f64);
    let mut item = OverlayItem {
        text: fabricate_text(rng.random(), kind),
        x: 0,
        y: 0,
        font_px,
        rotation,
        intensity: rng.random_range(230..=255),
        spacing: rng.random_range(1..=2),
    };
    let ext = item.extent().unwrap();
    item.x = rng.random_range(0..=(320 - ext.w.min(320)));
    item.y = rng.random_range(0..=(320 - ext.h.min(320)));
    item
}

#[test]
fn one_item_gives_one_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut tried = 0;
    while tried < 200 {
        let item = single_item(&mut rng);
        let ext = item.extent().unwrap();
        if !ext.fits_in(320, 320) {
            continue;
        }
        tried += 1;
        let clean = phantom(rng.random(), 320, 320, 1);
        let (frame, gt) = render_overlay(&clean, std::slice::from_ref(&item)).unwrap();
        let boxes = detect_reference(&frame, &DetectorParams::default());
        assert_eq!(boxes.len(), 1, "{:?}", item);
        let iou = boxes[0].bbox.iou(&gt.items[0].1);
        assert!(iou >= 0.8, "iou {iou} for {item:?}");
    }
}

#[test]
fn upright_text_is_transcribed() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut exact = 0;
    for _ in 0..100 {
        let kind = TextKind::ALL[rng.random_range(0..6)];
        let text = fabricate_text(rng.random(), kind);
        let item = OverlayItem {
            text: text.clone(),
            x: 4,
            y: 10,
            font_px: rng.random_range(10..=24),
            rotation: 0.0,
            intensity: 255,
            spacing: 2,
        };
        if !item.extent().unwrap().fits_in(600, 40) {
            continue;
        }
        let (frame, _) = render_overlay(&ImageFrame::filled_u8(600, 40, 30), &[item]).unwrap();
        let boxes = detect_reference(&frame, &DetectorParams::default());
        exact += (boxes.len() == 1 && boxes[0].transcript == text) as usize;
    }
    assert!(exact >= 90, "{exact} exact transcripts");
}

#[test]
fn clean_frame_has_no_boxes() {
    for seed in 0..10 {
        assert!(detect_reference(&phantom(seed, 200, 150, 3), &DetectorParams::default()).is_empty());
    }
}

#[test]
fn separated_items_give_two_boxes() {
    let item = |x, text: &str| OverlayItem {
        text: text.into(),
        x,
        y: 20,
        font_px: 14,
        rotation: 0.0,
        intensity: 250,
        spacing: 1,
    };
    let frame = ImageFrame::filled_u8(400, 60, 10);
    let a = item(10, "DOE^JANE");
    let end = a.extent().unwrap().right();
    // default gap is 1.5 x the median glyph size, about 21 px here
    let (f, _) = render_overlay(&frame, &[a.clone(), item(end + 40, "A1234567")]).unwrap();
    let boxes = detect_reference(&f, &DetectorParams::default());
    assert_eq!(boxes.len(), 2);
    assert_eq!(boxes[0].transcript, "DOE^JANE");
    assert_eq!(boxes[1].transcript, "A1234567");
    let (f, _) = render_overlay(&frame, &[a, item(end + 12, "A1234567")]).unwrap();
    assert_eq!(detect_reference(&f, &DetectorParams::default()).len(), 1);
}

#[test]
fn corpus_like_frames_match_item_boxes() {
    let cfg = SynthConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let det = DetectorRegistry::default().create("reference", &DetectorParams::default()).unwrap();
    for i in 0..40 {
        let clean = phantom(rng.random(), 256, 256, 1);
        let items: Vec<OverlayItem> = place_items(&mut rng, 256, 256, &cfg).into_iter().map(|(_, it)| it).collect();
        let (frame, gt) = render_overlay(&clean, &items).unwrap();
        let boxes = det.detect(&frame, i);
        assert_eq!(boxes.len(), items.len());
        for (_, truth) in &gt.items {
            assert!(boxes.iter().any(|b| b.bbox == *truth && b.frame_index == i));
        }
    }
}

/// Area of a union of rectangles by coordinate compression.
fn union_area(rects: &[Rect]) -> usize {
    let mut xs: Vec<usize> = rects.iter().flat_map(|r| [r.x, r.right()]).collect();
    let mut ys: Vec<usize> = rects.iter().flat_map(|r| [r.y, r.bottom()]).collect();
    xs.sort();
    xs.dedup();
    ys.sort();
    ys.dedup();
    let mut area = 0;
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            if rects.iter().any(|r| r.x <= xw[0] && xw[1] <= r.right() && r.y <= yw[0] && yw[1] <= r.bottom()) {
                area += (xw[1] - xw[0]) * (yw[1] - yw[0]);
            }
        }
    }
    area
}

fn arb_box() -> impl Strategy<Value = TextBox> {
    (0usize..30, 0usize..20, 1usize..15, 1usize..15).prop_map(|(x, y, w, h)| TextBox {
        bbox: Rect::new(x, y, w.min(40 - x), h.min(25 - y)),
        transcript: "X".into(),
        confidence: 1.0,
        frame_index: 0,
    })
}

proptest! {
    #[test]
    fn redaction_is_local_and_mask_is_union(boxes in prop::collection::vec(arb_box(), 0..6), seed in any::<u64>()) {
        let frame = phantom(seed, 40, 25, 3);
        let (out, mask) = redact(&frame, &boxes);
        let rects: Vec<Rect> = boxes.iter().map(|b| b.bbox).collect();
        prop_assert_eq!(mask.count(), union_area(&rects));
        for i in 0..40 * 25 * 3 {
            let expected = if mask.at(i / 3) { 0 } else { frame.sample(i) };
            prop_assert_eq!(out.sample(i), expected);
        }
    }
}
