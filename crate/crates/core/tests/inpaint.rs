mod common;

use std::io::Write;
use std::net::TcpListener;
use std::thread;

use common::oracles::{composite_ref, edt_brute, random_mask};
use deid_core::frame::{ImageFrame, Mask};
use deid_core::inpaint::external::{external_inpaint, read_field, write_field, BackendRequest, ExternalConfig, ExternalError};
use deid_core::inpaint::{composite_identity, fast_march, telea_fill, InpaintConfig, PixelState};
use deid_core::png_io;
use deid_core::synth::phantom;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk(r: usize) -> Mask {
    let side = 2 * r + 7;
    let c = (side / 2) as i64;
    Mask::from_fn(side, side, |x, y| {
        let (dx, dy) = (x as i64 - c, y as i64 - c);
        dx * dx + dy * dy <= (r * r) as i64
    })
}

#[test]
fn disk_center_distance_near_radius() {
    for r in [5, 10, 20] {
        let m = disk(r);
        let c = m.width() / 2;
        let d = fast_march(&m).get(c, c);
        assert!((d - r as f64).abs() <= 0.15 * r as f64, "r={r} center D={d}");
    }
}

#[test]
fn distance_tracks_exact_transform_on_convex_shapes() {
    let rect = |w: usize, h: usize| Mask::from_fn(w + 6, h + 6, |x, y| (3..3 + w).contains(&x) && (3..3 + h).contains(&y));
    for (m, inradius) in [(disk(5), 5.0), (disk(10), 10.0), (disk(20), 20.0), (rect(12, 30), 6.0), (rect(41, 41), 20.5)] {
        let dm = fast_march(&m);
        let exact = edt_brute(&m);
        for (i, (&d, &e)) in dm.distances().iter().zip(&exact).enumerate() {
            assert!(d.is_finite());
            // D=0 sits on the outside pixel centers, same as the oracle
            assert!((d - e).abs() <= 0.15 * inradius, "pixel {i}: D={d}, exact {e}");
        }
    }
}

#[test]
fn march_order_is_monotone_and_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let m = random_mask(&mut rng, 48, 40);
        let dm = fast_march(&m);
        let ds: Vec<f64> = dm.order().iter().map(|&i| dm.distances()[i]).collect();
        assert!(ds.windows(2).all(|p| p[0] <= p[1]));
        assert_eq!(dm.order().len(), m.count());
        for y in 0..40 {
            for x in 0..48 {
                assert_eq!(dm.state(x, y), PixelState::Known);
                if !m.get(x, y) {
                    assert_eq!(dm.get(x, y), 0.0);
                }
            }
        }
    }
}

#[test]
fn constant_images_are_fixed_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..50 {
        let m = random_mask(&mut rng, 40, 32);
        let f = if k % 2 == 0 {
            ImageFrame::filled_u8(40, 32, rng.random())
        } else {
            ImageFrame::from_u16(40, 32, 3, vec![rng.random(); 40 * 32 * 3]).unwrap()
        };
        let cfg = InpaintConfig {
            radius: rng.random_range(1.0..6.0),
            ..Default::default()
        };
        assert_eq!(telea_fill(&f, &m, &cfg).unwrap(), f);
    }
}

#[test]
fn ramp_strip_is_recovered() {
    let (w, h) = (256, 48);
    let ramp = ImageFrame::from_u8(w, h, 1, (0..w * h).map(|i| (i % w) as u8).collect()).unwrap();
    for x0 in [3, 60, 125, 200, 247] {
        let m = Mask::from_fn(w, h, |x, _| (x0..x0 + 6).contains(&x));
        let out = telea_fill(&ramp, &m, &InpaintConfig::default()).unwrap();
        let mut worst = 0i64;
        for y in 0..h {
            for x in 0..w {
                let err = (out.get(x, y, 0) as i64 - x as i64).abs();
                if m.get(x, y) {
                    worst = worst.max(err);
                } else {
                    assert_eq!(err, 0);
                }
            }
        }
        assert!(worst <= 3, "strip at {x0}: max error {worst}");
    }
}

#[test]
fn fill_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = phantom(1, 64, 64, 3);
    let m = random_mask(&mut rng, 64, 64);
    let a = telea_fill(&f, &m, &InpaintConfig::default()).unwrap();
    let b = telea_fill(&f, &m, &InpaintConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn composite_matches_checkerboard_oracle() {
    let o = phantom(2, 33, 21, 3);
    let r = phantom(3, 33, 21, 3);
    let m = Mask::from_fn(33, 21, |x, y| (x + y) % 2 == 0);
    let out = composite_identity(&o, &r, &m).unwrap();
    let expected = composite_ref(&o, &r, &m);
    assert!((0..33 * 21 * 3).all(|i| out.sample(i) == expected[i]));
    assert_eq!(composite_identity(&o, &r, &Mask::new(33, 21)).unwrap(), o);
    assert_eq!(composite_identity(&o, &r, &Mask::full(33, 21)).unwrap(), r);
    assert!(composite_identity(&o, &phantom(3, 33, 21, 1), &m).is_err());
}

fn arb_mask(w: usize, h: usize) -> impl Strategy<Value = Mask> {
    prop::collection::vec(any::<bool>(), w * h)
        .prop_filter("needs a known pixel", |b| b.iter().any(|&v| !v))
        .prop_map(move |b| Mask::from_fn(w, h, |x, y| b[y * w + x]))
}

proptest! {
    #[test]
    fn fill_is_local_and_within_range(m in arb_mask(12, 10), seed in any::<u64>(), radius in 1.0f64..5.0) {
        let f = phantom(seed, 12, 10, 1);
        let out = telea_fill(&f, &m, &InpaintConfig { radius, ..Default::default() }).unwrap();
        let known: Vec<u32> = (0..120).filter(|&i| !m.at(i)).map(|i| f.sample(i)).collect();
        let (lo, hi) = (*known.iter().min().unwrap(), *known.iter().max().unwrap());
        for i in 0..120 {
            if m.at(i) {
                prop_assert!((lo..=hi).contains(&out.sample(i)));
            } else {
                prop_assert_eq!(out.sample(i), f.sample(i));
            }
        }
    }

    #[test]
    fn composite_is_local(m in arb_mask(9, 7), a in any::<u64>(), b in any::<u64>()) {
        let (o, r) = (phantom(a, 9, 7, 3), phantom(b, 9, 7, 3));
        let out = composite_identity(&o, &r, &m).unwrap();
        for i in 0..9 * 7 * 3 {
            prop_assert_eq!(out.sample(i), if m.at(i / 3) { r.sample(i) } else { o.sample(i) });
        }
    }
}

/// Serves one request: answers with `side x side` gray `level` (or
/// the given id/size overrides).
fn mock_backend(level: u8, side: usize, id_override: Option<&'static str>) -> (String, thread::JoinHandle<Vec<Vec<u8>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let handle = thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        let fields: Vec<Vec<u8>> = (0..4).map(|_| read_field(&mut s).unwrap()).collect();
        let id = id_override.map(|s| s.as_bytes().to_vec()).unwrap_or_else(|| fields[3].clone());
        let png = png_io::encode_frame(&ImageFrame::from_u8(side, side, 3, vec![level; side * side * 3]).unwrap()).unwrap();
        write_field(&mut s, &id).unwrap();
        write_field(&mut s, &png).unwrap();
        s.flush().unwrap();
        fields
    });
    (addr, handle)
}

fn request<'a>(frame: &'a ImageFrame, mask: &'a Mask) -> BackendRequest<'a> {
    BackendRequest {
        frame,
        mask,
        prompt: "MR".into(),
        request_id: "study-7/0".into(),
    }
}

#[test]
fn external_answer_is_composited() {
    let f = phantom(8, 40, 30, 1);
    let m = Mask::from_fn(40, 30, |x, y| (10..20).contains(&x) && (5..15).contains(&y));
    let (endpoint, server) = mock_backend(123, 64, None);
    let cfg = ExternalConfig {
        endpoint,
        side: 64,
        timeout_ms: 5000,
        retries: 0,
    };
    let out = external_inpaint(&request(&f, &m), &cfg).unwrap();
    let fields = server.join().unwrap();
    assert_eq!(fields[2], b"MR");
    assert_eq!(fields[3], b"study-7/0");
    let sent = png_io::decode_frame(&fields[0]).unwrap();
    assert_eq!((sent.width(), sent.height(), sent.channels()), (64, 64, 3));
    for i in 0..40 * 30 {
        assert_eq!(out.sample(i), if m.at(i) { 123 } else { f.sample(i) });
    }
}

#[test]
fn external_rejects_wrong_id_and_size() {
    let f = phantom(9, 20, 20, 3);
    let m = Mask::from_fn(20, 20, |x, _| x < 5);
    let (endpoint, server) = mock_backend(1, 32, Some("other"));
    let cfg = ExternalConfig {
        endpoint,
        side: 32,
        timeout_ms: 5000,
        retries: 0,
    };
    assert!(matches!(external_inpaint(&request(&f, &m), &cfg), Err(ExternalError::IdMismatch { .. })));
    server.join().unwrap();

    let (endpoint, server) = mock_backend(1, 16, None);
    let cfg = ExternalConfig { endpoint, ..cfg };
    assert!(matches!(external_inpaint(&request(&f, &m), &cfg), Err(ExternalError::BadSize { .. })));
    server.join().unwrap();
}

#[test]
fn unreachable_backend_is_a_network_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let f = phantom(1, 10, 10, 1);
    let m = Mask::from_fn(10, 10, |x, _| x == 3);
    let cfg = ExternalConfig {
        endpoint: format!("127.0.0.1:{port}"),
        side: 16,
        timeout_ms: 500,
        retries: 1,
    };
    assert!(matches!(external_inpaint(&request(&f, &m), &cfg), Err(ExternalError::Network(_))));
}
