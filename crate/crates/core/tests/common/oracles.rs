//! Slow, obviously-correct reference implementations used as test oracles.

use deid_core::ctc::{CollapseRule, ProbMatrix};
use deid_core::frame::{ImageFrame, Mask};
use rand::Rng;

/// Random row-stochastic matrix with strictly positive entries.
pub fn random_probs(rng: &mut impl Rng, t: usize, k: usize) -> ProbMatrix {
    let scores: Vec<f64> = (0..t * k).map(|_| rng.random_range(0.01..1.0)).collect();
    ProbMatrix::from_scores(t, k, scores).unwrap()
}

/// All `k^t` paths in lexicographic order.
pub fn all_paths(t: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..t {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

fn merge_runs(seq: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut merged: Vec<usize> = Vec::new();
    for c in seq {
        if merged.last() != Some(&c) {
            merged.push(c);
        }
    }
    merged
}

/// Two-pass collapse, written independently of the library.
pub fn collapse_ref_with(path: &[usize], rule: CollapseRule) -> Vec<usize> {
    match rule {
        CollapseRule::RunsFirst => merge_runs(path.iter().copied()).into_iter().filter(|&c| c != 0).collect(),
        CollapseRule::BlanksFirst => merge_runs(path.iter().copied().filter(|&c| c != 0)),
    }
}

pub fn collapse_ref(path: &[usize]) -> Vec<usize> {
    collapse_ref_with(path, CollapseRule::default())
}

/// Σ over enumerated paths collapsing to `label` of the product of entries.
pub fn brute_force_prob(y: &ProbMatrix, label: &[usize], rule: CollapseRule) -> f64 {
    all_paths(y.steps(), y.classes())
        .iter()
        .filter(|p| collapse_ref_with(p, rule) == label)
        .map(|p| p.iter().enumerate().map(|(t, &c)| y.get(t, c)).product::<f64>())
        .sum()
}

/// Every distinct collapsed label reachable in `t` steps over `k` classes.
pub fn all_labels(t: usize, k: usize, rule: CollapseRule) -> Vec<Vec<usize>> {
    let mut labels: Vec<Vec<usize>> = all_paths(t, k).iter().map(|p| collapse_ref_with(p, rule)).collect();
    labels.sort();
    labels.dedup();
    labels
}

/// Central difference of `f` with respect to `log y_t(c)`, i.e. entries
/// are scaled by `exp(±h)`.
pub fn log_space_fd(y: &ProbMatrix, h: f64, f: impl Fn(&ProbMatrix) -> f64) -> Vec<f64> {
    let (t, k) = (y.steps(), y.classes());
    let mut out = vec![0.0; t * k];
    for i in 0..t * k {
        let mut up = y.data().to_vec();
        let mut down = y.data().to_vec();
        up[i] *= h.exp();
        down[i] *= (-h).exp();
        let fu = f(&ProbMatrix::unnormalized(t, k, up).unwrap());
        let fd = f(&ProbMatrix::unnormalized(t, k, down).unwrap());
        out[i] = (fu - fd) / (2.0 * h);
    }
    out
}

/// Row argmax with lowest-index ties.
pub fn argmax_rows(y: &ProbMatrix) -> Vec<usize> {
    (0..y.steps())
        .map(|t| {
            let row = y.row(t);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.iter().position(|&v| v == max).unwrap()
        })
        .collect()
}

/// Exact Euclidean distance from each mask pixel to the nearest pixel
/// outside the mask (pixel centers); 0 outside. Brute force.
pub fn edt_brute(mask: &Mask) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let outside: Vec<(f64, f64)> = (0..w * h)
        .filter(|&i| !mask.at(i))
        .map(|i| ((i % w) as f64, (i / w) as f64))
        .collect();
    (0..w * h)
        .map(|i| {
            if !mask.at(i) {
                return 0.0;
            }
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            outside
                .iter()
                .map(|&(ox, oy)| ((x - ox).powi(2) + (y - oy).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Union of a few random rectangles and disks, never the whole frame.
pub fn random_mask(rng: &mut impl Rng, w: usize, h: usize) -> Mask {
    loop {
        let mut m = Mask::new(w, h);
        for _ in 0..rng.random_range(1..=4) {
            let (cx, cy) = (rng.random_range(0..w), rng.random_range(0..h));
            let r = rng.random_range(1..=w.min(h) / 4) as i64;
            let disk = rng.random_bool(0.5);
            for y in 0..h {
                for x in 0..w {
                    let (dx, dy) = (x as i64 - cx as i64, y as i64 - cy as i64);
                    let inside = if disk { dx * dx + dy * dy <= r * r } else { dx.abs() <= r && dy.abs() <= r / 2 };
                    if inside {
                        m.set(x, y, true);
                    }
                }
            }
        }
        if !m.is_full() {
            return m;
        }
    }
}

/// Per-pixel two-branch selection.
pub fn composite_ref(original: &ImageFrame, restored: &ImageFrame, mask: &Mask) -> Vec<u32> {
    let ch = original.channels();
    (0..original.pixel_count() * ch)
        .map(|i| if mask.at(i / ch) { restored.sample(i) } else { original.sample(i) })
        .collect()
}

/// (sad, ssd, mse, rmse) by direct loops, channels averaged.
pub fn masked_errors_ref(a: &ImageFrame, b: &ImageFrame, m: &Mask) -> (f64, f64, f64, f64) {
    let ch = a.channels();
    let n = m.count() as f64;
    let (mut sad, mut ssd) = (0.0, 0.0);
    for c in 0..ch {
        for y in 0..a.height() {
            for x in 0..a.width() {
                if m.get(x, y) {
                    let d = a.get(x, y, c) as f64 - b.get(x, y, c) as f64;
                    sad += d.abs();
                    ssd += d * d;
                }
            }
        }
    }
    let (sad, ssd) = (sad / ch as f64, ssd / ch as f64);
    (sad, ssd, ssd / n, (ssd / n).sqrt())
}

/// Masked SSIM with two-pass window moments recomputed at every pixel.
pub fn masked_ssim_ref(a: &ImageFrame, b: &ImageFrame, m: &Mask, win: usize, k1: f64, k2: f64) -> f64 {
    let (w, h) = (a.width() as i64, a.height() as i64);
    let half = (win / 2) as i64;
    let l = if a.bit_depth() == 8 { 255.0 } else { 65535.0 };
    let (c1, c2) = ((k1 * l) * (k1 * l), (k2 * l) * (k2 * l));
    let mut per_channel = Vec::new();
    for c in 0..a.channels() {
        let mut vals = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !m.get(x as usize, y as usize) {
                    continue;
                }
                let mut pa = Vec::new();
                let mut pb = Vec::new();
                for wy in y - half..=y + half {
                    for wx in x - half..=x + half {
                        if wx >= 0 && wy >= 0 && wx < w && wy < h {
                            pa.push(a.get(wx as usize, wy as usize, c) as f64);
                            pb.push(b.get(wx as usize, wy as usize, c) as f64);
                        }
                    }
                }
                let n = pa.len() as f64;
                let ma = pa.iter().sum::<f64>() / n;
                let mb = pb.iter().sum::<f64>() / n;
                let va = pa.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / n;
                let vb = pb.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n;
                let cov = pa.iter().zip(&pb).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / n;
                vals.push((2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
            }
        }
        per_channel.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    per_channel.iter().sum::<f64>() / per_channel.len() as f64
}
