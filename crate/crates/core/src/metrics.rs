//! Evaluation measures: pixel-mask confusion and P/R/F1, masked error and
//! SSIM metrics, macro-averaged classification scores and corpus tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{FrameError, ImageFrame, Mask};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("evaluation mask is empty")]
    EmptyMask,
    #[error("frames differ in shape or bit depth")]
    Shape,
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("SSIM window must be odd and positive, got {0}")]
    BadWindow(usize),
    #[error("no rows to aggregate")]
    NoRows,
    #[error("row has {got} values, table has {expected} columns")]
    RowWidth { expected: usize, got: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PixelConfusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl PixelConfusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&self, other: &PixelConfusion) -> PixelConfusion {
        PixelConfusion {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

pub fn mask_confusion(pred: &Mask, truth: &Mask) -> Result<PixelConfusion, MetricsError> {
    if pred.width() != truth.width() || pred.height() != truth.height() {
        return Err(FrameError::DimensionMismatch(format!(
            "prediction {}x{} vs truth {}x{}",
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height()
        ))
        .into());
    }
    let mut c = PixelConfusion::default();
    for (&p, &t) in pred.bits().iter().zip(truth.bits()) {
        match (p != 0, t != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1. With no predicted positives precision is 1
/// when there were no true positives to find and 0 otherwise; recall is
/// treated the same way with the roles swapped.
pub fn prf(c: &PixelConfusion) -> Prf {
    let precision = match c.tp + c.fp {
        0 if c.fn_ == 0 => 1.0,
        0 => 0.0,
        d => c.tp as f64 / d as f64,
    };
    let recall = match c.tp + c.fn_ {
        0 if c.fp == 0 => 1.0,
        0 => 0.0,
        d => c.tp as f64 / d as f64,
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf { precision, recall, f1 }
}

fn check_pair(a: &ImageFrame, b: &ImageFrame, m: &Mask) -> Result<usize, MetricsError> {
    if !a.same_shape(b) {
        return Err(MetricsError::Shape);
    }
    a.check_mask(m)?;
    match m.count() {
        0 => Err(MetricsError::EmptyMask),
        n => Ok(n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedErrors {
    pub sad: f64,
    pub ssd: f64,
    pub mse: f64,
    pub rmse: f64,
    pub n_mask: usize,
}

/// SAD and SSD are summed over mask pixels per channel and averaged over
/// channels; `mse = ssd / n_mask` and `rmse = sqrt(mse)`.
pub fn masked_errors(a: &ImageFrame, b: &ImageFrame, m: &Mask) -> Result<MaskedErrors, MetricsError> {
    let n = check_pair(a, b, m)?;
    let ch = a.channels();
    let (mut sad, mut ssd) = (vec![0u64; ch], vec![0u64; ch]);
    for p in (0..m.width() * m.height()).filter(|&p| m.at(p)) {
        for c in 0..ch {
            let d = (a.sample(p * ch + c) as i64 - b.sample(p * ch + c) as i64).unsigned_abs();
            sad[c] += d;
            ssd[c] += d * d;
        }
    }
    let sad = sad.iter().map(|&v| v as f64).sum::<f64>() / ch as f64;
    let ssd = ssd.iter().map(|&v| v as f64).sum::<f64>() / ch as f64;
    let mse = ssd / n as f64;
    Ok(MaskedErrors {
        sad,
        ssd,
        mse,
        rmse: mse.sqrt(),
        n_mask: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Side of the square uniform window.
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 7,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

/// Inclusive-prefix sums over one channel, `(w+1) x (h+1)`.
struct Sat {
    w1: usize,
    s: Vec<i128>,
}

impl Sat {
    fn build(w: usize, h: usize, f: impl Fn(usize, usize) -> i128) -> Sat {
        let w1 = w + 1;
        let mut s = vec![0i128; w1 * (h + 1)];
        for y in 0..h {
            let mut row = 0i128;
            for x in 0..w {
                row += f(x, y);
                s[(y + 1) * w1 + x + 1] = s[y * w1 + x + 1] + row;
            }
        }
        Sat { w1, s }
    }

    /// Sum over `[x0, x1) x [y0, y1)`.
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> i128 {
        let w1 = self.w1;
        self.s[y1 * w1 + x1] - self.s[y0 * w1 + x1] - self.s[y1 * w1 + x0] + self.s[y0 * w1 + x0]
    }
}

/// Mean over mask pixels of the SSIM map, averaged over channels. Windows
/// are centered on each pixel and clipped at the frame border; statistics
/// use population moments over the clipped window. `L` is 255 for 8-bit and
/// 65535 for 16-bit frames.
pub fn masked_ssim(a: &ImageFrame, b: &ImageFrame, m: &Mask, params: &SsimParams) -> Result<f64, MetricsError> {
    let n_mask = check_pair(a, b, m)?;
    if params.window == 0 || params.window.is_multiple_of(2) {
        return Err(MetricsError::BadWindow(params.window));
    }
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    let half = params.window / 2;
    let l = a.max_value();
    let c1 = (params.k1 * l).powi(2);
    let c2 = (params.k2 * l).powi(2);
    let mut total = 0.0;
    for c in 0..ch {
        let va = |x: usize, y: usize| a.get(x, y, c) as i128;
        let vb = |x: usize, y: usize| b.get(x, y, c) as i128;
        let sa = Sat::build(w, h, va);
        let sb = Sat::build(w, h, vb);
        let saa = Sat::build(w, h, |x, y| va(x, y) * va(x, y));
        let sbb = Sat::build(w, h, |x, y| vb(x, y) * vb(x, y));
        let sab = Sat::build(w, h, |x, y| va(x, y) * vb(x, y));
        let mut acc = 0.0;
        for y in 0..h {
            for x in (0..w).filter(|&x| m.get(x, y)) {
                let (x0, y0) = (x.saturating_sub(half), y.saturating_sub(half));
                let (x1, y1) = ((x + half + 1).min(w), (y + half + 1).min(h));
                let n = ((x1 - x0) * (y1 - y0)) as i128;
                let (ta, tb) = (sa.sum(x0, y0, x1, y1), sb.sum(x0, y0, x1, y1));
                // exact integer numerators, one division each
                let n2 = (n * n) as f64;
                let mu_a = ta as f64 / n as f64;
                let mu_b = tb as f64 / n as f64;
                let var_a = (n * saa.sum(x0, y0, x1, y1) - ta * ta) as f64 / n2;
                let var_b = (n * sbb.sum(x0, y0, x1, y1) - tb * tb) as f64 / n2;
                let cov = (n * sab.sum(x0, y0, x1, y1) - ta * tb) as f64 / n2;
                let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
                let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                acc += num / den;
            }
        }
        total += acc / n_mask as f64;
    }
    Ok(total / ch as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedMetrics {
    pub sad: f64,
    pub ssd: f64,
    pub mse: f64,
    pub rmse: f64,
    pub ssim: f64,
    pub n_mask: usize,
}

pub fn masked_metrics(a: &ImageFrame, b: &ImageFrame, m: &Mask, params: &SsimParams) -> Result<MaskedMetrics, MetricsError> {
    let e = masked_errors(a, b, m)?;
    Ok(MaskedMetrics {
        sad: e.sad,
        ssd: e.ssd,
        mse: e.mse,
        rmse: e.rmse,
        ssim: masked_ssim(a, b, m, params)?,
        n_mask: e.n_mask,
    })
}

/// Rows are true classes, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrixK {
    pub labels: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrixK {
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, MetricsError> {
        let k = labels.len();
        if k < 2 {
            return Err(MetricsError::TooFewClasses(k));
        }
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(MetricsError::RowWidth {
                expected: k,
                got: counts.iter().map(Vec::len).find(|&l| l != k).unwrap_or(counts.len()),
            });
        }
        Ok(ConfusionMatrixK {
            labels,
            counts: counts.concat(),
        })
    }

    /// Classes are the sorted union of both label lists.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)> + Clone) -> Result<Self, MetricsError> {
        let mut index = BTreeMap::new();
        for (t, p) in pairs.clone() {
            index.insert(t, 0);
            index.insert(p, 0);
        }
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let k = index.len();
        if k < 2 {
            return Err(MetricsError::TooFewClasses(k));
        }
        let mut counts = vec![0u64; k * k];
        for (t, p) in pairs {
            counts[index[t] * k + index[p]] += 1;
        }
        Ok(ConfusionMatrixK {
            labels: index.keys().map(|s| s.to_string()).collect(),
            counts,
        })
    }

    pub fn classes(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes() + pred]
    }

    /// One-vs-rest counts for class `k`.
    pub fn class_confusion(&self, k: usize) -> PixelConfusion {
        let n = self.classes();
        let tp = self.get(k, k);
        let row: u64 = (0..n).map(|j| self.get(k, j)).sum();
        let col: u64 = (0..n).map(|i| self.get(i, k)).sum();
        let total: u64 = self.counts.iter().sum();
        PixelConfusion {
            tp,
            fp: col - tp,
            fn_: row - tp,
            tn: total + tp - row - col,
        }
    }
}

/// Unweighted mean of per-class precision, recall and F1.
pub fn macro_prf(cm: &ConfusionMatrixK) -> Prf {
    let k = cm.classes();
    let per: Vec<Prf> = (0..k).map(|c| prf(&cm.class_confusion(c))).collect();
    let mean = |f: fn(&Prf) -> f64| per.iter().map(f).sum::<f64>() / k as f64;
    Prf {
        precision: mean(|p| p.precision),
        recall: mean(|p| p.recall),
        f1: mean(|p| p.f1),
    }
}

/// Per-image metric rows under fixed column names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    pub mean: f64,
    /// Population standard deviation (divisor N).
    pub std: f64,
    pub n: usize,
}

impl MetricTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        MetricTable {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, values: Vec<f64>) -> Result<(), MetricsError> {
        if values.len() != self.columns.len() {
            return Err(MetricsError::RowWidth {
                expected: self.columns.len(),
                got: values.len(),
            });
        }
        self.rows.push((id.into(), values));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, v)| v[i]).collect())
    }

    /// One CSV row per image; first column `image_id`.
    pub fn write_csv(&self, w: impl Write) -> Result<(), MetricsError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(std::iter::once("image_id").chain(self.columns.iter().map(String::as_str)))?;
        for (id, values) in &self.rows {
            wtr.write_record(std::iter::once(id.clone()).chain(values.iter().map(|v| v.to_string())))?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Mean and population standard deviation of each column. Non-finite
/// values are left out of their column.
pub fn corpus_report(table: &MetricTable) -> Result<Vec<Aggregate>, MetricsError> {
    if table.rows.is_empty() {
        return Err(MetricsError::NoRows);
    }
    Ok(table
        .columns
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let vals: Vec<f64> = table.rows.iter().map(|(_, v)| v[i]).filter(|v| v.is_finite()).collect();
            let n = vals.len();
            let (mean, std) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                (mean, var.sqrt())
            };
            Aggregate {
                metric: name.clone(),
                mean,
                std,
                n,
            }
        })
        .collect())
}

pub fn write_aggregates_csv(aggs: &[Aggregate], w: impl Write) -> Result<(), MetricsError> {
    let mut wtr = csv::Writer::from_writer(w);
    for a in aggs {
        wtr.serialize(a)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Fixed-width `metric  mean ± std  (n)` table.
pub fn render_table(title: &str, aggs: &[Aggregate]) -> String {
    let width = aggs.iter().map(|a| a.metric.len()).max().unwrap_or(6).max(6);
    let mut out = format!("{title}\n");
    for a in aggs {
        let _ = writeln!(out, "  {:<width$}  {:>12.4} ± {:<10.4} (n={})", a.metric, a.mean, a.std, a.n);
    }
    out
}
