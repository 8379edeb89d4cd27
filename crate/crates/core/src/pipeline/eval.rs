//! `deid eval`: scores pipeline outputs against a synthetic corpus.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::deid::mask_name;
use super::{write_atomic, PipelineError};
use crate::exec::Execution;
use crate::frame::Mask;
use crate::metrics::{
    corpus_report, macro_prf, mask_confusion, masked_metrics, prf, render_table, write_aggregates_csv, Aggregate,
    ConfusionMatrixK, MetricTable, PixelConfusion, Prf, SsimParams,
};
use crate::png_io;
use crate::synth::{read_manifest, ManifestRow};

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Directory written by `deid synth`.
    pub corpus: PathBuf,
    /// Directory written by `deid run` over `corpus/images`.
    pub outputs: PathBuf,
    pub report_dir: PathBuf,
    /// CSV with `truth` and `predicted` columns for macro scores.
    pub predictions: Option<PathBuf>,
    pub ssim: SsimParams,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskScores {
    /// All pixels of all images pooled.
    pub pooled: Prf,
    /// Per-image scores averaged.
    pub mean: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub images: usize,
    /// Images with no pipeline output (withheld or quarantined).
    pub missing_outputs: usize,
    pub backend: String,
    pub ssim: SsimParams,
    /// Truth is the union of item bounding boxes.
    pub box_level: MaskScores,
    /// Truth is the rendered glyph pixels.
    pub glyph_level: MaskScores,
    pub inpainting: Vec<Aggregate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_scores: Option<Prf>,
}

struct ImageEval {
    id: String,
    boxes: PixelConfusion,
    glyphs: PixelConfusion,
    missing: bool,
    /// sad, ssd, mse, rmse, ssim over the redaction mask.
    quality: Option<[f64; 5]>,
}

fn eval_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Eval(format!("{}: {e}", path.display()))
}

fn eval_image(cfg: &EvalConfig, id: &str, rows: &[&ManifestRow]) -> Result<ImageEval, PipelineError> {
    let glyph_path = cfg.corpus.join("masks").join(format!("{id}.png"));
    let glyphs = png_io::read_mask(&glyph_path).map_err(|e| eval_err(&glyph_path, e))?;
    let (w, h) = (glyphs.width(), glyphs.height());
    let mut boxes = Mask::new(w, h);
    for r in rows {
        boxes.fill_rect(&r.bbox());
    }
    let pred_path = cfg.outputs.join(mask_name(&format!("{id}.png"), 0));
    let image_path = cfg.outputs.join("images").join(format!("{id}.png"));
    let missing = !pred_path.exists() || !image_path.exists();
    let pred = if missing {
        Mask::new(w, h)
    } else {
        png_io::read_mask(&pred_path).map_err(|e| eval_err(&pred_path, e))?
    };
    let box_c = mask_confusion(&pred, &boxes).map_err(|e| eval_err(&pred_path, e))?;
    let glyph_c = mask_confusion(&pred, &glyphs).map_err(|e| eval_err(&pred_path, e))?;
    let quality = if missing || pred.is_empty() {
        None
    } else {
        let clean_path = cfg.corpus.join("clean").join(format!("{id}.png"));
        let clean = png_io::read_frame(&clean_path).map_err(|e| eval_err(&clean_path, e))?;
        let restored = png_io::read_frame(&image_path).map_err(|e| eval_err(&image_path, e))?;
        let m = masked_metrics(&clean, &restored, &pred, &cfg.ssim).map_err(|e| eval_err(&image_path, e))?;
        Some([m.sad, m.ssd, m.mse, m.rmse, m.ssim])
    };
    Ok(ImageEval {
        id: id.to_string(),
        boxes: box_c,
        glyphs: glyph_c,
        missing,
        quality,
    })
}

fn scores(evals: &[ImageEval], pick: fn(&ImageEval) -> PixelConfusion) -> MaskScores {
    let pooled = evals.iter().map(pick).fold(PixelConfusion::default(), |a, c| a.merge(&c));
    let per: Vec<Prf> = evals.iter().map(|e| prf(&pick(e))).collect();
    let n = per.len().max(1) as f64;
    MaskScores {
        pooled: prf(&pooled),
        mean: Prf {
            precision: per.iter().map(|p| p.precision).sum::<f64>() / n,
            recall: per.iter().map(|p| p.recall).sum::<f64>() / n,
            f1: per.iter().map(|p| p.f1).sum::<f64>() / n,
        },
    }
}

#[derive(Deserialize)]
struct PredictionRow {
    truth: String,
    predicted: String,
}

fn macro_from_csv(path: &Path) -> Result<Prf, PipelineError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let rows = rdr
        .deserialize::<PredictionRow>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let cm = ConfusionMatrixK::from_pairs(rows.iter().map(|r| (r.truth.as_str(), r.predicted.as_str())))
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    Ok(macro_prf(&cm))
}

fn backend_of(outputs: &Path) -> String {
    fs::read_to_string(outputs.join("summary.json"))
        .ok()
        .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
        .and_then(|v| v.get("backend").and_then(|b| b.as_str()).map(str::to_string))
        .unwrap_or_else(|| "unknown".into())
}

/// Writes `mask_scores.csv`, `inpainting.csv` (one row per image),
/// `inpainting_summary.csv`, `summary.txt` and `eval.json` to the report
/// directory.
pub fn run_eval(cfg: &EvalConfig) -> Result<EvalSummary, PipelineError> {
    let manifest_path = cfg.corpus.join("manifest.csv");
    if !manifest_path.is_file() {
        return Err(PipelineError::Config(format!("{} not found", manifest_path.display())));
    }
    if !cfg.outputs.is_dir() {
        return Err(PipelineError::Config(format!("{} is not a directory", cfg.outputs.display())));
    }
    let manifest = read_manifest(&manifest_path).map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut by_image: BTreeMap<String, Vec<&ManifestRow>> = BTreeMap::new();
    for r in &manifest {
        by_image.entry(r.image_id.clone()).or_default().push(r);
    }
    // images without overlay items have no manifest rows
    let images_dir = cfg.corpus.join("images");
    for entry in fs::read_dir(&images_dir).map_err(|e| PipelineError::io(&images_dir, e))? {
        let path = entry.map_err(|e| PipelineError::io(&images_dir, e))?.path();
        if let (Some("png"), Some(stem)) = (path.extension().and_then(|e| e.to_str()), path.file_stem()) {
            by_image.entry(stem.to_string_lossy().into_owned()).or_default();
        }
    }
    let ids: Vec<(&String, &Vec<&ManifestRow>)> = by_image.iter().collect();
    let evals = Execution::from_workers(cfg.workers)
        .map(&ids, |(id, rows)| eval_image(cfg, id, rows))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut mask_table = MetricTable::new([
        "box_precision",
        "box_recall",
        "box_f1",
        "glyph_precision",
        "glyph_recall",
        "glyph_f1",
    ]);
    let mut quality = MetricTable::new(["sad", "ssd", "mse", "rmse", "ssim"]);
    for e in &evals {
        let (b, g) = (prf(&e.boxes), prf(&e.glyphs));
        mask_table
            .push(e.id.clone(), vec![b.precision, b.recall, b.f1, g.precision, g.recall, g.f1])
            .expect("row width");
        if let Some(q) = e.quality {
            quality.push(e.id.clone(), q.to_vec()).expect("row width");
        }
    }
    let inpainting = if quality.rows.is_empty() {
        Vec::new()
    } else {
        corpus_report(&quality).expect("non-empty")
    };
    let backend = backend_of(&cfg.outputs);
    let summary = EvalSummary {
        images: evals.len(),
        missing_outputs: evals.iter().filter(|e| e.missing).count(),
        backend: backend.clone(),
        ssim: cfg.ssim,
        box_level: scores(&evals, |e| e.boxes),
        glyph_level: scores(&evals, |e| e.glyphs),
        inpainting,
        macro_scores: cfg.predictions.as_deref().map(macro_from_csv).transpose()?,
    };

    let dir = &cfg.report_dir;
    let csv_bytes = |t: &MetricTable| -> Result<Vec<u8>, PipelineError> {
        let mut buf = Vec::new();
        t.write_csv(&mut buf).map_err(|e| PipelineError::Eval(e.to_string()))?;
        Ok(buf)
    };
    write_atomic(&dir.join("mask_scores.csv"), &csv_bytes(&mask_table)?)?;
    write_atomic(&dir.join("inpainting.csv"), &csv_bytes(&quality)?)?;
    let mut agg = Vec::new();
    write_aggregates_csv(&summary.inpainting, &mut agg).map_err(|e| PipelineError::Eval(e.to_string()))?;
    write_atomic(&dir.join("inpainting_summary.csv"), &agg)?;
    write_atomic(&dir.join("summary.txt"), render_summary(&summary, &mask_table).as_bytes())?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&dir.join("eval.json"), json.as_bytes())?;
    Ok(summary)
}

fn render_summary(s: &EvalSummary, masks: &MetricTable) -> String {
    let line = |name: &str, m: &MaskScores| {
        format!(
            "  {name:<6} pooled P {:.4} R {:.4} F1 {:.4} | per-image mean P {:.4} R {:.4} F1 {:.4}\n",
            m.pooled.precision, m.pooled.recall, m.pooled.f1, m.mean.precision, m.mean.recall, m.mean.f1
        )
    };
    let mut out = format!(
        "images {} (missing outputs {}), backend {}, SSIM window {} k1 {} k2 {}\n\nmask detection\n",
        s.images, s.missing_outputs, s.backend, s.ssim.window, s.ssim.k1, s.ssim.k2
    );
    out.push_str(&line("box", &s.box_level));
    out.push_str(&line("glyph", &s.glyph_level));
    if let Ok(aggs) = corpus_report(masks) {
        out.push('\n');
        out.push_str(&render_table("per-image mask scores (mean ± std)", &aggs));
    }
    if !s.inpainting.is_empty() {
        out.push('\n');
        out.push_str(&render_table(&format!("inpainting over the redaction mask, {}", s.backend), &s.inpainting));
    }
    if let Some(m) = &s.macro_scores {
        out.push_str(&format!("\nmacro P {:.4} R {:.4} F1 {:.4}\n", m.precision, m.recall, m.f1));
    }
    out
}
