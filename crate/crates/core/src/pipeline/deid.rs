//! `deid run`: per-file scrub, redact, sequester, inpaint and verify.

use std::fs;
use std::panic::{self, AssertUnwindSafe};

use serde::Serialize;

use super::{discover_inputs, write_atomic, InputFile, InputKind, PipelineConfig, PipelineError};
use crate::dicom::{self, get_frames, parse_dicom, put_frames, serialize_dicom, tags, DataSet, DicomError};
use crate::frame::{ImageFrame, Mask, Window};
use crate::inpaint::external::{external_inpaint, BackendRequest};
use crate::inpaint::{composite_identity, telea_fill, Backend};
use crate::png_io;
use crate::redact::{redact, sequester, Detector, Sidecar, TextBox};
use crate::scrub::{revalidate, scrub, JitterKey, PolicyTable, ScrubReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FileStatus {
    /// Outputs written.
    Clean,
    /// Processed, but a residue remained; nothing written.
    Withheld,
    /// Could not be processed; nothing written.
    Quarantined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameLog {
    pub index: usize,
    pub boxes: usize,
    pub mask_pixels: usize,
    pub passes: usize,
    pub backend: Backend,
    /// Why the external backend was replaced by telea.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
    /// Boxes the verification re-pass still found.
    pub residual_boxes: usize,
    /// `[min, max]` of the 16-bit to 8-bit window used for detection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[u16; 2]>,
}

/// Per-file log record. Never holds extracted text or key material.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileReport {
    pub input: String,
    pub kind: InputKind,
    pub status: FileStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub frames: Vec<FrameLog>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scrub: Option<ScrubReport>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunSummary {
    pub files: usize,
    pub clean: usize,
    pub withheld: usize,
    pub quarantined: usize,
    pub ignored: usize,
    pub frames: usize,
    pub boxes: usize,
    pub mask_pixels: usize,
    pub fallbacks: usize,
    pub detector: String,
    pub backend: String,
    pub radius: f64,
    pub seed: u64,
}

impl RunSummary {
    pub fn has_findings(&self) -> bool {
        self.withheld + self.quarantined > 0
    }
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    detector: &'a dyn Detector,
    policy: &'a PolicyTable,
    key: Option<&'a JitterKey>,
}

struct Outcome {
    report: FileReport,
    /// (path under the output root, bytes); empty unless clean.
    files: Vec<(String, Vec<u8>)>,
}

pub(crate) fn stem(rel: &str) -> &str {
    match rel.rfind('.') {
        Some(i) if i > rel.rfind('/').map_or(0, |s| s + 1) => &rel[..i],
        _ => rel,
    }
}

pub fn mask_name(rel: &str, frame: usize) -> String {
    format!("masks/{}.f{frame}.png", stem(rel))
}

/// Runs the whole batch. Outputs land under `images/`, `masks/`, `text/`
/// (sidecar CSVs, the sensitive part) and `reports/`, with `summary.json`
/// and `quarantine.jsonl` at the root.
pub fn run_deid(cfg: &PipelineConfig) -> Result<(RunSummary, Vec<FileReport>), PipelineError> {
    cfg.validate()?;
    let policy = cfg.load_policy()?;
    let detector = cfg.build_detector()?;
    let (inputs, ignored) = discover_inputs(&cfg.input)?;
    let key = if inputs.iter().any(|f| f.kind == InputKind::Dicom) {
        Some(cfg.key.load()?)
    } else {
        None
    };
    fs::create_dir_all(&cfg.output).map_err(|e| PipelineError::io(&cfg.output, e))?;
    let ctx = Ctx {
        cfg,
        detector: detector.as_ref(),
        policy: &policy,
        key: key.as_ref(),
    };

    let outcomes = cfg.execution().map(&inputs, |input| -> Result<FileReport, PipelineError> {
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| process_file(&ctx, input)))
            .unwrap_or_else(|_| quarantine(input, "internal error while processing".into()));
        if cfg.fail_hard && outcome.report.status != FileStatus::Clean {
            return Err(PipelineError::Aborted {
                file: input.rel.clone(),
                reason: outcome.report.reason.clone().unwrap_or_default(),
            });
        }
        for (rel, bytes) in &outcome.files {
            write_atomic(&cfg.output.join(rel), bytes)?;
        }
        Ok(outcome.report)
    });
    let reports = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut summary = RunSummary {
        files: reports.len(),
        ignored,
        detector: cfg.detector.clone(),
        backend: cfg.inpaint.backend.to_string(),
        radius: cfg.inpaint.radius,
        seed: cfg.seed,
        ..Default::default()
    };
    let mut quarantine = String::new();
    for r in &reports {
        match r.status {
            FileStatus::Clean => summary.clean += 1,
            FileStatus::Withheld => summary.withheld += 1,
            FileStatus::Quarantined => summary.quarantined += 1,
        }
        if r.status != FileStatus::Clean {
            quarantine.push_str(&serde_json::to_string(r).expect("report serializes"));
            quarantine.push('\n');
        }
        summary.frames += r.frames.len();
        for f in &r.frames {
            summary.boxes += f.boxes;
            summary.mask_pixels += f.mask_pixels;
            summary.fallbacks += f.fallback.is_some() as usize;
        }
    }
    write_atomic(&cfg.output.join("quarantine.jsonl"), quarantine.as_bytes())?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&cfg.output.join("summary.json"), json.as_bytes())?;
    log::info!(
        "{} files: {} clean, {} withheld, {} quarantined",
        summary.files,
        summary.clean,
        summary.withheld,
        summary.quarantined
    );
    Ok((summary, reports))
}

fn quarantine(input: &InputFile, reason: String) -> Outcome {
    log::warn!("quarantined {}: {reason}", input.rel);
    Outcome {
        report: FileReport {
            input: input.rel.clone(),
            kind: input.kind,
            status: FileStatus::Quarantined,
            reason: Some(reason),
            frames: Vec::new(),
            scrub: None,
        },
        files: Vec::new(),
    }
}

/// Result of cleaning one frame.
struct Cleaned {
    frame: ImageFrame,
    mask: Mask,
    boxes: Vec<TextBox>,
    log: FrameLog,
}

fn process_file(ctx: &Ctx, input: &InputFile) -> Outcome {
    let bytes = match fs::read(&input.path) {
        Ok(b) => b,
        Err(e) => return quarantine(input, format!("read: {e}")),
    };
    let result = match input.kind {
        InputKind::Dicom => process_dicom(ctx, input, &bytes),
        InputKind::Png => process_png(ctx, input, &bytes),
    };
    match result {
        Ok(outcome) => outcome,
        Err(reason) => quarantine(input, reason),
    }
}

fn process_png(ctx: &Ctx, input: &InputFile, bytes: &[u8]) -> Result<Outcome, String> {
    let frame = png_io::decode_frame(bytes).map_err(|e| e.to_string())?;
    let cleaned = clean_frame(ctx, &frame, 0, &input.rel, "")?;
    let out = png_io::encode_frame(&cleaned.frame).map_err(|e| e.to_string())?;
    finish(input, vec![cleaned], None, format!("images/{}", input.rel), out)
}

fn process_dicom(ctx: &Ctx, input: &InputFile, bytes: &[u8]) -> Result<Outcome, String> {
    let ds = parse_dicom(bytes).map_err(|e| format!("parse: {e}"))?;
    let key = ctx.key.ok_or("no jitter key loaded")?;
    let (scrubbed, report) = scrub(&ds, ctx.policy, key).map_err(|e| format!("scrub: {e}"))?;
    let frames = match get_frames(&scrubbed) {
        Ok(f) => f,
        Err(DicomError::MissingAttribute("PixelData")) => Vec::new(),
        Err(e) => return Err(format!("pixel data: {e}")),
    };
    let prompt = if ctx.cfg.context_prompt {
        scrubbed.text(tags::MODALITY).unwrap_or_default()
    } else {
        String::new()
    };
    let cleaned = frames
        .iter()
        .enumerate()
        .map(|(k, f)| clean_frame(ctx, f, k, &input.rel, &prompt))
        .collect::<Result<Vec<_>, _>>()?;
    let out_ds: DataSet = if cleaned.is_empty() {
        scrubbed
    } else {
        let finals: Vec<ImageFrame> = cleaned.iter().map(|c| c.frame.clone()).collect();
        put_frames(&scrubbed, &finals).map_err(|e| format!("pixel data: {e}"))?
    };
    let out = serialize_dicom(&out_ds).map_err(|e| format!("serialize: {e}"))?;
    // audit what will actually be written
    let reread = dicom::parse_dicom(&out).map_err(|e| format!("re-parse of output: {e}"))?;
    let check = revalidate(&reread, ctx.policy);
    let scrub_report = if check.passed() {
        report
    } else {
        ScrubReport::new(report.counts().clone(), report.blanked().to_vec(), check.findings().to_vec())
    };
    finish(input, cleaned, Some(scrub_report), format!("images/{}", input.rel), out)
}

fn finish(
    input: &InputFile,
    cleaned: Vec<Cleaned>,
    scrub: Option<ScrubReport>,
    image_path: String,
    image_bytes: Vec<u8>,
) -> Result<Outcome, String> {
    let residual: usize = cleaned.iter().map(|c| c.log.residual_boxes).sum();
    let metadata_ok = scrub.as_ref().is_none_or(ScrubReport::passed);
    let mut report = FileReport {
        input: input.rel.clone(),
        kind: input.kind,
        status: FileStatus::Clean,
        reason: None,
        frames: cleaned.iter().map(|c| c.log.clone()).collect(),
        scrub,
    };
    if residual > 0 || !metadata_ok {
        let mut why = Vec::new();
        if residual > 0 {
            why.push(format!("{residual} text boxes remain after redaction"));
        }
        if !metadata_ok {
            why.push("metadata revalidation reported findings".to_string());
        }
        report.status = FileStatus::Withheld;
        report.reason = Some(why.join("; "));
        log::warn!("withheld {}: {}", input.rel, report.reason.as_deref().unwrap_or(""));
        return Ok(Outcome { report, files: Vec::new() });
    }

    let mut files = vec![(image_path, image_bytes)];
    let mut sidecar = Sidecar::new(Vec::new()).map_err(|e| e.to_string())?;
    for (k, c) in cleaned.iter().enumerate() {
        sequester(&c.boxes, &input.rel, &mut sidecar).map_err(|e| e.to_string())?;
        files.push((mask_name(&input.rel, k), png_io::encode_mask(&c.mask).map_err(|e| e.to_string())?));
    }
    files.push((
        format!("text/{}.csv", stem(&input.rel)),
        sidecar.into_inner().map_err(|e| e.to_string())?,
    ));
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    files.push((format!("reports/{}.json", stem(&input.rel)), json.into_bytes()));
    Ok(Outcome { report, files })
}

/// Detect, redact and inpaint until the detector comes back empty or the
/// pass budget is spent. Works on the 8-bit view; the result is written
/// back at the frame's own depth with pixels outside the mask untouched.
fn clean_frame(ctx: &Ctx, frame: &ImageFrame, index: usize, rel: &str, prompt: &str) -> Result<Cleaned, String> {
    let cfg = ctx.cfg;
    let window = Window::of(frame);
    let mut current = window.to_u8(frame);
    let mut union = Mask::new(frame.width(), frame.height());
    let mut all_boxes = Vec::new();
    let mut fallback = None;
    let mut passes = 0;
    let mut boxes = ctx.detector.detect(&current, index);
    while !boxes.is_empty() && passes < cfg.max_passes {
        let (redacted, mask) = redact(&current, &boxes);
        let restored = match cfg.inpaint.backend {
            Backend::Telea => telea_fill(&redacted, &mask, &cfg.inpaint).map_err(|e| format!("inpaint frame {index}: {e}"))?,
            Backend::External => {
                let req = BackendRequest {
                    frame: &redacted,
                    mask: &mask,
                    prompt: prompt.to_string(),
                    request_id: format!("{rel}#{index}.{passes}"),
                };
                match external_inpaint(&req, &cfg.external) {
                    Ok(f) => f,
                    Err(e) if cfg.fail_hard => return Err(format!("external backend: {e}")),
                    Err(e) => {
                        log::warn!("{rel} frame {index}: external backend failed, using telea: {e}");
                        fallback = Some(e.to_string());
                        telea_fill(&redacted, &mask, &cfg.inpaint).map_err(|e| format!("inpaint frame {index}: {e}"))?
                    }
                }
            }
        };
        current = composite_identity(&current, &restored, &mask).map_err(|e| e.to_string())?;
        union.union_with(&mask);
        all_boxes.append(&mut boxes);
        passes += 1;
        boxes = ctx.detector.detect(&current, index);
    }
    let out = window.restore_masked(frame, &current, &union).map_err(|e| e.to_string())?;
    // re-detect on what is written, under the window the text was found with
    let residual = if out.bit_depth() == 8 {
        boxes.len()
    } else {
        ctx.detector.detect(&window.to_u8(&out), index).len()
    };
    Ok(Cleaned {
        log: FrameLog {
            index,
            boxes: all_boxes.len(),
            mask_pixels: union.count(),
            passes,
            backend: cfg.inpaint.backend,
            fallback,
            residual_boxes: residual,
            window: (frame.bit_depth() == 16).then_some([window.min, window.max]),
        },
        frame: out,
        mask: union,
        boxes: all_boxes,
    })
}
