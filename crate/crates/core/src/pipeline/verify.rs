//! `deid verify` and `deid policy check`.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::deid::stem;
use super::{build_detector, discover_inputs, load_policy, InputKind, PipelineError};
use crate::dicom::{get_frames, parse_dicom, DicomError};
use crate::exec::Execution;
use crate::frame::{ImageFrame, Window};
use crate::png_io;
use crate::redact::{Detector, DetectorParams};
use crate::scrub::{revalidate, PolicyTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyFinding {
    pub file: String,
    /// `metadata`, `pixels` or `unreadable`.
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct VerifyReport {
    pub files: usize,
    pub findings: Vec<VerifyFinding>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Detection windows recorded in a pipeline report, by frame.
fn recorded_windows(report: Option<&Path>) -> Vec<Option<Window>> {
    let Some(v) = report
        .and_then(|p| fs::read_to_string(p).ok())
        .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
    else {
        return Vec::new();
    };
    let frames = v.get("frames").and_then(|f| f.as_array()).cloned().unwrap_or_default();
    frames
        .iter()
        .map(|f| {
            let w = f.get("window")?.as_array()?;
            let min = u16::try_from(w.first()?.as_u64()?).ok()?;
            let max = u16::try_from(w.get(1)?.as_u64()?).ok()?;
            Some(Window { min, max })
        })
        .collect()
}

fn audit_frames(
    frames: &[ImageFrame],
    windows: &[Option<Window>],
    detector: &dyn Detector,
    file: &str,
    out: &mut Vec<VerifyFinding>,
) {
    for (k, f) in frames.iter().enumerate() {
        let window = windows.get(k).copied().flatten().unwrap_or_else(|| Window::of(f));
        let boxes = detector.detect(&window.to_u8(f), k);
        if !boxes.is_empty() {
            out.push(VerifyFinding {
                file: file.to_string(),
                kind: "pixels".into(),
                detail: format!("frame {k}: {} text boxes", boxes.len()),
            });
        }
    }
}

fn audit_file(
    path: &Path,
    rel: &str,
    kind: InputKind,
    report: Option<&Path>,
    policy: &PolicyTable,
    detector: &dyn Detector,
) -> Vec<VerifyFinding> {
    let mut out = Vec::new();
    let windows = recorded_windows(report);
    let unreadable = |detail: String| VerifyFinding {
        file: rel.to_string(),
        kind: "unreadable".into(),
        detail,
    };
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return vec![unreadable(e.to_string())],
    };
    match kind {
        InputKind::Png => match png_io::decode_frame(&bytes) {
            Ok(f) => audit_frames(&[f], &windows, detector, rel, &mut out),
            Err(e) => out.push(unreadable(e.to_string())),
        },
        InputKind::Dicom => {
            let ds = match parse_dicom(&bytes) {
                Ok(ds) => ds,
                Err(e) => return vec![unreadable(e.to_string())],
            };
            for f in revalidate(&ds, policy).findings() {
                out.push(VerifyFinding {
                    file: rel.to_string(),
                    kind: "metadata".into(),
                    detail: format!("{}: {}", f.path, f.reason),
                });
            }
            match get_frames(&ds) {
                Ok(frames) => audit_frames(&frames, &windows, detector, rel, &mut out),
                Err(DicomError::MissingAttribute("PixelData")) => {}
                Err(e) => out.push(unreadable(e.to_string())),
            }
        }
    }
    out
}

/// Re-audits a directory: metadata revalidation for DICOM files and text
/// re-detection on every frame. A pipeline output root is audited through
/// its `images/` subdirectory, and 16-bit frames are windowed as recorded
/// in `reports/` (min-max of the frame itself otherwise).
pub fn run_verify(
    dir: &Path,
    policy: Option<&Path>,
    detector: &str,
    params: &DetectorParams,
    workers: usize,
) -> Result<VerifyReport, PipelineError> {
    if !dir.exists() {
        return Err(PipelineError::Config(format!("{} does not exist", dir.display())));
    }
    let policy = load_policy(policy)?;
    let detector = build_detector(detector, params)?;
    let pipeline_root = dir.join("images").is_dir();
    let root = if pipeline_root { dir.join("images") } else { dir.to_path_buf() };
    let (inputs, _) = discover_inputs(&root)?;
    let findings = Execution::from_workers(workers)
        .map(&inputs, |f| {
            let report = pipeline_root.then(|| dir.join(format!("reports/{}.json", stem(&f.rel))));
            audit_file(&f.path, &f.rel, f.kind, report.as_deref(), &policy, detector.as_ref())
        })
        .into_iter()
        .flatten()
        .collect();
    Ok(VerifyReport {
        files: inputs.len(),
        findings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolicyCheck {
    pub entries: usize,
    /// HIPAA identifier categories no entry covers.
    pub gaps: Vec<String>,
}

/// Parses a policy table without the coverage requirement and lists the
/// uncovered categories. Unparseable tables are configuration errors.
pub fn policy_check(path: Option<&Path>) -> Result<PolicyCheck, PipelineError> {
    let table = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            PolicyTable::parse_unchecked(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?
        }
        None => PolicyTable::default_table(),
    };
    Ok(PolicyCheck {
        entries: table.entries().len(),
        gaps: table.coverage_gaps().iter().map(|c| c.label().to_string()).collect(),
    })
}
