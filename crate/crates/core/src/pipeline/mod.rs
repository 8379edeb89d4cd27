//! Batch front end: de-identification runs, corpus synthesis, evaluation
//! campaigns, output re-audits and policy checks.

mod deid;
mod eval;
mod verify;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use walkdir::WalkDir;

use crate::exec::Execution;
use crate::inpaint::external::ExternalConfig;
use crate::inpaint::InpaintConfig;
use crate::redact::{Detector, DetectorParams, DetectorRegistry};
use crate::scrub::{JitterKey, PolicyTable};
use crate::synth::{generate_corpus, SynthConfig, SynthError, SynthSummary};

pub use deid::{run_deid, FileReport, FileStatus, FrameLog, RunSummary};
pub use eval::{run_eval, EvalConfig, EvalSummary};
pub use verify::{policy_check, run_verify, PolicyCheck, VerifyFinding, VerifyReport};

pub const DEFAULT_KEY_ENV: &str = "DEID_JITTER_KEY";

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad configuration or unusable inputs; nothing was processed.
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    /// A file failed under fail-hard mode.
    #[error("aborted on {file}: {reason}")]
    Aborted { file: String, reason: String },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("evaluation: {0}")]
    Eval(String),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}

/// Where the jitter secret comes from. Only the source is ever printed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum KeySource {
    Env(String),
    File(PathBuf),
}

impl KeySource {
    pub fn load(&self) -> Result<JitterKey, PipelineError> {
        match self {
            KeySource::Env(var) => JitterKey::from_env(var),
            KeySource::File(path) => JitterKey::from_file(path),
        }
        .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    /// `None` uses the bundled policy.
    pub policy: Option<PathBuf>,
    pub key: KeySource,
    pub detector: String,
    pub detector_params: DetectorParams,
    pub inpaint: InpaintConfig,
    pub external: ExternalConfig,
    /// Send the modality as the prompt to the external backend.
    pub context_prompt: bool,
    pub workers: usize,
    pub seed: u64,
    /// Abort the batch on the first failed file instead of quarantining it.
    pub fail_hard: bool,
    /// Redact/inpaint passes per frame before a residue is reported.
    pub max_passes: usize,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input: input.into(),
            output: output.into(),
            policy: None,
            key: KeySource::Env(DEFAULT_KEY_ENV.into()),
            detector: "reference".into(),
            detector_params: DetectorParams::default(),
            inpaint: InpaintConfig::default(),
            external: ExternalConfig::default(),
            context_prompt: false,
            workers: 0,
            seed: 0,
            fail_hard: false,
            max_passes: 3,
        }
    }

    pub fn execution(&self) -> Execution {
        Execution::from_workers(self.workers)
    }

    /// Checks everything that can be checked before touching inputs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.inpaint.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.max_passes == 0 {
            return Err(PipelineError::Config("max_passes must be at least 1".into()));
        }
        let input = fs::canonicalize(&self.input)
            .map_err(|e| PipelineError::Config(format!("input {}: {e}", self.input.display())))?;
        let output = absolute(&self.output)?;
        if output == input {
            return Err(PipelineError::Config("output directory must differ from the input".into()));
        }
        if input.is_dir() && output.starts_with(&input) {
            return Err(PipelineError::Config("output directory must not lie inside the input".into()));
        }
        if output.exists() && !output.is_dir() {
            return Err(PipelineError::Config(format!("output {} is not a directory", output.display())));
        }
        Ok(())
    }

    pub fn load_policy(&self) -> Result<PolicyTable, PipelineError> {
        load_policy(self.policy.as_deref())
    }

    pub fn build_detector(&self) -> Result<Box<dyn Detector>, PipelineError> {
        build_detector(&self.detector, &self.detector_params)
    }
}

pub(crate) fn load_policy(path: Option<&Path>) -> Result<PolicyTable, PipelineError> {
    match path {
        Some(p) => PolicyTable::load(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display()))),
        None => Ok(PolicyTable::default_table()),
    }
}

pub(crate) fn build_detector(name: &str, params: &DetectorParams) -> Result<Box<dyn Detector>, PipelineError> {
    let registry = DetectorRegistry::default();
    registry.create(name, params).ok_or_else(|| {
        PipelineError::Config(format!("unknown detector {name:?} (known: {})", registry.names().join(", ")))
    })
}

/// Absolute form of a path that may not exist yet.
fn absolute(p: &Path) -> Result<PathBuf, PipelineError> {
    let mut existing = p.to_path_buf();
    let mut tail = Vec::new();
    while !existing.exists() {
        match (existing.parent(), existing.file_name()) {
            (Some(parent), Some(name)) => {
                tail.push(name.to_os_string());
                existing = if parent.as_os_str().is_empty() { PathBuf::from(".") } else { parent.to_path_buf() };
            }
            _ => break,
        }
    }
    let mut out = fs::canonicalize(&existing).map_err(|e| PipelineError::io(&existing, e))?;
    out.extend(tail.iter().rev());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Dicom,
    Png,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputFile {
    pub path: PathBuf,
    /// Relative to the input root with `/` separators; the file's id.
    pub rel: String,
    pub kind: InputKind,
}

fn sniff(path: &Path) -> Option<InputKind> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => return Some(InputKind::Png),
        Some("dcm") | Some("dicom") => return Some(InputKind::Dicom),
        _ => {}
    }
    let mut head = [0u8; 132];
    let mut f = fs::File::open(path).ok()?;
    io::Read::read_exact(&mut f, &mut head).ok()?;
    (&head[128..] == b"DICM").then_some(InputKind::Dicom)
}

/// Recognized inputs under `root` in path order, plus the count of other
/// files. A file root is its own single input.
pub fn discover_inputs(root: &Path) -> Result<(Vec<InputFile>, usize), PipelineError> {
    if root.is_file() {
        let kind = sniff(root).ok_or_else(|| PipelineError::Config(format!("{} is not a DICOM or PNG file", root.display())))?;
        let rel = root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok((vec![InputFile { path: root.to_path_buf(), rel, kind }], 0));
    }
    let mut found = Vec::new();
    let mut ignored = 0;
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| PipelineError::Config(format!("scanning {}: {e}", root.display())))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walk stays under root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        match sniff(entry.path()) {
            Some(kind) => found.push(InputFile {
                path: entry.path().to_path_buf(),
                rel,
                kind,
            }),
            None => ignored += 1,
        }
    }
    Ok((found, ignored))
}

/// Writes through a sibling temporary file so readers never see a partial
/// output.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

pub fn run_synth(
    clean_dir: Option<&Path>,
    out_dir: &Path,
    n: usize,
    cfg: &SynthConfig,
    seed: u64,
    workers: usize,
) -> Result<SynthSummary, PipelineError> {
    cfg.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    if let Some(dir) = clean_dir {
        if !dir.is_dir() {
            return Err(PipelineError::Config(format!("clean directory {} does not exist", dir.display())));
        }
    }
    Ok(generate_corpus(clean_dir, out_dir, n, cfg, seed, Execution::from_workers(workers))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_must_differ_from_input() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(dir.path(), dir.path());
        assert!(cfg.validate().unwrap_err().is_config());
        let cfg = PipelineConfig::new(dir.path(), dir.path().join("out"));
        assert!(cfg.validate().unwrap_err().is_config());
        let other = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(dir.path(), other.path().join("new/out"));
        cfg.validate().unwrap();
        let mut bad = cfg.clone();
        bad.inpaint.radius = 0.0;
        assert!(bad.validate().unwrap_err().is_config());
    }

    #[test]
    fn discovery_sorts_and_sniffs() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("b")).unwrap();
        fs::write(dir.path().join("b/x.PNG"), b"").unwrap();
        fs::write(dir.path().join("a.txt"), b"hello").unwrap();
        let mut dicm = vec![0u8; 128];
        dicm.extend_from_slice(b"DICM");
        fs::write(dir.path().join("a_noext"), &dicm).unwrap();
        let (found, ignored) = discover_inputs(dir.path()).unwrap();
        let names: Vec<(&str, InputKind)> = found.iter().map(|f| (f.rel.as_str(), f.kind)).collect();
        assert_eq!(names, vec![("a_noext", InputKind::Dicom), ("b/x.PNG", InputKind::Png)]);
        assert_eq!(ignored, 1);
    }

    #[test]
    fn key_errors_name_the_source_only() {
        std::env::set_var("DEID_TEST_SHORT_KEY", "tooshort");
        let err = KeySource::Env("DEID_TEST_SHORT_KEY".into()).load().unwrap_err().to_string();
        assert!(!err.contains("tooshort"), "{err}");
        let err = KeySource::Env("DEID_TEST_UNSET_KEY_VAR".into()).load().unwrap_err().to_string();
        assert!(err.contains("DEID_TEST_UNSET_KEY_VAR"));
    }
}
