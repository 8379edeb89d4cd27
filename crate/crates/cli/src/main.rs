use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deid_core::inpaint::external::ExternalConfig;
use deid_core::inpaint::{Backend, InpaintConfig};
use deid_core::metrics::SsimParams;
use deid_core::pipeline::{
    policy_check, run_deid, run_eval, run_synth, run_verify, EvalConfig, KeySource, PipelineConfig, PipelineError,
    DEFAULT_KEY_ENV,
};
use deid_core::redact::DetectorParams;
use deid_core::synth::SynthConfig;
use log::{error, info};
use serde::Serialize;

const EXIT_FINDINGS: u8 = 2;
const EXIT_FATAL: u8 = 3;

/// Batch de-identification of DICOM and PNG images.
#[derive(Parser)]
#[command(name = "deid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// De-identify a file or directory tree.
    Run(RunArgs),
    /// Generate a synthetic overlay corpus with ground truth.
    Synth(SynthArgs),
    /// Score pipeline outputs against a synthetic corpus.
    Eval(EvalArgs),
    /// Re-audit an output directory.
    Verify(VerifyArgs),
    /// Policy table tools.
    Policy {
        #[command(subcommand)]
        command: PolicyCommand,
    },
}

#[derive(Subcommand)]
enum PolicyCommand {
    /// Parse a policy table and list uncovered identifier categories.
    Check {
        #[arg(long)]
        policy: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DetectorArgs {
    #[arg(long, default_value = "reference")]
    detector: String,
    /// Minimum 8-bit level counted as text.
    #[arg(long, default_value_t = 230)]
    intensity_floor: u8,
    /// Word grouping distance in pixels; median glyph size based when unset.
    #[arg(long)]
    word_gap: Option<f64>,
    #[arg(long, default_value_t = 1)]
    min_pixels: usize,
}

impl DetectorArgs {
    fn params(&self) -> DetectorParams {
        DetectorParams {
            intensity_floor: self.intensity_floor,
            word_gap: self.word_gap,
            min_pixels: self.min_pixels,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Metadata policy table; the bundled table when unset.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Environment variable holding the jitter key.
    #[arg(long, default_value = DEFAULT_KEY_ENV, conflicts_with = "key_file")]
    key_env: String,
    /// File holding the jitter key.
    #[arg(long)]
    key_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 0 uses every core, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = Backend::Telea)]
    backend: Backend,
    #[arg(long, default_value_t = 3.0)]
    radius: f64,
    /// `host:port` of the external inpainting service.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    retries: Option<usize>,
    /// Send the modality as the external backend prompt.
    #[arg(long)]
    context_prompt: bool,
    /// Stop at the first failed file instead of quarantining it.
    #[arg(long)]
    fail_hard: bool,
    #[arg(long, default_value_t = 3)]
    max_passes: usize,
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory of clean PNGs to overlay; generated phantoms when unset.
    #[arg(long)]
    clean_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    font_min: usize,
    #[arg(long, default_value_t = 24)]
    font_max: usize,
    #[arg(long, default_value_t = 1)]
    items_min: usize,
    #[arg(long, default_value_t = 6)]
    items_max: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory written by `deid synth`.
    #[arg(long)]
    corpus: PathBuf,
    /// Directory written by `deid run` over the corpus images.
    #[arg(long)]
    outputs: PathBuf,
    #[arg(long)]
    report_dir: PathBuf,
    /// Classifier predictions CSV with `truth` and `predicted` columns.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    ssim_window: usize,
    #[arg(long, default_value_t = 0.01)]
    ssim_k1: f64,
    #[arg(long, default_value_t = 0.03)]
    ssim_k2: f64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct VerifyArgs {
    dir: PathBuf,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    detector: DetectorArgs,
}

fn print_json(v: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(args: RunArgs) -> Result<bool, PipelineError> {
    let mut cfg = PipelineConfig::new(args.input, args.output);
    cfg.policy = args.policy;
    cfg.key = match args.key_file {
        Some(path) => KeySource::File(path),
        None => KeySource::Env(args.key_env),
    };
    cfg.detector = args.detector.detector.clone();
    cfg.detector_params = args.detector.params();
    cfg.inpaint = InpaintConfig {
        radius: args.radius,
        backend: args.backend,
    };
    let defaults = ExternalConfig::default();
    cfg.external = ExternalConfig {
        endpoint: args.endpoint.unwrap_or(defaults.endpoint),
        timeout_ms: args.timeout_ms.unwrap_or(defaults.timeout_ms),
        retries: args.retries.unwrap_or(defaults.retries),
        side: defaults.side,
    };
    cfg.context_prompt = args.context_prompt;
    cfg.workers = args.workers;
    cfg.seed = args.seed;
    cfg.fail_hard = args.fail_hard;
    cfg.max_passes = args.max_passes;
    let (summary, _) = run_deid(&cfg)?;
    info!(
        "{} files: {} clean, {} withheld, {} quarantined",
        summary.files, summary.clean, summary.withheld, summary.quarantined
    );
    print_json(&summary);
    Ok(!summary.has_findings())
}

fn synth(args: SynthArgs) -> Result<bool, PipelineError> {
    let cfg = SynthConfig {
        width: args.width,
        height: args.height,
        font_px: (args.font_min, args.font_max),
        items: (args.items_min, args.items_max),
        ..SynthConfig::default()
    };
    let summary = run_synth(args.clean_dir.as_deref(), &args.out, args.n, &cfg, args.seed, args.workers)?;
    print_json(&summary);
    Ok(true)
}

fn eval(args: EvalArgs) -> Result<bool, PipelineError> {
    let cfg = EvalConfig {
        corpus: args.corpus,
        outputs: args.outputs,
        report_dir: args.report_dir,
        predictions: args.predictions,
        ssim: SsimParams {
            window: args.ssim_window,
            k1: args.ssim_k1,
            k2: args.ssim_k2,
        },
        workers: args.workers,
    };
    let summary = run_eval(&cfg)?;
    print_json(&summary);
    Ok(true)
}

fn verify(args: VerifyArgs) -> Result<bool, PipelineError> {
    let report = run_verify(
        &args.dir,
        args.policy.as_deref(),
        &args.detector.detector,
        &args.detector.params(),
        args.workers,
    )?;
    for f in &report.findings {
        error!("{} [{}] {}", f.file, f.kind, f.detail);
    }
    print_json(&report);
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_FATAL) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
        Command::Verify(a) => verify(a),
        Command::Policy {
            command: PolicyCommand::Check { policy },
        } => policy_check(policy.as_deref()).map(|check| {
            print_json(&check);
            check.gaps.is_empty()
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FINDINGS),
        Err(e @ PipelineError::Aborted { .. }) => {
            eprintln!("deid: {e}");
            ExitCode::from(EXIT_FINDINGS)
        }
        Err(e) => {
            eprintln!("deid: {e}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
