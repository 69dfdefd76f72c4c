//! `ocrqa`: generate, validate, score and summarize character-level QA
//! supervision for OCR datasets.
//!
//! Exit codes: 0 success, 1 content failure, 2 format or version refusal,
//! 64 usage error.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use ocrqa_core::dataset::{self, DatasetError, ManifestFormat};
use ocrqa_core::metrics::{self, EvalOptions, MetricsError, PredictionSet, WerMode};
use ocrqa_core::pipeline;
use ocrqa_core::sampler::SamplingConfig;
use ocrqa_core::stats::DatasetStats;
use serde::Serialize;

use crate::config::{ConfigFile, Overrides};

const EXIT_FAILURE: u8 = 1;
const EXIT_REFUSED: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "ocrqa", version, about = "Character-level question-answer augmentation for OCR datasets")]
struct Cli {
    /// Base seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Compare characters case-insensitively.
    #[arg(long, global = true)]
    case_fold: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Tsv,
    Jsonl,
    Wordart,
    Esposalles,
}

impl From<FormatArg> for ManifestFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tsv => ManifestFormat::GenericTsv,
            FormatArg::Jsonl => ManifestFormat::GenericJsonl,
            FormatArg::Wordart => ManifestFormat::WordartLayout,
            FormatArg::Esposalles => ManifestFormat::EsposallesLayout,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WerArg {
    Exact,
    Token,
}

#[derive(Subcommand)]
enum Command {
    /// Build an augmented QA file from one or more manifests.
    Generate {
        /// Manifest file; repeat for multi-part datasets (ids get a `part<k>/` prefix).
        #[arg(long, required = true)]
        manifest: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "tsv")]
        format: FormatArg,
        /// wordart, esposalles or uniform.
        #[arg(long)]
        preset: Option<String>,
        /// Explicit probabilities `p1,p2,p3,p4` for presence, positional, structural, boundary.
        #[arg(long)]
        probs: Option<String>,
        /// Independent generation passes per sample.
        #[arg(long)]
        passes: Option<u32>,
        /// Explicit distractor charset; inferred from the manifest when absent.
        #[arg(long)]
        charset: Option<String>,
        /// Let frequency questions ask about characters absent from the word.
        #[arg(long)]
        frequency_absent: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute every stored answer and report mismatches.
    Validate {
        /// Augmented file.
        aug: PathBuf,
    },
    /// Score predictions with CER, WER and QA consistency.
    Score {
        #[arg(long)]
        aug: PathBuf,
        /// `<id>\t<prediction>` lines.
        #[arg(long)]
        preds: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        wer_mode: WerArg,
        /// Write the machine-readable report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Print histograms for an augmented file.
    Stats {
        aug: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// An error paired with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn usage(err: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_USAGE,
            err: err.into(),
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let code = match e {
            DatasetError::MalformedRow { .. }
            | DatasetError::MalformedRecord { .. }
            | DatasetError::UnsupportedTemplateVersion(_) => EXIT_REFUSED,
            DatasetError::Sampler(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Self { code, err: e.into() }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        let code = match e {
            MetricsError::MalformedRow { .. } => EXIT_REFUSED,
            _ => EXIT_FAILURE,
        };
        Self { code, err: e.into() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_FAILURE,
            err: e.into(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    config: &'a SamplingConfig,
    threads: usize,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started_unix: u64,
    finished_unix: u64,
    exit_status: u8,
}

fn run_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}

fn write_run_manifest(out: &Path, manifest: &RunManifest) -> Result<(), Failure> {
    let path = run_manifest_path(out);
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Failure {
        code: EXIT_FAILURE,
        err: e.into(),
    })?;
    std::fs::write(&path, json + "\n")?;
    Ok(())
}

struct Ctx {
    cfg: SamplingConfig,
    threads: usize,
    started: u64,
}

fn generate(ctx: &Ctx, manifests: &[PathBuf], format: ManifestFormat, out: &Path) -> CmdResult {
    let mut parts = Vec::with_capacity(manifests.len());
    for m in manifests {
        let part = dataset::parse_manifest(m, format, ctx.cfg.case_fold)?;
        info!("read {} samples from {}", part.len(), m.display());
        parts.push(part);
    }
    let samples = dataset::merge_parts(parts)?;
    if samples.is_empty() {
        return Err(DatasetError::EmptyDataset.into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build()
        .map_err(|e| Failure {
            code: EXIT_FAILURE,
            err: e.into(),
        })?;
    let generated = pool.install(|| pipeline::generate(&samples, &ctx.cfg))?;
    let n = dataset::write_augmented(&generated.samples, &generated.header, out)?;
    info!("wrote {n} records to {}", out.display());

    let st = DatasetStats::from_samples(&generated.samples);
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "records: {n}")?;
    writeln!(stdout, "probs: {:?}", ctx.cfg.probs.as_array())?;
    writeln!(stdout, "category histogram:")?;
    for cat in ocrqa_core::Category::ATTRIBUTES {
        let k = st.categories.get(&cat).copied().unwrap_or(0);
        writeln!(stdout, "  {:<12} {k:>8} ({:.2}%)", cat.name(), 100.0 * st.category_share(cat))?;
    }
    match st.yes_ratio() {
        Some(r) => writeln!(stdout, "yes/no: {}/{} (yes ratio {r:.4})", st.yes, st.no)?,
        None => writeln!(stdout, "yes/no: 0/0")?,
    }

    write_run_manifest(
        out,
        &RunManifest {
            subcommand: "generate",
            config: &ctx.cfg,
            threads: ctx.threads,
            inputs: manifests.iter().map(|p| p.display().to_string()).collect(),
            outputs: vec![out.display().to_string()],
            started_unix: ctx.started,
            finished_unix: unix_now(),
            exit_status: 0,
        },
    )?;
    Ok(0)
}

fn validate(aug: &Path) -> CmdResult {
    let report = dataset::validate_augmented(aug)?;
    let mut stdout = std::io::stdout().lock();
    for f in &report.failures {
        writeln!(
            stdout,
            "FAIL id={} pass={} line={} pair={} expected={:?} stored={:?}",
            f.id, f.pass, f.line, f.pair_index, f.expected, f.stored
        )?;
    }
    writeln!(
        stdout,
        "validated {} records: {} passed, {} failing pairs",
        report.total,
        report.passed,
        report.failures.len()
    )?;
    Ok(if report.is_clean() { 0 } else { EXIT_FAILURE })
}

fn score(ctx: &Ctx, aug: &Path, preds: &Path, wer_mode: WerMode, report_path: Option<&Path>, json: bool) -> CmdResult {
    let (header, samples) = dataset::read_augmented(aug)?;
    let preds = PredictionSet::load(preds)?;
    let case_fold = ctx.cfg.case_fold || header.map(|h| h.case_fold).unwrap_or(false);
    let report = metrics::evaluate(&samples, &preds, EvalOptions { case_fold, wer_mode })?;
    let machine = serde_json::to_string_pretty(&report).map_err(|e| Failure {
        code: EXIT_FAILURE,
        err: e.into(),
    })?;
    let mut stdout = std::io::stdout().lock();
    if json {
        writeln!(stdout, "{machine}")?;
    } else {
        writeln!(stdout, "{report}")?;
    }
    if let Some(path) = report_path {
        std::fs::write(path, machine + "\n")?;
        write_run_manifest(
            path,
            &RunManifest {
                subcommand: "score",
                config: &ctx.cfg,
                threads: ctx.threads,
                inputs: vec![aug.display().to_string()],
                outputs: vec![path.display().to_string()],
                started_unix: ctx.started,
                finished_unix: unix_now(),
                exit_status: 0,
            },
        )?;
    }
    Ok(0)
}

fn stats(aug: &Path, json: bool) -> CmdResult {
    let (_, samples) = dataset::read_augmented(aug)?;
    let st = DatasetStats::from_samples(&samples);
    let mut stdout = std::io::stdout().lock();
    if json {
        let s = serde_json::to_string_pretty(&st).map_err(|e| Failure {
            code: EXIT_FAILURE,
            err: e.into(),
        })?;
        writeln!(stdout, "{s}")?;
    } else {
        writeln!(stdout, "{st}")?;
    }
    Ok(0)
}

fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p).map_err(Failure::usage)?,
        None => ConfigFile::default(),
    };
    let mut flags = Overrides {
        seed: cli.seed,
        case_fold: cli.case_fold,
        ..Default::default()
    };
    if let Command::Generate {
        preset,
        probs,
        passes,
        charset,
        frequency_absent,
        ..
    } = &cli.command
    {
        flags.preset = preset.clone();
        flags.probs = probs.clone();
        flags.passes = *passes;
        flags.charset = charset.clone();
        flags.frequency_absent = *frequency_absent;
    }
    let ctx = Ctx {
        cfg: config::resolve(&file, &flags).map_err(Failure::usage)?,
        threads: cli.threads.or(file.threads).unwrap_or(0),
        started: unix_now(),
    };

    match &cli.command {
        Command::Generate {
            manifest, format, out, ..
        } => generate(&ctx, manifest, (*format).into(), out),
        Command::Validate { aug } => validate(aug),
        Command::Score {
            aug,
            preds,
            wer_mode,
            report,
            json,
        } => {
            let mode = match wer_mode {
                WerArg::Exact => WerMode::Exact,
                WerArg::Token => WerMode::Token,
            };
            score(&ctx, aug, preds, mode, report.as_deref(), *json)
        }
        Command::Stats { aug, json } => stats(aug, *json),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
