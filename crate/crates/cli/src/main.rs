//! `semcom`: run experiments, select codecs, import COCO annotations and
//! generate synthetic datasets.
//!
//! Exit codes: 0 on success or a feasible selection, 2 when no candidate
//! meets the constraints, 3 on any input or output error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use semcom_core::channel::ChannelConfig;
use semcom_core::coco::{import_coco, CocoImportOptions};
use semcom_core::codec::{CaptionNoise, DEFAULT_CAPTIONS};
use semcom_core::dataset::Dataset;
use semcom_core::goal::DetectorModel;
use semcom_core::harness::{self, RunConfig, RunReport};
use semcom_core::metrics::ConstraintSpec;
use semcom_core::pipeline::{CodecConfig, CodecSpec, PipelineOptions};
use semcom_core::plot::render_plot;
use semcom_core::selector::{select, SelectionOutcome};
use semcom_core::synth::{self, SynthConfig};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "semcom",
    version,
    about = "Goal-oriented semantic communication simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one codec over a dataset and report per-image and mean metrics.
    Run(Box<RunArgs>),
    /// Evaluate candidate codecs and pick the best feasible one.
    Select(SelectArgs),
    /// Convert COCO instance annotations to a native dataset.
    ImportCoco(ImportArgs),
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecKind {
    Caption,
    Crops,
    Raw,
}

#[derive(Args)]
struct RunArgs {
    /// Run config file (scenario preset). Flags given alongside override it.
    #[arg(long, value_name = "JSON")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    codec: Option<CodecKind>,
    #[arg(long, value_name = "K")]
    captions: Option<usize>,
    #[arg(long, value_name = "F")]
    p_mention: Option<f64>,
    #[arg(long, value_name = "F")]
    p_realize: Option<f64>,
    #[arg(long, value_name = "N")]
    jitter: Option<u32>,
    #[arg(long, value_name = "F")]
    detect_prob: Option<f64>,
    #[arg(long, value_name = "F")]
    fp_rate: Option<f64>,
    #[arg(long, value_name = "R0")]
    budget_bits: Option<u64>,
    #[arg(long, value_name = "F")]
    rate_bps: Option<f64>,
    #[arg(long, value_name = "F")]
    erasure: Option<f64>,
    #[arg(long, value_name = "F", requires = "eps0")]
    g0: Option<f64>,
    #[arg(long, value_name = "F", requires = "g0")]
    eps0: Option<f64>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// CSV output path.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// PNG of cumulative curves, with the raw baseline overlaid.
    #[arg(long, value_name = "PNG")]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, value_name = "PATH")]
    dataset: PathBuf,
    /// Candidate list: `{"candidates": [...], "detector": .., "channel": ..}`.
    #[arg(long, value_name = "JSON")]
    configs: PathBuf,
    #[arg(long, value_name = "F")]
    g0: f64,
    #[arg(long, value_name = "F")]
    eps0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Selection report (JSON).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long, value_name = "PATH")]
    instances: PathBuf,
    #[arg(long, value_name = "N")]
    max_images: Option<usize>,
    /// Comma-separated class filter; also fixes the vocabulary order.
    #[arg(long, value_name = "a,b,c", value_delimiter = ',')]
    classes: Option<Vec<String>>,
    #[arg(long, value_name = "BITS")]
    pixel_bits: Option<u32>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator settings (JSON).
    #[arg(long, value_name = "JSON")]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateFile {
    candidates: Vec<CodecConfig>,
    #[serde(default)]
    detector: DetectorModel,
    #[serde(default)]
    channel: ChannelConfig,
    #[serde(default)]
    options: PipelineOptions,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEMCOM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::Select(args) => cmd_select(args),
        Command::ImportCoco(args) => cmd_import(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn build_run_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match (&args.config, args.codec) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(kind)) => RunConfig::new(match kind {
            CodecKind::Caption => {
                CodecConfig::caption("caption", DEFAULT_CAPTIONS, CaptionNoise::default())
            }
            CodecKind::Crops => CodecConfig::crops("crops"),
            CodecKind::Raw => CodecConfig::raw("raw"),
        }),
        (None, None) => bail!("either --config or --codec is required"),
    };
    if let Some(kind) = args.codec {
        let same = matches!(
            (kind, &cfg.codec.spec),
            (CodecKind::Caption, CodecSpec::Caption { .. })
                | (CodecKind::Crops, CodecSpec::Crops)
                | (CodecKind::Raw, CodecSpec::Raw)
        );
        if !same {
            bail!("--codec conflicts with the codec in the config file");
        }
    }
    if let Some(path) = &args.dataset {
        cfg.dataset = Some(path.clone());
    }
    if let CodecSpec::Caption { captions, noise } = &mut cfg.codec.spec {
        if let Some(k) = args.captions {
            *captions = k;
        }
        if let Some(p) = args.p_mention {
            noise.p_mention = p;
        }
        if let Some(p) = args.p_realize {
            noise.p_realize = p;
        }
        if let Some(j) = args.jitter {
            noise.count_jitter = j;
        }
    } else if args.captions.is_some()
        || args.p_mention.is_some()
        || args.p_realize.is_some()
        || args.jitter.is_some()
    {
        bail!("caption flags need the caption codec");
    }
    if let Some(p) = args.detect_prob {
        cfg.detector.detect_prob = p;
    }
    if let Some(r) = args.fp_rate {
        cfg.detector.false_positive_rate = r;
    }
    if let Some(b) = args.budget_bits {
        cfg.channel.budget_bits = b;
    }
    if let Some(r) = args.rate_bps {
        cfg.channel.rate_bps = r;
    }
    if let Some(p) = args.erasure {
        cfg.channel.erasure_prob = p;
    }
    if let (Some(g0), Some(eps0)) = (args.g0, args.eps0) {
        cfg.constraints = Some(ConstraintSpec::new(g0, eps0)?);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if let Some(p) = &args.out {
        cfg.csv_out = Some(p.clone());
    }
    if let Some(p) = &args.plot {
        cfg.plot_out = Some(p.clone());
    }
    Ok(cfg)
}

fn print_report(report: &RunReport) {
    let s = &report.summary;
    let verdict = match report.verdict {
        Some(v) => serde_json::to_value(v)
            .map(|v| v.as_str().unwrap_or_default().to_owned())
            .unwrap_or_default(),
        None => "-".into(),
    };
    println!(
        "{}\timages={}\tmean_gain={:.6}\tmean_error={:.6}\tmean_weighted_error={:.6}\tundelivered={}\tempty_truth={}\tverdict={}",
        s.config,
        s.records.len(),
        s.mean_gain,
        s.mean_error,
        s.mean_weighted_error,
        s.undelivered_images,
        s.empty_truth_images,
        verdict
    );
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = build_run_config(&args)?;
    let dataset = cfg.load_dataset()?;
    let report = harness::run(&cfg, &dataset)?;
    print_report(&report);
    if let Some(path) = &cfg.csv_out {
        harness::export_csv(&report, path)?;
        log::info!("wrote {}", path.display());
    }
    if let Some(path) = &cfg.plot_out {
        let mut reports = vec![report];
        if !matches!(cfg.codec.spec, CodecSpec::Raw) {
            let baseline = RunConfig {
                codec: CodecConfig::raw("raw"),
                constraints: None,
                ..cfg.clone()
            };
            let raw = harness::run(&baseline, &dataset)?;
            print_report(&raw);
            reports.push(raw);
        }
        render_plot(&reports, path)?;
        log::info!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_select(args: SelectArgs) -> anyhow::Result<ExitCode> {
    let dataset = Dataset::load(&args.dataset)?;
    let file: CandidateFile = read_json(&args.configs)?;
    file.detector.validate(&dataset.vocabulary)?;
    let spec = ConstraintSpec::new(args.g0, args.eps0)?;
    let report = select(
        &file.candidates,
        &dataset,
        &file.detector,
        &file.channel,
        file.options,
        &spec,
        args.seed,
    )?;
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&args.out, json + "\n")
        .with_context(|| format!("writing {}", args.out.display()))?;
    for s in &report.summaries {
        println!(
            "{}\tmean_gain={:.6}\tmean_error={:.6}\tmean_weighted_error={:.6}",
            s.config, s.mean_gain, s.mean_error, s.mean_weighted_error
        );
    }
    Ok(match &report.outcome {
        SelectionOutcome::Selected { config } => {
            println!("selected\t{config}");
            ExitCode::SUCCESS
        }
        SelectionOutcome::Infeasible { ranking } => {
            println!("infeasible\t{}", ranking.join(","));
            ExitCode::from(EXIT_INFEASIBLE)
        }
    })
}

fn cmd_import(args: ImportArgs) -> anyhow::Result<ExitCode> {
    let opts = CocoImportOptions {
        max_images: args.max_images,
        classes: args.classes,
        pixel_bits: args.pixel_bits,
    };
    let dataset = import_coco(&args.instances, &opts)?;
    dataset.save(&args.out)?;
    println!(
        "{} images, {} classes -> {}",
        dataset.len(),
        dataset.vocabulary.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<ExitCode> {
    let cfg: SynthConfig = read_json(&args.config)?;
    let dataset = synth::generate(&cfg, args.seed)?;
    dataset.save(&args.out)?;
    println!("{} images -> {}", dataset.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
