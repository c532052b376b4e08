use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scorepoint::pipeline::{parse_list, JudgeBackend, MetricName, Pipeline, PipelineError, RunConfig, Study};

#[derive(Parser)]
#[command(name = "scorepoint", version, about = "Point-wise LLM-judge evaluation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset in JSONL form, one instance with its responses per line.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Run directory holding stores, manifest and reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Judge backend: http or mock.
    #[arg(long, global = true)]
    judge: Option<JudgeBackend>,
    /// Scripted answers for the mock judge (JSON).
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// Comma-separated metrics: wpa, pcp, coarse3, merge, bleu, rouge_l.
    #[arg(long, global = true)]
    metrics: Option<String>,
    /// Comma-separated 1-based STAR offsets.
    #[arg(long, global = true)]
    offsets: Option<String>,
    #[arg(long = "lambda-m", global = true)]
    lambda_m: Option<f64>,
    /// Comma-separated studies: correlation, ablation_scale, ablation_weights,
    /// noise, length_bins, errors.
    #[arg(long, global = true)]
    study: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate weighted scoring points from each reference answer.
    ExtractPoints,
    /// Score every response with the selected metrics.
    Evaluate,
    /// Build stratified pseudo-labels from one judge ranking per instance.
    Star,
    /// Run analysis studies over evaluations and labels.
    Analyze,
    /// Render reports/summary.md from the analysis outputs.
    Report,
}

fn config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.dataset {
        cfg.dataset = Some(v.clone());
    }
    if let Some(v) = &cli.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = &cli.cache_dir {
        cfg.cache_dir = Some(v.clone());
    }
    if let Some(v) = cli.judge {
        cfg.judge_backend = v;
    }
    if let Some(v) = &cli.fixtures {
        cfg.fixtures = Some(v.clone());
    }
    if let Some(v) = &cli.metrics {
        cfg.metrics = parse_list::<MetricName>(v)?;
    }
    if let Some(v) = &cli.offsets {
        cfg.star.offsets = v
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| PipelineError::Config(format!("bad offset {s:?}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = cli.lambda_m {
        cfg.lambda_m = v;
    }
    if let Some(v) = &cli.study {
        cfg.studies = parse_list::<Study>(v)?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<i32, PipelineError> {
    let cfg = config(cli)?;
    let metrics = cfg.metrics.clone();
    let studies = cfg.studies.clone();
    let mut p = Pipeline::open(cfg)?;
    let report = match cli.command {
        Command::ExtractPoints => p.extract_points()?,
        Command::Evaluate => p.evaluate(&metrics)?,
        Command::Star => p.star()?,
        Command::Analyze => {
            for f in p.analyze(&studies)? {
                println!("{}", f.display());
            }
            return Ok(0);
        }
        Command::Report => {
            println!("{}", p.report()?.display());
            return Ok(0);
        }
    };
    println!(
        "{}: {} processed, {} skipped, {} failed",
        report.stage,
        report.processed,
        report.skipped,
        report.failures.len()
    );
    for f in &report.failures {
        eprintln!("  {} {}: {}", f.instance_id, f.model_id.as_deref().unwrap_or(""), f.error);
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
