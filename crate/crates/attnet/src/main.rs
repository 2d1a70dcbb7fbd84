//! Command-line front end: one subcommand per pipeline stage, an
//! all-in-one `run`, a synthetic-world generator and report re-emission.
//!
//! Exit codes: 0 on success, 1 on configuration problems (bad flags, bad
//! config file, missing inputs), 2 when a stage fails mid-run.

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use attnet::causality::CausalDirection;
use attnet::country::{CountryCode, Region};
use attnet::pipeline::{self, PipelineError, RunSummary, Stage};
use attnet::simgen::{self, PlantedCoupling, WorldSpec};

#[derive(Parser)]
#[command(
    name = "attnet",
    version,
    about = "Two-layer country attention networks: stitching, backbones, motifs, communities, lead-lag scans"
)]
struct Cli {
    /// Worker threads for intra-stage parallelism. Any value produces the
    /// same output bytes; this only trades wall-clock time.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// JSON pipeline config; relative paths inside it resolve against the
    /// config file's directory
    #[arg(long)]
    config: PathBuf,
    /// Write artifacts here instead of the configured output_dir
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Stitch each source's trends windows onto one scale
    Stitch(StageArgs),
    /// Build daily and aggregate attention networks
    Build(StageArgs),
    /// Extract disparity-filter backbones
    Backbone(StageArgs),
    /// Centralities, top-k overlap, Gini and summary tables
    Metrics(StageArgs),
    /// Triad census against a degree-preserving null model
    Motifs(StageArgs),
    /// Map-equation community detection
    Communities(StageArgs),
    /// Continent-level flow matrices and the Gini comparison test
    Regions(StageArgs),
    /// Pairwise lead-lag scan between the layers
    Granger(StageArgs),
    /// Topic labels for co-mention coverage
    Topics(StageArgs),
    /// Execute the full pipeline (or a chosen subset of stages)
    Run {
        #[command(flatten)]
        args: StageArgs,
        /// Comma-separated stages to emit, e.g. stitch,build,granger
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
    },
    /// Generate a synthetic world with planted communities and couplings
    Simgen {
        /// Directory for events.csv, trends.csv, regions.csv, config.json
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 404)]
        days: usize,
    },
    /// Rebuild report/ from an existing run directory
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(PipelineError::Config(format!(
                "cannot build a {n}-thread worker pool: {e}"
            ))),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Stitch(a) => run_stages(a, Some(vec![Stage::Stitch])),
        Command::Build(a) => run_stages(a, Some(vec![Stage::Build])),
        Command::Backbone(a) => run_stages(a, Some(vec![Stage::Backbone])),
        Command::Metrics(a) => run_stages(a, Some(vec![Stage::Metrics])),
        Command::Motifs(a) => run_stages(a, Some(vec![Stage::Motifs])),
        Command::Communities(a) => run_stages(a, Some(vec![Stage::Communities])),
        Command::Regions(a) => run_stages(a, Some(vec![Stage::Regions])),
        Command::Granger(a) => run_stages(a, Some(vec![Stage::Granger])),
        Command::Topics(a) => run_stages(a, Some(vec![Stage::Topics])),
        Command::Run { args, stages } => run_stages(args, stages),
        Command::Simgen { out, seed, days } => generate_world(&out, seed, days),
        Command::Report { run_dir } => rebuild_report(run_dir),
    }
}

fn run_stages(args: StageArgs, stages: Option<Vec<Stage>>) -> Result<(), PipelineError> {
    let mut cfg = pipeline::load_config(&args.config)?;
    if let Some(out) = args.output {
        cfg.output_dir = out;
    }
    if let Some(stages) = stages {
        cfg.stages = stages;
    }
    let summary = pipeline::run_pipeline(&cfg)?;
    println!(
        "ran {} [{}]: {} artifacts in {}",
        if summary.stages.len() == 1 { "stage" } else { "stages" },
        summary.stages.join(", "),
        summary.artifacts.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn rebuild_report(run_dir: PathBuf) -> Result<(), PipelineError> {
    let summary_path = run_dir.join("run_summary.json");
    let text = std::fs::read_to_string(&summary_path).map_err(|e| {
        PipelineError::Config(format!(
            "{} is not a completed run directory: {e}",
            run_dir.display()
        ))
    })?;
    let mut summary: RunSummary = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", summary_path.display())))?;
    summary.output_dir = run_dir.clone();
    let files = pipeline::emit_report(&summary)?;
    println!("rebuilt {} report files under {}", files.len(), run_dir.join("report").display());
    Ok(())
}

/// A ready-to-analyze demo world: ten countries in two planted blocks,
/// one media-leads-public coupling and one public-leads-media coupling,
/// exported in the loader formats next to a matching pipeline config.
fn generate_world(out: &PathBuf, seed: u64, days: usize) -> Result<(), PipelineError> {
    let c = |s: &str| CountryCode::new(s).unwrap();
    let countries = vec![
        (c("US"), Region::Americas),
        (c("BR"), Region::Americas),
        (c("CA"), Region::Americas),
        (c("GB"), Region::Europe),
        (c("FR"), Region::Europe),
        (c("DE"), Region::Europe),
        (c("KR"), Region::Asia),
        (c("JP"), Region::Asia),
        (c("IN"), Region::Asia),
        (c("AU"), Region::Oceania),
    ];
    let planted_communities = countries
        .iter()
        .enumerate()
        .map(|(i, (code, _))| (*code, i / 5))
        .collect();
    let spec = WorldSpec {
        countries,
        period_days: days,
        planted_communities,
        planted_couplings: vec![
            PlantedCoupling {
                source: c("US"),
                target: c("KR"),
                direction: CausalDirection::MediaToPublic,
                lag: 3,
                coefficient: 0.8,
            },
            PlantedCoupling {
                source: c("FR"),
                target: c("JP"),
                direction: CausalDirection::PublicToMedia,
                lag: 2,
                coefficient: 0.7,
            },
        ],
        noise_sigma: 4.0,
        ar_coeff: 0.5,
        seed,
    };
    let start = NaiveDate::from_ymd_opt(2016, 3, 7).unwrap();
    let series = simgen::gen_coupled_series(&spec).map_err(simgen_error)?;
    std::fs::create_dir_all(out)
        .map_err(|e| PipelineError::Config(format!("cannot create {}: {e}", out.display())))?;
    let files = simgen::export_world(&spec, &series, start, out).map_err(simgen_error)?;

    // The generated world spreads attention evenly over pairs, so its
    // backbones are too sparse to feed the motif and community stages;
    // the emitted config runs the stages the planted truth supports.
    let end = start + chrono::Duration::days(days as i64 - 1);
    let config = serde_json::json!({
        "events": "events.csv",
        "trends": "trends.csv",
        "regions": "regions.csv",
        "period": {"start": start.to_string(), "end": end.to_string()},
        "backbone_alpha": 0.3,
        "granger_max_lag": 7,
        "stages": ["stitch", "build", "backbone", "metrics", "regions", "granger"],
        "output_dir": "out",
    });
    let config_path = out.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap() + "\n")
        .map_err(|e| PipelineError::Stage {
            stage: "simgen",
            cause: e.to_string(),
        })?;
    println!(
        "world written: {}, {}, {}; analyze with `attnet run --config {}`",
        files.events.display(),
        files.trends.display(),
        files.regions.display(),
        config_path.display()
    );
    Ok(())
}

fn simgen_error(e: simgen::SimgenError) -> PipelineError {
    match e {
        simgen::SimgenError::InvalidSpec(msg) => PipelineError::Config(msg),
        other => PipelineError::Stage {
            stage: "simgen",
            cause: other.to_string(),
        },
    }
}
