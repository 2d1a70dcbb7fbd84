//! Batch orchestration behind the `attnet` binary: load the input files,
//! run the analysis stages in a fixed order and write one run directory of
//! CSV/JSON artifacts plus a digest manifest.
//!
//! The stage list in [`PipelineConfig`] controls which *files* are written.
//! Prerequisites are always computed in memory (stitching and network
//! assembly are cheap next to the stages that consume them), so requesting
//! only `metrics` still produces exactly the metrics tables and nothing
//! else. Expensive stages (motifs, communities, granger, topics) only run
//! when requested.
//!
//! Everything written here is byte-deterministic for a given config and
//! input files, independent of worker count. The only timestamp lives in
//! `manifest.stamp`, a sibling of `manifest.json`, so runs can be compared
//! with a single file excluded.

use std::collections::BTreeSet;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::causality::{self, PairSeries};
use crate::community;
use crate::country::{CountryCode, REGIONS};
use crate::ingest::{self, AttentionEvent, Period, RegionMap, TrendsWindow};
use crate::metrics::{self, Direction, Measure};
use crate::motifs::{self, TRIAD_CLASSES};
use crate::net::{self, AttentionNetwork, BackboneParams, MultiplexAttention};
use crate::regions;
use crate::rng;
use crate::stitch::{self, Seam, Series, StitchConfig};
use crate::topics;

/// Cutoffs for the top-k neighbor overlap table.
pub const TOPK_KS: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Stitch,
    Build,
    Backbone,
    Metrics,
    Motifs,
    Communities,
    Regions,
    Granger,
    Topics,
}

impl Stage {
    /// Execution order; configs may list stages in any order.
    pub const ALL: [Stage; 9] = [
        Stage::Stitch,
        Stage::Build,
        Stage::Backbone,
        Stage::Metrics,
        Stage::Motifs,
        Stage::Communities,
        Stage::Regions,
        Stage::Granger,
        Stage::Topics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Stitch => "stitch",
            Stage::Build => "build",
            Stage::Backbone => "backbone",
            Stage::Metrics => "metrics",
            Stage::Motifs => "motifs",
            Stage::Communities => "communities",
            Stage::Regions => "regions",
            Stage::Granger => "granger",
            Stage::Topics => "topics",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

fn default_reference_target() -> CountryCode {
    CountryCode::new("US").unwrap()
}

fn default_smoothing_add() -> u32 {
    1
}

fn default_backbone_alpha() -> f64 {
    0.05
}

fn default_granger_alpha() -> f64 {
    causality::DEFAULT_ALPHA
}

fn default_granger_max_lag() -> usize {
    *causality::DEFAULT_LAGS.end()
}

fn default_true() -> bool {
    true
}

fn default_motif_ensemble() -> usize {
    motifs::DEFAULT_ENSEMBLE_SIZE
}

fn default_seed() -> u64 {
    42
}

fn default_community_restarts() -> usize {
    8
}

fn all_stages() -> Vec<Stage> {
    Stage::ALL.to_vec()
}

/// Run configuration, read from a JSON file. Every field except the input
/// paths and output directory has a default, so a minimal config is
/// `{"events": ..., "trends": ..., "output_dir": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub events: PathBuf,
    pub trends: PathBuf,
    /// Required when the `regions` stage is requested; when present it also
    /// feeds the same-region column of the granger feature table.
    #[serde(default)]
    pub regions: Option<PathBuf>,
    /// Required when the `topics` stage is requested.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub period: Period,
    #[serde(default = "default_reference_target")]
    pub reference_target: CountryCode,
    #[serde(default = "default_smoothing_add")]
    pub smoothing_add: u32,
    #[serde(default = "default_backbone_alpha")]
    pub backbone_alpha: f64,
    #[serde(default = "default_granger_alpha")]
    pub granger_alpha: f64,
    #[serde(default = "default_granger_max_lag")]
    pub granger_max_lag: usize,
    /// Difference both series once before the lag scan.
    #[serde(default = "default_true")]
    pub granger_difference: bool,
    #[serde(default = "default_motif_ensemble")]
    pub motif_ensemble: usize,
    #[serde(default = "default_seed")]
    pub motif_seed: u64,
    #[serde(default = "default_seed")]
    pub community_seed: u64,
    #[serde(default = "default_community_restarts")]
    pub community_restarts: usize,
    #[serde(default = "all_stages")]
    pub stages: Vec<Stage>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage {stage}: {cause}")]
    Stage { stage: &'static str, cause: String },
}

impl PipelineError {
    /// Process exit code the binary maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Stage { .. } => 2,
        }
    }
}

fn stage_err(stage: &'static str, cause: impl ToString) -> PipelineError {
    PipelineError::Stage {
        stage,
        cause: cause.to_string(),
    }
}

/// Parse a JSON config file. Relative input/output paths are taken
/// relative to the config file's directory, so a config can travel with
/// its fixture files.
pub fn load_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: PipelineConfig = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let rebase = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&p);
        }
    };
    rebase(&mut cfg.events);
    rebase(&mut cfg.trends);
    if let Some(p) = cfg.regions.as_mut() {
        rebase(p);
    }
    if let Some(p) = cfg.embeddings.as_mut() {
        rebase(p);
    }
    rebase(&mut cfg.output_dir);
    Ok(cfg)
}

impl PipelineConfig {
    /// Requested stages in execution order, deduplicated.
    pub fn stage_plan(&self) -> Vec<Stage> {
        let wanted: BTreeSet<Stage> = self.stages.iter().copied().collect();
        Stage::ALL.into_iter().filter(|s| wanted.contains(s)).collect()
    }

    /// All config errors the run can detect before touching any input.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |msg: String| Err(PipelineError::Config(msg));
        let must_exist = |what: &str, p: &Path| {
            if p.is_file() {
                Ok(())
            } else {
                Err(PipelineError::Config(format!(
                    "{what} file {} does not exist",
                    p.display()
                )))
            }
        };
        must_exist("events", &self.events)?;
        must_exist("trends", &self.trends)?;
        let plan = self.stage_plan();
        if plan.contains(&Stage::Regions) && self.regions.is_none() {
            return err("regions stage requested but no region map configured".into());
        }
        if plan.contains(&Stage::Topics) && self.embeddings.is_none() {
            return err("topics stage requested but no embeddings configured".into());
        }
        if let Some(p) = &self.regions {
            must_exist("regions", p)?;
        }
        if let Some(p) = &self.embeddings {
            must_exist("embeddings", p)?;
        }
        if self.smoothing_add < 1 {
            return err(format!("smoothing_add must be >= 1, got {}", self.smoothing_add));
        }
        if !(self.backbone_alpha > 0.0 && self.backbone_alpha <= 1.0) {
            return err(format!("backbone_alpha must be in (0, 1], got {}", self.backbone_alpha));
        }
        if !(self.granger_alpha > 0.0 && self.granger_alpha < 1.0) {
            return err(format!("granger_alpha must be in (0, 1), got {}", self.granger_alpha));
        }
        if self.granger_max_lag < 1 {
            return err("granger_max_lag must be >= 1".into());
        }
        if self.motif_ensemble < 2 {
            return err(format!("motif_ensemble must be >= 2, got {}", self.motif_ensemble));
        }
        if self.community_restarts < 1 {
            return err("community_restarts must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkCounts {
    pub nodes: usize,
    pub links: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleStats {
    pub modules: usize,
    pub codelength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrangerCounts {
    pub pairs: usize,
    pub errors: usize,
    pub media_causes_public: usize,
    pub public_causes_media: usize,
    pub both: usize,
    pub neither: usize,
}

/// What a completed run produced; serialized as `run_summary.json` (minus
/// the output directory, which is where the file itself lives).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub stages: Vec<String>,
    /// Stage artifact file names, in emission order.
    pub artifacts: Vec<String>,
    pub events_loaded: usize,
    pub events_out_of_period: usize,
    pub sources_stitched: usize,
    /// Per stitched source, the reference target actually used.
    pub stitch_references: BTreeMap<String, String>,
    pub networks: BTreeMap<String, NetworkCounts>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub communities: BTreeMap<String, ModuleStats>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub granger: Option<GrangerCounts>,
}

/// Path-independent manifest: parameters, seeds, input digests and one
/// sha256 per written file. Deliberately carries no filesystem paths and
/// no timestamp, so two runs of the same config on the same inputs emit
/// identical bytes. The timestamp goes to `manifest.stamp` instead.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    parameters: ManifestParams<'a>,
    seeds: BTreeMap<&'static str, u64>,
    inputs: BTreeMap<&'static str, String>,
    complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_stage: Option<&'static str>,
    artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct ManifestParams<'a> {
    period: Period,
    reference_target: CountryCode,
    smoothing_add: u32,
    backbone_alpha: f64,
    granger_alpha: f64,
    granger_max_lag: usize,
    granger_difference: bool,
    motif_ensemble: usize,
    motif_seed: u64,
    community_seed: u64,
    community_restarts: usize,
    stages: &'a [Stage],
}

fn sha256_hex(path: &Path) -> Result<String, std::io::Error> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Emission-order recorder around the output directory.
struct Emitter<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Emitter<'a> {
    fn new(dir: &'a Path) -> Self {
        Emitter {
            dir,
            written: Vec::new(),
        }
    }

    fn csv(
        &mut self,
        stage: &'static str,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| stage_err(stage, e))?;
        w.write_record(header).map_err(|e| stage_err(stage, e))?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len(), "{name}: ragged row");
            w.write_record(row).map_err(|e| stage_err(stage, e))?;
        }
        w.flush().map_err(|e| stage_err(stage, e))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

struct RunState<'a> {
    cfg: &'a PipelineConfig,
    plan: Vec<Stage>,
    emitter: Emitter<'a>,
    summary: RunSummary,
    region_map: Option<RegionMap>,
    events: Vec<AttentionEvent>,
    series: Vec<Series>,
    seams: Vec<(CountryCode, Seam)>,
    mplex: Option<MultiplexAttention>,
    backbones: Option<(AttentionNetwork, AttentionNetwork)>,
}

/// Validate, execute and persist one full run.
///
/// On a stage failure the manifest is still written, with `complete:
/// false` and the failing stage named, so whatever partial artifacts exist
/// are accounted for; the error is then returned.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        PipelineError::Config(format!(
            "output directory {} not writable: {e}",
            cfg.output_dir.display()
        ))
    })?;

    let plan = cfg.stage_plan();
    let mut state = RunState {
        cfg,
        plan: plan.clone(),
        emitter: Emitter::new(&cfg.output_dir),
        summary: RunSummary {
            output_dir: cfg.output_dir.clone(),
            stages: plan.iter().map(|s| s.as_str().to_string()).collect(),
            artifacts: Vec::new(),
            events_loaded: 0,
            events_out_of_period: 0,
            sources_stitched: 0,
            stitch_references: BTreeMap::new(),
            networks: BTreeMap::new(),
            communities: BTreeMap::new(),
            granger: None,
        },
        region_map: None,
        events: Vec::new(),
        series: Vec::new(),
        seams: Vec::new(),
        mplex: None,
        backbones: None,
    };

    match state.execute() {
        Ok(()) => {
            state.summary.artifacts = state.emitter.written.clone();
            let summary_json = serde_json::to_string_pretty(&state.summary)
                .expect("run summary serializes") + "\n";
            ingest::write_text(&cfg.output_dir.join("run_summary.json"), &summary_json)
                .map_err(|e| stage_err("report", e))?;
            let mut produced = std::mem::take(&mut state.emitter.written);
            produced.push("run_summary.json".to_string());
            produced.extend(emit_report(&state.summary)?);
            write_manifest(cfg, &plan, &produced, true, None)?;
            Ok(state.summary)
        }
        Err(e) => {
            let failed = match &e {
                PipelineError::Stage { stage, .. } => Some(*stage),
                PipelineError::Config(_) => None,
            };
            write_manifest(cfg, &plan, &state.emitter.written, false, failed)?;
            Err(e)
        }
    }
}

fn write_manifest(
    cfg: &PipelineConfig,
    plan: &[Stage],
    produced: &[String],
    complete: bool,
    failed_stage: Option<&'static str>,
) -> Result<(), PipelineError> {
    let werr = |e: std::io::Error| stage_err("report", e);
    let mut inputs = BTreeMap::new();
    inputs.insert("events", sha256_hex(&cfg.events).map_err(werr)?);
    inputs.insert("trends", sha256_hex(&cfg.trends).map_err(werr)?);
    if let Some(p) = &cfg.regions {
        inputs.insert("regions", sha256_hex(p).map_err(werr)?);
    }
    if let Some(p) = &cfg.embeddings {
        inputs.insert("embeddings", sha256_hex(p).map_err(werr)?);
    }
    let mut artifacts = BTreeMap::new();
    for name in produced {
        let digest = sha256_hex(&cfg.output_dir.join(name)).map_err(werr)?;
        artifacts.insert(name.clone(), digest);
    }
    let mut seeds = BTreeMap::new();
    seeds.insert("motifs_media", rng::derive(cfg.motif_seed, 1));
    seeds.insert("motifs_public", rng::derive(cfg.motif_seed, 2));
    seeds.insert("communities_media", rng::derive(cfg.community_seed, 1));
    seeds.insert("communities_public", rng::derive(cfg.community_seed, 2));
    let manifest = Manifest {
        parameters: ManifestParams {
            period: cfg.period,
            reference_target: cfg.reference_target,
            smoothing_add: cfg.smoothing_add,
            backbone_alpha: cfg.backbone_alpha,
            granger_alpha: cfg.granger_alpha,
            granger_max_lag: cfg.granger_max_lag,
            granger_difference: cfg.granger_difference,
            motif_ensemble: cfg.motif_ensemble,
            motif_seed: cfg.motif_seed,
            community_seed: cfg.community_seed,
            community_restarts: cfg.community_restarts,
            stages: plan,
        },
        seeds,
        inputs,
        complete,
        failed_stage,
        artifacts,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    ingest::write_text(&cfg.output_dir.join("manifest.json"), &json)
        .map_err(|e| stage_err("report", e))?;
    let stamp = chrono::Utc::now().to_rfc3339() + "\n";
    ingest::write_text(&cfg.output_dir.join("manifest.stamp"), &stamp)
        .map_err(|e| stage_err("report", e))?;
    Ok(())
}

impl RunState<'_> {
    fn enabled(&self, s: Stage) -> bool {
        self.plan.contains(&s)
    }

    fn execute(&mut self) -> Result<(), PipelineError> {
        self.stage_stitch()?;
        self.stage_build()?;
        self.stage_backbone()?;
        if self.enabled(Stage::Metrics) {
            self.stage_metrics()?;
        }
        if self.enabled(Stage::Motifs) {
            self.stage_motifs()?;
        }
        if self.enabled(Stage::Communities) {
            self.stage_communities()?;
        }
        if self.enabled(Stage::Regions) {
            self.stage_regions()?;
        }
        if self.enabled(Stage::Granger) {
            self.stage_granger()?;
        }
        if self.enabled(Stage::Topics) {
            self.stage_topics()?;
        }
        Ok(())
    }

    fn mplex(&self) -> &MultiplexAttention {
        self.mplex.as_ref().expect("networks built before use")
    }

    fn backbones(&self) -> (&AttentionNetwork, &AttentionNetwork) {
        let (m, p) = self.backbones.as_ref().expect("backbones built before use");
        (m, p)
    }

    /// Lazily load the region map; `validate` already checked the path.
    fn region_map(&mut self, stage: &'static str) -> Result<&RegionMap, PipelineError> {
        if self.region_map.is_none() {
            let path = self
                .cfg
                .regions
                .as_ref()
                .ok_or_else(|| stage_err(stage, "no region map configured"))?;
            self.region_map = Some(ingest::load_region_map(path).map_err(|e| stage_err(stage, e))?);
        }
        Ok(self.region_map.as_ref().unwrap())
    }

    /// Stitch every source's two windows onto one scale. Sources whose
    /// windows lack the configured reference target (always the case for
    /// the reference country itself, which has no self-row) fall back to
    /// the target with the largest first-window value on the overlap day,
    /// ties to the smaller code. A single window passes through unscaled;
    /// more than two windows per source is unsupported.
    fn stage_stitch(&mut self) -> Result<(), PipelineError> {
        let events_loaded = ingest::load_attention_events(&self.cfg.events, self.cfg.period)
            .map_err(|e| stage_err("stitch", e))?;
        self.summary.events_loaded = events_loaded.events.len();
        self.summary.events_out_of_period = events_loaded.out_of_period;
        self.events = events_loaded.events;

        let windows = ingest::load_trends_windows(&self.cfg.trends)
            .map_err(|e| stage_err("stitch", e))?;
        let mut by_source: BTreeMap<CountryCode, Vec<TrendsWindow>> = BTreeMap::new();
        for w in windows {
            by_source.entry(w.source).or_default().push(w);
        }
        for (source, mut ws) in by_source {
            ws.sort_by_key(|w| w.start_date);
            match ws.len() {
                1 => {
                    let w = &ws[0];
                    for (target, values) in &w.values {
                        self.series.push(Series {
                            source,
                            target: *target,
                            start_date: w.start_date,
                            values: values.iter().map(|&v| v as f64).collect(),
                            gap: false,
                        });
                    }
                    self.summary
                        .stitch_references
                        .insert(source.to_string(), String::new());
                }
                2 => {
                    let reference = choose_reference(
                        self.cfg.reference_target,
                        &ws[0],
                        &ws[1],
                    )
                    .ok_or_else(|| {
                        stage_err(
                            "stitch",
                            format!("windows for source {source} share no target"),
                        )
                    })?;
                    let outcome = stitch::stitch_windows(
                        &ws[0],
                        &ws[1],
                        &StitchConfig {
                            reference_target: reference,
                            smoothing_add: self.cfg.smoothing_add,
                            scale_top: 100.0,
                        },
                    )
                    .map_err(|e| stage_err("stitch", format!("source {source}: {e}")))?;
                    self.series.extend(outcome.series);
                    self.seams.extend(outcome.seams.into_iter().map(|s| (source, s)));
                    self.summary
                        .stitch_references
                        .insert(source.to_string(), reference.to_string());
                }
                n => {
                    return Err(stage_err(
                        "stitch",
                        format!("source {source} has {n} windows, expected 1 or 2"),
                    ))
                }
            }
        }
        self.summary.sources_stitched = self.summary.stitch_references.len();

        if self.enabled(Stage::Stitch) {
            ingest::write_series_csv(&self.cfg.output_dir.join("stitched_series.csv"), &self.series)
                .map_err(|e| stage_err("stitch", e))?;
            self.emitter.written.push("stitched_series.csv".to_string());
            let rows: Vec<Vec<String>> = self
                .seams
                .iter()
                .map(|(source, seam)| {
                    vec![
                        source.to_string(),
                        seam.target.to_string(),
                        fmt_f64(seam.discrepancy),
                    ]
                })
                .collect();
            self.emitter
                .csv("stitch", "stitch_seams.csv", &["source", "target", "discrepancy"], &rows)?;
        }
        Ok(())
    }

    fn stage_build(&mut self) -> Result<(), PipelineError> {
        let daily_media = net::build_daily_media(&self.events);
        let daily_public =
            net::build_daily_public(&self.series).map_err(|e| stage_err("build", e))?;
        let media = net::aggregate(&daily_media);
        let public = net::aggregate(&daily_public);
        self.summary.networks.insert(
            "media_full".to_string(),
            NetworkCounts {
                nodes: media.node_count(),
                links: media.edge_count(),
            },
        );
        self.summary.networks.insert(
            "public_full".to_string(),
            NetworkCounts {
                nodes: public.node_count(),
                links: public.edge_count(),
            },
        );
        self.mplex = Some(MultiplexAttention {
            media,
            public,
            daily_media: Some(daily_media),
            daily_public: Some(daily_public),
        });

        if self.enabled(Stage::Build) {
            let media_rows = edge_rows(&self.mplex().media);
            let public_rows = edge_rows(&self.mplex().public);
            let header = ["source", "target", "weight"];
            self.emitter.csv("build", "media_edges.csv", &header, &media_rows)?;
            self.emitter.csv("build", "public_edges.csv", &header, &public_rows)?;
        }
        Ok(())
    }

    fn stage_backbone(&mut self) -> Result<(), PipelineError> {
        let params = BackboneParams {
            alpha: self.cfg.backbone_alpha,
        };
        let media_bb = net::disparity_backbone(&self.mplex().media, params)
            .map_err(|e| stage_err("backbone", e))?;
        let public_bb = net::disparity_backbone(&self.mplex().public, params)
            .map_err(|e| stage_err("backbone", e))?;
        self.summary.networks.insert(
            "media_backbone".to_string(),
            NetworkCounts {
                nodes: media_bb.node_count(),
                links: media_bb.edge_count(),
            },
        );
        self.summary.networks.insert(
            "public_backbone".to_string(),
            NetworkCounts {
                nodes: public_bb.node_count(),
                links: public_bb.edge_count(),
            },
        );
        self.backbones = Some((media_bb, public_bb));

        if self.enabled(Stage::Backbone) {
            let (m, p) = self.backbones();
            let header = ["source", "target", "weight"];
            let media_rows = edge_rows(m);
            let public_rows = edge_rows(p);
            self.emitter.csv("backbone", "media_backbone.csv", &header, &media_rows)?;
            self.emitter.csv("backbone", "public_backbone.csv", &header, &public_rows)?;
        }
        Ok(())
    }

    /// Centrality tables and summaries. Centralities and the cross-layer
    /// rank alignment run on the backbones (the denoised structure); top-k
    /// overlap and Gini concentration run on the full aggregates, whose
    /// weights they are about.
    fn stage_metrics(&mut self) -> Result<(), PipelineError> {
        let (media_bb, public_bb) = self.backbones();
        let mut rows = Vec::new();
        for (layer, n) in [("media", media_bb), ("public", public_bb)] {
            for measure in Measure::ALL {
                let cv = metrics::centralities(n, measure, Direction::Total)
                    .map_err(|e| stage_err("metrics", e))?;
                for (node, value) in &cv.values {
                    rows.push(vec![
                        layer.to_string(),
                        node.to_string(),
                        measure.as_str().to_string(),
                        fmt_f64(*value),
                    ]);
                }
            }
        }
        let summary_rows: Vec<Vec<String>> = [
            ("media_full", &self.mplex().media),
            ("media_backbone", media_bb),
            ("public_full", &self.mplex().public),
            ("public_backbone", public_bb),
        ]
        .into_iter()
        .map(|(name, n)| {
            let s = metrics::network_summary(n);
            vec![
                name.to_string(),
                s.n_nodes.to_string(),
                s.n_links.to_string(),
                fmt_f64(s.mean_degree),
                fmt_f64(s.clustering),
                fmt_opt(s.assortativity),
                fmt_f64(s.scc_fraction),
                fmt_f64(s.reciprocity),
            ]
        })
        .collect();

        let media_full = &self.mplex().media;
        let public_full = &self.mplex().public;
        let shared: Vec<CountryCode> = media_full
            .nodes()
            .filter(|n| public_full.contains_node(*n))
            .collect();
        let mut topk_rows = Vec::new();
        for k in TOPK_KS {
            for &node in &shared {
                let a = metrics::topk_neighbors(media_full, node, k)
                    .map_err(|e| stage_err("metrics", e))?;
                let b = metrics::topk_neighbors(public_full, node, k)
                    .map_err(|e| stage_err("metrics", e))?;
                topk_rows.push(vec![
                    node.to_string(),
                    k.to_string(),
                    fmt_f64(metrics::jaccard_topk(&a, &b)),
                ]);
            }
        }

        let mut gini_rows = Vec::new();
        for (layer, n) in [("media", media_full), ("public", public_full)] {
            for node in n.nodes() {
                match metrics::gini_out_weights(n, node) {
                    Ok(g) => gini_rows.push(vec![
                        layer.to_string(),
                        node.to_string(),
                        fmt_f64(g),
                    ]),
                    Err(metrics::MetricsError::NoOutEdges(_)) => {}
                    Err(e) => return Err(stage_err("metrics", e)),
                }
            }
        }

        let bb_mplex = MultiplexAttention {
            media: media_bb.clone(),
            public: public_bb.clone(),
            daily_media: None,
            daily_public: None,
        };
        let mut align_rows = Vec::new();
        for measure in Measure::ALL {
            match metrics::spearman_centrality_alignment(&bb_mplex, measure) {
                Ok((rho, p)) => align_rows.push(vec![
                    measure.as_str().to_string(),
                    fmt_f64(rho),
                    fmt_f64(p),
                ]),
                // Too few shared backbone nodes to rank, or a centrality
                // that is constant across them: no row for this measure
                // rather than a fabricated value.
                Err(metrics::MetricsError::InsufficientNodes { .. }) => {}
                Err(metrics::MetricsError::Stats(crate::stats::StatsError::ConstantInput)) => {}
                Err(e) => return Err(stage_err("metrics", e)),
            }
        }

        self.emitter.csv(
            "metrics",
            "centralities.csv",
            &["layer", "node", "measure", "value"],
            &rows,
        )?;
        self.emitter.csv(
            "metrics",
            "summary.csv",
            &[
                "network",
                "n_nodes",
                "n_links",
                "mean_degree",
                "clustering",
                "assortativity",
                "scc_fraction",
                "reciprocity",
            ],
            &summary_rows,
        )?;
        self.emitter.csv(
            "metrics",
            "topk_jaccard.csv",
            &["pair", "k", "jaccard"],
            &topk_rows,
        )?;
        self.emitter
            .csv("metrics", "gini.csv", &["layer", "node", "gini"], &gini_rows)?;
        self.emitter.csv(
            "metrics",
            "centrality_alignment.csv",
            &["measure", "spearman_rho", "p"],
            &align_rows,
        )?;
        Ok(())
    }

    fn stage_motifs(&mut self) -> Result<(), PipelineError> {
        let mut tables = Vec::new();
        {
            let (media_bb, public_bb) = self.backbones();
            for (name, n, stream) in [
                ("motifs_media.csv", media_bb, 1u64),
                ("motifs_public.csv", public_bb, 2u64),
            ] {
                let z = motifs::motif_zscores(
                    n,
                    self.cfg.motif_ensemble,
                    rng::derive(self.cfg.motif_seed, stream),
                )
                .map_err(|e| stage_err("motifs", e))?;
                let rows: Vec<Vec<String>> = TRIAD_CLASSES
                    .iter()
                    .enumerate()
                    .map(|(i, class)| {
                        vec![
                            class.to_string(),
                            z.real[i].to_string(),
                            fmt_f64(z.mean_rand[i]),
                            fmt_f64(z.std_rand[i]),
                            fmt_opt(z.z[i]),
                        ]
                    })
                    .collect();
                tables.push((name, rows));
            }
        }
        for (name, rows) in tables {
            self.emitter.csv(
                "motifs",
                name,
                &["class", "count_real", "mean_rand", "std_rand", "z"],
                &rows,
            )?;
        }
        Ok(())
    }

    fn stage_communities(&mut self) -> Result<(), PipelineError> {
        let mut tables = Vec::new();
        {
            let (media_bb, public_bb) = self.backbones();
            for (layer, name, n, stream) in [
                ("media", "communities_media.csv", media_bb, 1u64),
                ("public", "communities_public.csv", public_bb, 2u64),
            ] {
                if n.node_count() == 0 {
                    return Err(stage_err("communities", format!("{layer} backbone is empty")));
                }
                let part = community::detect_communities_best_of(
                    n,
                    self.cfg.community_restarts,
                    rng::derive(self.cfg.community_seed, stream),
                );
                tables.push((layer, name, part));
            }
        }
        for (layer, name, part) in tables {
            self.summary.communities.insert(
                layer.to_string(),
                ModuleStats {
                    modules: part.module_count(),
                    codelength: part.codelength,
                },
            );
            let rows: Vec<Vec<String>> = part
                .assignment
                .iter()
                .map(|(node, module)| vec![node.to_string(), module.to_string()])
                .collect();
            self.emitter.csv("communities", name, &["node", "module"], &rows)?;
        }
        Ok(())
    }

    fn stage_regions(&mut self) -> Result<(), PipelineError> {
        let rm = self.region_map("regions")?.clone();
        let mut tables = Vec::new();
        let test_row;
        {
            let mplex = self.mplex();
            for (name, n) in [
                ("region_flow_media.csv", &mplex.media),
                ("region_flow_public.csv", &mplex.public),
            ] {
                let flow =
                    regions::region_flow_matrix(n, &rm).map_err(|e| stage_err("regions", e))?;
                let rows: Vec<Vec<String>> = (0..REGIONS.len())
                    .map(|r| {
                        let mut row = vec![REGIONS[r].as_str().to_string()];
                        row.extend(flow.matrix[r].iter().map(|&v| fmt_f64(v)));
                        row.push(flow.zero_rows[r].to_string());
                        row
                    })
                    .collect();
                tables.push((name, rows));
            }
            let test = regions::region_gini_compare(&mplex.media, &mplex.public, &rm)
                .map_err(|e| stage_err("regions", e))?;
            test_row = vec![vec![
                fmt_f64(test.statistic),
                fmt_f64(test.p),
                test.method.to_string(),
            ]];
        }
        let mut header = vec!["region".to_string()];
        header.extend(REGIONS.iter().map(|r| r.as_str().to_lowercase()));
        header.push("zero_outflow".to_string());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        for (name, rows) in tables {
            self.emitter.csv("regions", name, &header_refs, &rows)?;
        }
        self.emitter.csv(
            "regions",
            "region_gini_test.csv",
            &["statistic", "p", "method"],
            &test_row,
        )?;
        Ok(())
    }

    /// Lead-lag scan over every stitched pair. The public series is the
    /// stitched volume; the media series counts events on exactly the same
    /// days, zero-filled where no events fell.
    fn stage_granger(&mut self) -> Result<(), PipelineError> {
        let same_region: Option<RegionMap> = if self.cfg.regions.is_some() {
            Some(self.region_map("granger")?.clone())
        } else {
            None
        };
        let mplex = self.mplex();
        let daily_media = mplex
            .daily_media
            .as_ref()
            .expect("daily media kept by build stage");
        let mut pairs: BTreeMap<(CountryCode, CountryCode), PairSeries> = BTreeMap::new();
        for s in &self.series {
            let media: Vec<f64> = (0..s.values.len())
                .map(|offset| {
                    let day: NaiveDate = s.start_date + chrono::Duration::days(offset as i64);
                    daily_media
                        .get(&day)
                        .and_then(|n| n.weight(s.source, s.target))
                        .unwrap_or(0.0)
                })
                .collect();
            pairs.insert(
                (s.source, s.target),
                PairSeries {
                    media,
                    public: s.values.clone(),
                },
            );
        }
        let matrix = causality::granger_matrix(
            &pairs,
            1..=self.cfg.granger_max_lag,
            self.cfg.granger_alpha,
            self.cfg.granger_difference,
        );

        let mut counts = GrangerCounts {
            pairs: matrix.pairs.len(),
            errors: matrix.errors.len(),
            media_causes_public: 0,
            public_causes_media: 0,
            both: 0,
            neither: 0,
        };
        let mut pair_rows = Vec::new();
        let mut feature_rows = Vec::new();
        for ((source, target), outcome) in &matrix.pairs {
            use crate::causality::PairClass;
            match outcome.class {
                PairClass::MediaCausesPublic => counts.media_causes_public += 1,
                PairClass::PublicCausesMedia => counts.public_causes_media += 1,
                PairClass::Both => counts.both += 1,
                PairClass::Neither => counts.neither += 1,
            }
            pair_rows.push(vec![
                source.to_string(),
                target.to_string(),
                outcome.class.as_str().to_string(),
                outcome.m2p.best_lag.map(|l| l.to_string()).unwrap_or_default(),
                fmt_f64(outcome.m2p.f_stat),
                fmt_f64(outcome.m2p.p_value),
                outcome.p2m.best_lag.map(|l| l.to_string()).unwrap_or_default(),
                fmt_f64(outcome.p2m.f_stat),
                fmt_f64(outcome.p2m.p_value),
            ]);
            let same = same_region
                .as_ref()
                .and_then(|rm| Some((rm.get(source)?, rm.get(target)?)))
                .map(|(a, b)| (a == b).to_string())
                .unwrap_or_default();
            feature_rows.push(vec![
                source.to_string(),
                target.to_string(),
                outcome.class.as_str().to_string(),
                same,
                fmt_f64(mplex.media.out_strength(*source)),
                fmt_f64(mplex.media.in_strength(*target)),
                fmt_f64(mplex.public.out_strength(*source)),
                fmt_f64(mplex.public.in_strength(*target)),
                fmt_f64(outcome.media_mean),
                fmt_f64(outcome.media_var),
                fmt_f64(outcome.public_mean),
                fmt_f64(outcome.public_var),
            ]);
        }
        let error_rows: Vec<Vec<String>> = matrix
            .errors
            .iter()
            .map(|((s, t), msg)| vec![s.to_string(), t.to_string(), msg.clone()])
            .collect();
        self.summary.granger = Some(counts);

        self.emitter.csv(
            "granger",
            "granger_pairs.csv",
            &[
                "source", "target", "class", "m2p_lag", "m2p_F", "m2p_p", "p2m_lag", "p2m_F",
                "p2m_p",
            ],
            &pair_rows,
        )?;
        self.emitter.csv(
            "granger",
            "granger_features.csv",
            &[
                "source",
                "target",
                "class",
                "same_region",
                "media_out_strength_source",
                "media_in_strength_target",
                "public_out_strength_source",
                "public_in_strength_target",
                "media_mean",
                "media_var",
                "public_mean",
                "public_var",
            ],
            &feature_rows,
        )?;
        self.emitter.csv(
            "granger",
            "granger_errors.csv",
            &["source", "target", "error"],
            &error_rows,
        )?;
        Ok(())
    }

    /// Modal co-mention topic per covered country, overall and per source.
    /// Countries with no in-vocabulary co-mentions are simply absent.
    fn stage_topics(&mut self) -> Result<(), PipelineError> {
        let path = self
            .cfg
            .embeddings
            .as_ref()
            .ok_or_else(|| stage_err("topics", "no embeddings configured"))?;
        let emb = ingest::load_embeddings(path).map_err(|e| stage_err("topics", e))?;
        let targets: BTreeSet<CountryCode> = self.events.iter().map(|e| e.target).collect();
        let mut coverage_rows = Vec::new();
        let mut source_rows = Vec::new();
        for target in targets {
            match topics::country_coverage_topic(&self.events, target, &emb) {
                Ok(label) => coverage_rows
                    .push(vec![target.to_string(), label.as_str().to_string()]),
                Err(topics::TopicsError::NoCoverage(_)) => continue,
                Err(e) => return Err(stage_err("topics", e)),
            }
            let by_source = topics::coverage_by_source(&self.events, target, &emb)
                .map_err(|e| stage_err("topics", e))?;
            for (source, label) in by_source {
                source_rows.push(vec![
                    target.to_string(),
                    source.to_string(),
                    label.as_str().to_string(),
                ]);
            }
        }
        self.emitter.csv(
            "topics",
            "coverage_topics.csv",
            &["target", "topic"],
            &coverage_rows,
        )?;
        self.emitter.csv(
            "topics",
            "coverage_topics_by_source.csv",
            &["target", "source", "topic"],
            &source_rows,
        )?;
        Ok(())
    }
}

fn edge_rows(n: &AttentionNetwork) -> Vec<Vec<String>> {
    n.edges()
        .map(|(s, t, w)| vec![s.to_string(), t.to_string(), fmt_f64(w)])
        .collect()
}

/// Reference used to stitch one source: the configured target when both
/// windows carry it, otherwise the co-present target with the largest
/// first-window value on the overlap day (the most robust signal to pin
/// the scale to), ties to the smaller code. None when the windows share
/// no target at all.
fn choose_reference(
    configured: CountryCode,
    w1: &TrendsWindow,
    w2: &TrendsWindow,
) -> Option<CountryCode> {
    if w1.values.contains_key(&configured) && w2.values.contains_key(&configured) {
        return Some(configured);
    }
    let overlap = w1.days() - 1;
    let mut best: Option<(CountryCode, u8)> = None;
    for (target, values) in &w1.values {
        if !w2.values.contains_key(target) {
            continue;
        }
        let v = values[overlap];
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((*target, v));
        }
    }
    best.map(|(t, _)| t)
}

/// Plot-ready CSVs derived from an existing run directory, under
/// `report/`. Inputs a disabled stage never wrote yield headers-only
/// files, so downstream plotting scripts see a fixed schema either way.
pub fn emit_report(summary: &RunSummary) -> Result<Vec<String>, PipelineError> {
    let dir = &summary.output_dir;
    let report_dir = dir.join("report");
    fs::create_dir_all(&report_dir).map_err(|e| stage_err("report", e))?;
    let mut written = Vec::new();

    // Jaccard CDF: one curve per k, cumulative share of countries at or
    // below each overlap value.
    {
        let mut rows = Vec::new();
        if let Some(records) = read_csv_opt(dir.join("topk_jaccard.csv"))? {
            let mut by_k: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            for r in &records {
                by_k.entry(parse_u64(&r[1])).or_default().push(parse_f64(&r[2]));
            }
            for (k, mut vals) in by_k {
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = vals.len() as f64;
                for (i, v) in vals.iter().enumerate() {
                    rows.push(vec![
                        k.to_string(),
                        fmt_f64(*v),
                        fmt_f64((i + 1) as f64 / n),
                    ]);
                }
            }
        }
        written.push(write_report_csv(
            &report_dir,
            "fig_topk_jaccard_cdf.csv",
            &["k", "jaccard", "cum_fraction"],
            &rows,
        )?);
    }

    // Gini CDF per layer.
    {
        let mut rows = Vec::new();
        if let Some(records) = read_csv_opt(dir.join("gini.csv"))? {
            let mut by_layer: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for r in &records {
                by_layer.entry(r[0].clone()).or_default().push(parse_f64(&r[2]));
            }
            for (layer, mut vals) in by_layer {
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = vals.len() as f64;
                for (i, v) in vals.iter().enumerate() {
                    rows.push(vec![
                        layer.clone(),
                        fmt_f64(*v),
                        fmt_f64((i + 1) as f64 / n),
                    ]);
                }
            }
        }
        written.push(write_report_csv(
            &report_dir,
            "fig_gini_cdf.csv",
            &["layer", "gini", "cum_fraction"],
            &rows,
        )?);
    }

    // Motif significance profile, both layers side by side.
    {
        let mut rows = Vec::new();
        for (layer, name) in [("media", "motifs_media.csv"), ("public", "motifs_public.csv")] {
            if let Some(records) = read_csv_opt(dir.join(name))? {
                for r in &records {
                    rows.push(vec![layer.to_string(), r[0].clone(), r[4].clone()]);
                }
            }
        }
        written.push(write_report_csv(
            &report_dir,
            "fig_motif_profile.csv",
            &["layer", "class", "z"],
            &rows,
        )?);
    }

    // Region flow matrices in long form.
    {
        let mut rows = Vec::new();
        for (layer, name) in [
            ("media", "region_flow_media.csv"),
            ("public", "region_flow_public.csv"),
        ] {
            if let Some(records) = read_csv_opt(dir.join(name))? {
                for r in &records {
                    for (col, region) in REGIONS.iter().enumerate() {
                        rows.push(vec![
                            layer.to_string(),
                            r[0].clone(),
                            region.as_str().to_string(),
                            r[col + 1].clone(),
                        ]);
                    }
                }
            }
        }
        written.push(write_report_csv(
            &report_dir,
            "fig_region_matrix.csv",
            &["layer", "source_region", "dest_region", "share"],
            &rows,
        )?);
    }

    // Community assignments, both layers.
    {
        let mut rows = Vec::new();
        for (layer, name) in [
            ("media", "communities_media.csv"),
            ("public", "communities_public.csv"),
        ] {
            if let Some(records) = read_csv_opt(dir.join(name))? {
                for r in &records {
                    rows.push(vec![layer.to_string(), r[0].clone(), r[1].clone()]);
                }
            }
        }
        written.push(write_report_csv(
            &report_dir,
            "fig_communities.csv",
            &["layer", "node", "module"],
            &rows,
        )?);
    }

    // Lead-lag class histogram.
    {
        let mut rows = Vec::new();
        if let Some(records) = read_csv_opt(dir.join("granger_pairs.csv"))? {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for class in ["media_causes_public", "public_causes_media", "both", "neither"] {
                counts.insert(class, 0);
            }
            for r in &records {
                if let Some(c) = counts.get_mut(r[2].as_str()) {
                    *c += 1;
                }
            }
            for class in ["media_causes_public", "public_causes_media", "both", "neither"] {
                rows.push(vec![class.to_string(), counts[class].to_string()]);
            }
        }
        written.push(write_report_csv(
            &report_dir,
            "fig_granger_classes.csv",
            &["class", "count"],
            &rows,
        )?);
    }

    Ok(written)
}

fn write_report_csv(
    report_dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<String, PipelineError> {
    let mut w =
        csv::Writer::from_path(report_dir.join(name)).map_err(|e| stage_err("report", e))?;
    w.write_record(header).map_err(|e| stage_err("report", e))?;
    for row in rows {
        w.write_record(row).map_err(|e| stage_err("report", e))?;
    }
    w.flush().map_err(|e| stage_err("report", e))?;
    Ok(format!("report/{name}"))
}

fn read_csv_opt(path: PathBuf) -> Result<Option<Vec<Vec<String>>>, PipelineError> {
    if !path.is_file() {
        return Ok(None);
    }
    let mut reader = csv::Reader::from_path(&path).map_err(|e| stage_err("report", e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| stage_err("report", e))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(Some(rows))
}

fn parse_f64(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

fn parse_u64(s: &str) -> u64 {
    s.parse().unwrap_or(0)
}
