//! Seeded synthetic worlds with planted ground truth: coupled AR(1)
//! attention series, block-model networks, and export in the exact CSV
//! formats the loaders read back.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use thiserror::Error;

use crate::causality::CausalDirection;
use crate::country::{CountryCode, Region};
use crate::ingest::{
    self, AttentionEvent, IngestError, RegionMap, TrendsWindow,
};
use crate::net::{AttentionNetwork, DateScope, Layer};
use crate::rng::{standard_normal, stream_rng};

/// Resting level the AR(1) processes fluctuate around.
pub const BASE_LEVEL: f64 = 50.0;
pub const DEFAULT_AR_COEFF: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCoupling {
    pub source: CountryCode,
    pub target: CountryCode,
    pub direction: CausalDirection,
    pub lag: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub countries: Vec<(CountryCode, Region)>,
    pub period_days: usize,
    pub planted_communities: BTreeMap<CountryCode, usize>,
    pub planted_couplings: Vec<PlantedCoupling>,
    pub noise_sigma: f64,
    pub ar_coeff: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightLaw {
    Unit,
    Uniform { lo: f64, hi: f64 },
    Exponential { mean: f64 },
}

impl WeightLaw {
    fn validate(self) -> Result<(), SimgenError> {
        let ok = match self {
            WeightLaw::Unit => true,
            WeightLaw::Uniform { lo, hi } => lo > 0.0 && hi > lo,
            WeightLaw::Exponential { mean } => mean > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SimgenError::InvalidSpec(format!(
                "weight law must draw positive weights: {self:?}"
            )))
        }
    }

    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            WeightLaw::Unit => 1.0,
            WeightLaw::Uniform { lo, hi } => rng.gen_range(lo..hi),
            WeightLaw::Exponential { mean } => loop {
                let u: f64 = rng.gen();
                let w = -mean * (1.0 - u).ln();
                if w > 0.0 {
                    break w;
                }
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum SimgenError {
    #[error("invalid world spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Per-pair daily series for both layers, keyed by (source, target).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSeries {
    pub media: BTreeMap<(CountryCode, CountryCode), Vec<f64>>,
    pub public: BTreeMap<(CountryCode, CountryCode), Vec<f64>>,
}

impl WorldSpec {
    fn validate(&self) -> Result<(), SimgenError> {
        let invalid = |msg: String| Err(SimgenError::InvalidSpec(msg));
        if self.countries.is_empty() {
            return invalid("no countries".into());
        }
        let codes: Vec<CountryCode> = self.countries.iter().map(|&(c, _)| c).collect();
        let mut dedup = codes.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != codes.len() {
            return invalid("duplicate country".into());
        }
        if self.period_days == 0 {
            return invalid("period_days must be positive".into());
        }
        for &(code, _) in &self.countries {
            if !self.planted_communities.contains_key(&code) {
                return invalid(format!("country {code} missing from planted partition"));
            }
        }
        for c in &self.planted_couplings {
            if c.source == c.target {
                return invalid(format!("coupling {}->{} is a self-loop", c.source, c.target));
            }
            if !dedup.binary_search(&c.source).is_ok() || !dedup.binary_search(&c.target).is_ok() {
                return invalid(format!("coupling {}->{} names unknown countries", c.source, c.target));
            }
            if !(1..=14).contains(&c.lag) {
                return invalid(format!("coupling lag {} outside 1..=14", c.lag));
            }
            if !(c.coefficient > -1.0 && c.coefficient < 1.0) {
                return invalid(format!("coupling coefficient {} outside (-1,1)", c.coefficient));
            }
        }
        if !(self.noise_sigma > 0.0) {
            return invalid("noise_sigma must be positive".into());
        }
        if !(self.ar_coeff > -1.0 && self.ar_coeff < 1.0) {
            return invalid("ar_coeff must lie in (-1,1) for stationarity".into());
        }
        Ok(())
    }

    fn ordered_pairs(&self) -> Vec<(CountryCode, CountryCode)> {
        let codes: Vec<CountryCode> = self.countries.iter().map(|&(c, _)| c).collect();
        let mut pairs = Vec::with_capacity(codes.len() * codes.len().saturating_sub(1));
        for &s in &codes {
            for &t in &codes {
                if s != t {
                    pairs.push((s, t));
                }
            }
        }
        pairs
    }

    pub fn region_map(&self) -> RegionMap {
        self.countries.iter().copied().collect()
    }
}

// Stream tags keep every generated entity on its own RNG stream.
const STREAM_MEDIA: u64 = 1 << 32;
const STREAM_PUBLIC: u64 = 2 << 32;
const STREAM_NET: u64 = 3 << 32;

fn ar1(base: f64, ar: f64, sigma: f64, len: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut dev = 0.0;
    (0..len)
        .map(|_| {
            dev = ar * dev + sigma * standard_normal(&mut rng);
            base + dev
        })
        .collect()
}

/// Both layers' pair series: independent AR(1) processes around
/// BASE_LEVEL, then each planted coupling adds coefficient·x_{t−lag} of
/// the driving layer's base process into the driven series. Bit-identical
/// per seed; every pair draws from its own derived stream.
pub fn gen_coupled_series(spec: &WorldSpec) -> Result<SyntheticSeries, SimgenError> {
    spec.validate()?;
    let pairs = spec.ordered_pairs();
    let mut media = BTreeMap::new();
    let mut public = BTreeMap::new();
    for (i, &pair) in pairs.iter().enumerate() {
        media.insert(
            pair,
            ar1(BASE_LEVEL, spec.ar_coeff, spec.noise_sigma, spec.period_days, spec.seed, STREAM_MEDIA | i as u64),
        );
        public.insert(
            pair,
            ar1(BASE_LEVEL, spec.ar_coeff, spec.noise_sigma, spec.period_days, spec.seed, STREAM_PUBLIC | i as u64),
        );
    }
    // Couplings read the driver's base process, so chained couplings
    // cannot feed back.
    let media_base = media.clone();
    let public_base = public.clone();
    for c in &spec.planted_couplings {
        let pair = (c.source, c.target);
        let (driver, driven) = match c.direction {
            CausalDirection::MediaToPublic => (&media_base[&pair], public.get_mut(&pair).unwrap()),
            CausalDirection::PublicToMedia => (&public_base[&pair], media.get_mut(&pair).unwrap()),
        };
        for t in c.lag..spec.period_days {
            driven[t] += c.coefficient * driver[t - c.lag];
        }
    }
    Ok(SyntheticSeries { media, public })
}

/// Directed block model over the planted partition: arc probability
/// `p_in` within a module, `p_out` across, weights from `law`. Equal
/// probabilities are allowed and plant no structure.
pub fn gen_planted_network(
    spec: &WorldSpec,
    p_in: f64,
    p_out: f64,
    law: WeightLaw,
) -> Result<AttentionNetwork, SimgenError> {
    spec.validate()?;
    law.validate()?;
    if !(0.0..=1.0).contains(&p_out) || !(0.0..=1.0).contains(&p_in) || p_out > p_in {
        return Err(SimgenError::InvalidSpec(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in={p_in} p_out={p_out}"
        )));
    }
    let mut net = AttentionNetwork::new(Layer::Media, DateScope::Empty);
    for &(code, _) in &spec.countries {
        net.add_node(code);
    }
    for (i, (s, t)) in spec.ordered_pairs().into_iter().enumerate() {
        let mut rng = stream_rng(spec.seed, STREAM_NET | i as u64);
        let p = if spec.planted_communities[&s] == spec.planted_communities[&t] {
            p_in
        } else {
            p_out
        };
        if rng.gen::<f64>() < p {
            net.bump_edge(s, t, law.sample(&mut rng));
        }
    }
    Ok(net)
}

/// Files written by `export_world`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldFiles {
    pub events: std::path::PathBuf,
    pub trends: std::path::PathBuf,
    pub regions: std::path::PathBuf,
}

/// Writes the synthetic world in the loader formats: media pair series
/// as daily event counts, public pair series as two overlapping
/// renormalized trends windows (split at the midpoint, both containing
/// the split day), and the region map.
///
/// Renormalization mimics the public data source: per (source, window)
/// all targets are scaled jointly so the window maximum becomes 100,
/// rounded to integers. The two windows scale independently, which is
/// exactly what stitching has to undo.
pub fn export_world(
    spec: &WorldSpec,
    series: &SyntheticSeries,
    start: NaiveDate,
    dir: &Path,
) -> Result<WorldFiles, SimgenError> {
    spec.validate()?;
    if spec.period_days < 3 {
        return Err(SimgenError::InvalidSpec(
            "need at least 3 days to cut two overlapping windows".into(),
        ));
    }
    let t = spec.period_days;
    let mid = (t - 1) / 2;

    let mut events: Vec<AttentionEvent> = Vec::new();
    for (&(source, target), values) in &series.media {
        for (day, &v) in values.iter().enumerate() {
            let count = v.max(0.0).round() as u64;
            if count > 0 {
                events.push(AttentionEvent {
                    date: start + chrono::Days::new(day as u64),
                    source,
                    target,
                    count,
                    co_mentions: Vec::new(),
                });
            }
        }
    }
    events.sort_by_key(|e| (e.date, e.source, e.target));

    let mut windows: Vec<TrendsWindow> = Vec::new();
    for &(source, _) in &spec.countries {
        for (w_start, w_end) in [(0usize, mid), (mid, t - 1)] {
            let mut values: BTreeMap<CountryCode, Vec<f64>> = BTreeMap::new();
            for (&(s, target), series_values) in &series.public {
                if s == source {
                    values.insert(target, series_values[w_start..=w_end].to_vec());
                }
            }
            let max = values
                .values()
                .flat_map(|v| v.iter().copied())
                .fold(0.0f64, f64::max);
            let scale = if max > 0.0 { 100.0 / max } else { 0.0 };
            let quantized: BTreeMap<CountryCode, Vec<u8>> = values
                .into_iter()
                .map(|(target, v)| {
                    let q = v
                        .into_iter()
                        .map(|x| (x.max(0.0) * scale).round().min(100.0) as u8)
                        .collect();
                    (target, q)
                })
                .collect();
            windows.push(TrendsWindow {
                source,
                start_date: start + chrono::Days::new(w_start as u64),
                end_date: start + chrono::Days::new(w_end as u64),
                values: quantized,
            });
        }
    }

    let files = WorldFiles {
        events: dir.join("events.csv"),
        trends: dir.join("trends.csv"),
        regions: dir.join("regions.csv"),
    };
    ingest::write_attention_events(&files.events, &events)?;
    ingest::write_trends_windows(&files.trends, &windows)?;
    ingest::write_region_map(&files.regions, &spec.region_map())?;
    Ok(files)
}
