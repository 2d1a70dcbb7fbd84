//! Pairwise Granger-causality between media and public attention series:
//! per-lag F-tests of nested autoregressions, a best-lag scan over 1..14,
//! and the four-way classification of ordered country pairs.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::country::CountryCode;
use crate::stats::{self, StatsError};

pub const DEFAULT_LAGS: RangeInclusive<usize> = 1..=14;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CausalDirection {
    MediaToPublic,
    PublicToMedia,
}

impl CausalDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            CausalDirection::MediaToPublic => "media_to_public",
            CausalDirection::PublicToMedia => "public_to_media",
        }
    }
}

/// One nested-model F-test at a fixed lag.
#[derive(Debug, Clone, PartialEq)]
pub struct GrangerTest {
    pub f_stat: f64,
    pub p_value: f64,
    pub rss_restricted: f64,
    pub rss_unrestricted: f64,
    pub df_num: usize,
    pub df_den: usize,
}

/// Outcome of a lag scan in one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GrangerResult {
    pub direction: CausalDirection,
    /// The max-F lag among significant lags; None when no lag reaches
    /// significance (F and p then describe the overall max-F lag).
    pub best_lag: Option<usize>,
    pub f_stat: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairClass {
    MediaCausesPublic,
    PublicCausesMedia,
    Both,
    Neither,
}

impl PairClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PairClass::MediaCausesPublic => "media_causes_public",
            PairClass::PublicCausesMedia => "public_causes_media",
            PairClass::Both => "both",
            PairClass::Neither => "neither",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CausalityError {
    #[error("series lengths differ: x has {x}, y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("series {which} is constant, test undefined")]
    DegenerateSeries { which: &'static str },
    #[error("need at least {needed} observations for this lag, got {got}")]
    InsufficientLength { needed: usize, got: usize },
    #[error("design matrix is singular (collinear regressors)")]
    SingularDesign,
    #[error("no lag in the scan range is feasible for this series length")]
    AllLagsInfeasible,
    #[error("results do not form a media->public / public->media pair")]
    DirectionMismatch,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn ols_rss(design: DMatrix<f64>, target: &DVector<f64>) -> Result<f64, CausalityError> {
    let ncols = design.ncols();
    let svd = design.clone().svd(true, true);
    let eps = 1e-10 * svd.singular_values.max();
    if svd.singular_values.iter().filter(|&&s| s > eps).count() < ncols {
        return Err(CausalityError::SingularDesign);
    }
    let beta = svd
        .solve(target, eps)
        .map_err(|_| CausalityError::SingularDesign)?;
    Ok((target - design * beta).norm_squared())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Does the history of `x` improve the autoregression of `y`?
///
/// Restricted model: y_t ~ 1 + y_{t-1..t-lag}. Unrestricted adds
/// x_{t-1..t-lag}. Both are fit by least squares on the same T−lag rows;
/// F = ((RSS_r − RSS_u)/lag) / (RSS_u/(T−3·lag−1)) with p from the F
/// tail at (lag, T−3·lag−1) degrees of freedom.
pub fn granger_test(x: &[f64], y: &[f64], lag: usize) -> Result<GrangerTest, CausalityError> {
    assert!(lag >= 1, "lag must be positive");
    if x.len() != y.len() {
        return Err(CausalityError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    let t = y.len();
    // Feasibility: T−3·lag−1 residual degrees of freedom, at least 5.
    let needed = 3 * lag + 6;
    if t < needed {
        return Err(CausalityError::InsufficientLength { needed, got: t });
    }
    if is_constant(x) {
        return Err(CausalityError::DegenerateSeries { which: "x" });
    }
    if is_constant(y) {
        return Err(CausalityError::DegenerateSeries { which: "y" });
    }

    let rows = t - lag;
    let target = DVector::from_iterator(rows, (lag..t).map(|i| y[i]));
    let restricted = DMatrix::from_fn(rows, lag + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            y[lag + r - c]
        }
    });
    let unrestricted = DMatrix::from_fn(rows, 2 * lag + 1, |r, c| {
        if c == 0 {
            1.0
        } else if c <= lag {
            y[lag + r - c]
        } else {
            x[lag + r - (c - lag)]
        }
    });

    let rss_restricted = ols_rss(restricted, &target)?;
    let rss_unrestricted = ols_rss(unrestricted, &target)?;
    let df_num = lag;
    let df_den = t - 3 * lag - 1;
    let num = (rss_restricted - rss_unrestricted).max(0.0) / df_num as f64;
    let den = rss_unrestricted / df_den as f64;
    let f_stat = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let p_value = stats::f_sf(f_stat, df_num as u32, df_den as u32)?;
    Ok(GrangerTest {
        f_stat,
        p_value,
        rss_restricted,
        rss_unrestricted,
        df_num,
        df_den,
    })
}

/// Scan lags, skipping ones the series is too short for. Among
/// significant lags the largest F wins; equal F goes to the smaller lag.
pub fn best_lag_scan(
    x: &[f64],
    y: &[f64],
    lags: RangeInclusive<usize>,
    alpha: f64,
    direction: CausalDirection,
) -> Result<GrangerResult, CausalityError> {
    let mut evaluated: Vec<(usize, GrangerTest)> = Vec::new();
    for lag in lags {
        match granger_test(x, y, lag) {
            Ok(g) => evaluated.push((lag, g)),
            Err(CausalityError::InsufficientLength { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let Some(overall) = evaluated
        .iter()
        .reduce(|best, cand| if cand.1.f_stat > best.1.f_stat { cand } else { best })
    else {
        return Err(CausalityError::AllLagsInfeasible);
    };
    let significant_best = evaluated
        .iter()
        .filter(|(_, g)| g.p_value < alpha)
        .reduce(|best, cand| if cand.1.f_stat > best.1.f_stat { cand } else { best });
    let (lag, test, significant) = match significant_best {
        Some((lag, g)) => (Some(*lag), g, true),
        None => (None, &overall.1, false),
    };
    Ok(GrangerResult {
        direction,
        best_lag: lag,
        f_stat: test.f_stat,
        p_value: test.p_value,
        significant,
    })
}

pub fn classify_pair(
    m2p: &GrangerResult,
    p2m: &GrangerResult,
) -> Result<PairClass, CausalityError> {
    if m2p.direction != CausalDirection::MediaToPublic
        || p2m.direction != CausalDirection::PublicToMedia
    {
        return Err(CausalityError::DirectionMismatch);
    }
    Ok(match (m2p.significant, p2m.significant) {
        (true, true) => PairClass::Both,
        (true, false) => PairClass::MediaCausesPublic,
        (false, true) => PairClass::PublicCausesMedia,
        (false, false) => PairClass::Neither,
    })
}

/// Aligned daily series for one ordered country pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSeries {
    pub media: Vec<f64>,
    pub public: Vec<f64>,
}

/// Scan result for one pair, plus raw-series summary statistics kept for
/// the exported feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub m2p: GrangerResult,
    pub p2m: GrangerResult,
    pub class: PairClass,
    pub media_mean: f64,
    pub media_var: f64,
    pub public_mean: f64,
    pub public_var: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GrangerMatrix {
    pub pairs: BTreeMap<(CountryCode, CountryCode), PairOutcome>,
    /// Pairs whose scan failed, with the reason; the scan continues.
    pub errors: BTreeMap<(CountryCode, CountryCode), String>,
}

fn difference(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] - w[0]).collect()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() < 2 {
        0.0
    } else {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    };
    (mean, var)
}

/// Both-direction scans over every pair. Pairs are independent and run
/// in parallel; the output maps are keyed, so results do not depend on
/// scheduling. `difference_once` first-differences both series (the
/// default stationarity treatment); summary statistics always describe
/// the raw series.
pub fn granger_matrix(
    series: &BTreeMap<(CountryCode, CountryCode), PairSeries>,
    lags: RangeInclusive<usize>,
    alpha: f64,
    difference_once: bool,
) -> GrangerMatrix {
    let results: Vec<((CountryCode, CountryCode), Result<PairOutcome, CausalityError>)> = series
        .par_iter()
        .map(|(&pair, s)| {
            let outcome = (|| {
                let (mx, px) = if difference_once {
                    (difference(&s.media), difference(&s.public))
                } else {
                    (s.media.clone(), s.public.clone())
                };
                let m2p = best_lag_scan(&mx, &px, lags.clone(), alpha, CausalDirection::MediaToPublic)?;
                let p2m = best_lag_scan(&px, &mx, lags.clone(), alpha, CausalDirection::PublicToMedia)?;
                let class = classify_pair(&m2p, &p2m)?;
                let (media_mean, media_var) = mean_var(&s.media);
                let (public_mean, public_var) = mean_var(&s.public);
                Ok(PairOutcome {
                    m2p,
                    p2m,
                    class,
                    media_mean,
                    media_var,
                    public_mean,
                    public_var,
                })
            })();
            (pair, outcome)
        })
        .collect();

    let mut out = GrangerMatrix::default();
    for (pair, res) in results {
        match res {
            Ok(outcome) => {
                out.pairs.insert(pair, outcome);
            }
            Err(e) => {
                out.errors.insert(pair, e.to_string());
            }
        }
    }
    out
}
