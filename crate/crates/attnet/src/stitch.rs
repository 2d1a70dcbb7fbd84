//! Window stitching for normalized search-volume series.
//!
//! Search volumes arrive per window, rescaled by the exporter so each
//! window's maximum is 100. Two windows sharing one overlap day are joined
//! by re-anchoring both on a reference target: each window is scaled so the
//! reference series hits `scale_top` on the overlap day, which puts every
//! target from both windows on one common scale. A smoothing constant is
//! added to every raw value first so zero overlap readings cannot divide by
//! zero.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use thiserror::Error;

use crate::country::CountryCode;
use crate::ingest::TrendsWindow;

/// One stitched daily series for a (source, target) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub source: CountryCode,
    pub target: CountryCode,
    pub start_date: NaiveDate,
    pub values: Vec<f64>,
    /// True when the target appeared in only one of the stitched windows.
    /// Days covered by the missing window hold 0.0, meaning "no data",
    /// distinct from a measured zero (which carries the smoothing floor).
    pub gap: bool,
}

impl Series {
    pub fn end_date(&self) -> NaiveDate {
        self.start_date + chrono::Duration::days(self.values.len() as i64 - 1)
    }
}

/// Mismatch between the two windows' normalizations at the seam, per target.
#[derive(Debug, Clone, PartialEq)]
pub struct Seam {
    pub target: CountryCode,
    /// |s1·(w1 overlap + add) − s2·(w2 overlap + add)|
    pub discrepancy: f64,
}

#[derive(Debug, Clone)]
pub struct StitchConfig {
    pub reference_target: CountryCode,
    pub smoothing_add: u32,
    pub scale_top: f64,
}

impl Default for StitchConfig {
    fn default() -> Self {
        StitchConfig {
            reference_target: CountryCode::new("US").unwrap(),
            smoothing_add: 1,
            scale_top: 100.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StitchError {
    #[error("windows do not overlap on exactly one day: first ends {w1_end}, second starts {w2_start}")]
    NoOverlap {
        w1_end: NaiveDate,
        w2_start: NaiveDate,
    },
    #[error("windows stitch different sources: {first} vs {second}")]
    SourceMismatch {
        first: CountryCode,
        second: CountryCode,
    },
    #[error("reference target {reference} missing from {which} window")]
    MissingReference {
        reference: CountryCode,
        which: &'static str,
    },
    #[error("series of length {len} cannot be differenced {order} times")]
    TooShort { len: usize, order: u32 },
    #[error("smoothing_add must be >= 1 and scale_top > 0")]
    BadConfig,
}

/// Stitched series for every target in either window, plus per-target seam
/// discrepancies for targets present in both.
#[derive(Debug, Clone)]
pub struct StitchOutcome {
    pub series: Vec<Series>,
    pub seams: Vec<Seam>,
}

/// Join two windows into continuous daily series.
///
/// With `add = smoothing_add`, the scales are
/// `s1 = scale_top / (w1[ref][overlap] + add)` and
/// `s2 = scale_top / (w2[ref][first] + add)`; every value `v` becomes
/// `(v + add) * s_k`. Days before the overlap come from the first window,
/// the overlap day and everything after from the second. The reference
/// series is pinned to exactly `scale_top` on the overlap day.
pub fn stitch_windows(
    w1: &TrendsWindow,
    w2: &TrendsWindow,
    cfg: &StitchConfig,
) -> Result<StitchOutcome, StitchError> {
    if cfg.smoothing_add < 1 || !(cfg.scale_top > 0.0) {
        return Err(StitchError::BadConfig);
    }
    if w1.source != w2.source {
        return Err(StitchError::SourceMismatch {
            first: w1.source,
            second: w2.source,
        });
    }
    if w1.end_date != w2.start_date {
        return Err(StitchError::NoOverlap {
            w1_end: w1.end_date,
            w2_start: w2.start_date,
        });
    }
    let add = cfg.smoothing_add as f64;
    let overlap_idx = w1.days() - 1;
    let ref_w1 = w1
        .values
        .get(&cfg.reference_target)
        .ok_or(StitchError::MissingReference {
            reference: cfg.reference_target,
            which: "first",
        })?;
    let ref_w2 = w2
        .values
        .get(&cfg.reference_target)
        .ok_or(StitchError::MissingReference {
            reference: cfg.reference_target,
            which: "second",
        })?;
    let s1 = cfg.scale_top / (ref_w1[overlap_idx] as f64 + add);
    let s2 = cfg.scale_top / (ref_w2[0] as f64 + add);

    let targets: BTreeSet<CountryCode> = w1.values.keys().chain(w2.values.keys()).copied().collect();
    let total_days = w1.days() + w2.days() - 1;
    let mut series = Vec::with_capacity(targets.len());
    let mut seams = Vec::new();
    for target in targets {
        let in_w1 = w1.values.get(&target);
        let in_w2 = w2.values.get(&target);
        let mut values = Vec::with_capacity(total_days);
        match in_w1 {
            Some(raw) => values.extend(raw[..overlap_idx].iter().map(|&v| (v as f64 + add) * s1)),
            None => values.resize(overlap_idx, 0.0),
        }
        match in_w2 {
            Some(raw) => values.extend(raw.iter().map(|&v| (v as f64 + add) * s2)),
            None => values.resize(total_days, 0.0),
        }
        if target == cfg.reference_target {
            // By construction this equals scale_top; write it directly so
            // the anchor holds bit-exactly for every raw value, not only
            // those where IEEE division round-trips.
            values[overlap_idx] = cfg.scale_top;
        }
        if let (Some(raw1), Some(raw2)) = (in_w1, in_w2) {
            let left = s1 * (raw1[overlap_idx] as f64 + add);
            let right = s2 * (raw2[0] as f64 + add);
            seams.push(Seam {
                target,
                discrepancy: (left - right).abs(),
            });
        }
        series.push(Series {
            source: w1.source,
            target,
            start_date: w1.start_date,
            values,
            gap: in_w1.is_none() || in_w2.is_none(),
        });
    }
    Ok(StitchOutcome { series, seams })
}

/// Difference a series `order` times (0 is the identity). Each pass shortens
/// the series by one day and advances its start date.
pub fn make_stationary(s: &Series, order: u32) -> Result<Series, StitchError> {
    assert!(order <= 2, "differencing order above 2 is not supported");
    if s.values.len() <= order as usize {
        return Err(StitchError::TooShort {
            len: s.values.len(),
            order,
        });
    }
    let mut values = s.values.clone();
    for _ in 0..order {
        values = values.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(Series {
        source: s.source,
        target: s.target,
        start_date: s.start_date + chrono::Duration::days(order as i64),
        values,
        gap: s.gap,
    })
}
