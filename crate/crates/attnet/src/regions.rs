//! Region-level attention: the 5×5 row-normalized flow matrix and the
//! media-vs-public comparison of regional outflow concentration.

use thiserror::Error;

use crate::country::{CountryCode, Region, REGIONS};
use crate::ingest::RegionMap;
use crate::metrics::{gini, MetricsError};
use crate::net::AttentionNetwork;
use crate::stats::{mann_whitney_u, StatsError, TestResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RegionFlow {
    /// Fixed order: Africa, Americas, Asia, Europe, Oceania.
    pub regions: [Region; 5],
    /// Row = source region, column = destination; rows sum to 1 unless
    /// flagged. The diagonal holds intra-region cross-country attention.
    pub matrix: [[f64; 5]; 5],
    /// Rows with zero outflow are left as zeros instead of normalized.
    pub zero_rows: [bool; 5],
}

#[derive(Debug, Error, PartialEq)]
pub enum RegionsError {
    #[error("countries missing from the region map: {0:?}")]
    UnmappedCountry(Vec<CountryCode>),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Sum of country-to-country weights grouped by (source region,
/// destination region), each row normalized by its total outflow.
pub fn region_flow_matrix(n: &AttentionNetwork, rm: &RegionMap) -> Result<RegionFlow, RegionsError> {
    let mut unmapped: Vec<CountryCode> = n
        .nodes()
        .filter(|c| !rm.contains_key(c))
        .collect();
    if !unmapped.is_empty() {
        unmapped.sort();
        unmapped.dedup();
        return Err(RegionsError::UnmappedCountry(unmapped));
    }
    let mut matrix = [[0.0f64; 5]; 5];
    for (s, t, w) in n.edges() {
        matrix[rm[&s].index()][rm[&t].index()] += w;
    }
    let mut zero_rows = [false; 5];
    for (r, row) in matrix.iter_mut().enumerate() {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            for cell in row.iter_mut() {
                *cell /= total;
            }
        } else {
            zero_rows[r] = true;
        }
    }
    Ok(RegionFlow {
        regions: REGIONS,
        matrix,
        zero_rows,
    })
}

/// Does one layer concentrate regional outflows more than the other?
///
/// Per layer, the Gini of every non-flagged region's outflow row; the two
/// samples (up to 5 values each) are compared by the exact two-sided
/// Mann-Whitney test. The statistic reported is the classic min(U, U′),
/// so identical layers give n²/2 and total separation gives 0.
pub fn region_gini_compare(
    media: &AttentionNetwork,
    public: &AttentionNetwork,
    rm: &RegionMap,
) -> Result<TestResult, RegionsError> {
    let row_ginis = |n: &AttentionNetwork| -> Result<Vec<f64>, RegionsError> {
        let flow = region_flow_matrix(n, rm)?;
        let mut out = Vec::new();
        for r in 0..5 {
            if !flow.zero_rows[r] {
                out.push(gini(&flow.matrix[r])?);
            }
        }
        Ok(out)
    };
    let media_ginis = row_ginis(media)?;
    let public_ginis = row_ginis(public)?;
    let result = mann_whitney_u(&media_ginis, &public_ginis)?;
    let max_u = (media_ginis.len() * public_ginis.len()) as f64;
    Ok(TestResult {
        statistic: result.statistic.min(max_u - result.statistic),
        p: result.p,
        method: result.method,
    })
}
