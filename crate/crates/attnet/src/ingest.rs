//! Input parsing and validation.
//!
//! Four file formats feed the pipeline, all plain text:
//!
//! - attention events CSV: `date,source,target,count,co_mentions`, one row
//!   per (day, source, target) media record, co-mentions `;`-separated
//! - trends CSV: `source,window_start,window_end,target,day,value`, one row
//!   per series-day of a normalization window, values 0..=100
//! - region map CSV: `country,region`
//! - embedding table: whitespace-separated `word v1 ... vd`
//!
//! Loaders are pure functions of file bytes. Days absent from a declared
//! trends window are zero-volume days (the upstream exporter omits them);
//! days outside the declared window are a hard error.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::country::{CountryCode, Region};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("series {source_country}->{target} in window {start}..{end}: {detail}")]
    LengthMismatch {
        source_country: CountryCode,
        target: CountryCode,
        start: NaiveDate,
        end: NaiveDate,
        detail: String,
    },
    #[error("line {line}: unknown region label {label:?}")]
    UnknownRegionLabel { line: u64, label: String },
    #[error("line {line}: embedding has {got} components, table dimension is {expected}")]
    DimensionMismatch {
        line: u64,
        expected: usize,
        got: usize,
    },
}

/// Inclusive day range. The default collection period spans 404 days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        assert!(start <= end, "period start after end");
        Period { start, end }
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn day_at(&self, offset: usize) -> NaiveDate {
        self.start + chrono::Duration::days(offset as i64)
    }

    pub fn iter_days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.days()).map(|i| self.day_at(i))
    }
}

impl Default for Period {
    fn default() -> Self {
        Period {
            start: NaiveDate::from_ymd_opt(2016, 3, 7).unwrap(),
            end: NaiveDate::from_ymd_opt(2017, 4, 14).unwrap(),
        }
    }
}

/// One dated media-attention record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionEvent {
    pub date: NaiveDate,
    pub source: CountryCode,
    pub target: CountryCode,
    pub count: u64,
    pub co_mentions: Vec<String>,
}

/// Events in file order plus the number of rows dropped for falling outside
/// the collection period.
#[derive(Debug, Clone)]
pub struct LoadedEvents {
    pub events: Vec<AttentionEvent>,
    pub out_of_period: usize,
}

/// One normalization window of search volumes for a single source country.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrendsWindow {
    pub source: CountryCode,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// target -> one value per day, inclusive of both endpoints
    pub values: BTreeMap<CountryCode, Vec<u8>>,
}

impl TrendsWindow {
    pub fn days(&self) -> usize {
        (self.end_date - self.start_date).num_days() as usize + 1
    }
}

pub type RegionMap = BTreeMap<CountryCode, Region>;

/// Word vectors of one fixed dimension, keyed by lowercase word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dimension: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dimension);
        self.entries.insert(word.to_lowercase(), vector);
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn malformed(line: u64, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedRow {
        line,
        reason: reason.into(),
    }
}

fn open(path: &Path) -> Result<std::fs::File, IngestError> {
    std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate, IngestError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| malformed(line, format!("bad date {s:?}")))
}

fn parse_code(s: &str, line: u64) -> Result<CountryCode, IngestError> {
    CountryCode::new(s).map_err(|e| malformed(line, e.to_string()))
}

fn expect_header(
    reader: &mut csv::Reader<impl Read>,
    expected: &[&str],
) -> Result<(), IngestError> {
    let header = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(malformed(
            1,
            format!("header {got:?} does not match expected {expected:?}"),
        ));
    }
    Ok(())
}

/// Load attention events, keeping file order. Rows dated outside `period`
/// are counted and dropped rather than failing the load.
pub fn load_attention_events(path: &Path, period: Period) -> Result<LoadedEvents, IngestError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    expect_header(&mut reader, &["date", "source", "target", "count", "co_mentions"])?;
    let mut events = Vec::new();
    let mut out_of_period = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| malformed(0, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != 5 {
            return Err(malformed(line, format!("expected 5 fields, got {}", record.len())));
        }
        let date = parse_date(&record[0], line)?;
        let source = parse_code(&record[1], line)?;
        let target = parse_code(&record[2], line)?;
        let count: u64 = record[3]
            .parse()
            .map_err(|_| malformed(line, format!("bad count {:?}", &record[3])))?;
        let co_mentions: Vec<String> = record[4]
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if !period.contains(date) {
            out_of_period += 1;
            continue;
        }
        events.push(AttentionEvent {
            date,
            source,
            target,
            count,
            co_mentions,
        });
    }
    Ok(LoadedEvents {
        events,
        out_of_period,
    })
}

/// Serialize events in the same CSV schema `load_attention_events` reads.
pub fn write_attention_events(path: &Path, events: &[AttentionEvent]) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["date", "source", "target", "count", "co_mentions"])
        .map_err(|e| malformed(0, e.to_string()))?;
    for e in events {
        w.write_record([
            e.date.format("%Y-%m-%d").to_string(),
            e.source.to_string(),
            e.target.to_string(),
            e.count.to_string(),
            e.co_mentions.join(";"),
        ])
        .map_err(|err| malformed(0, err.to_string()))?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Load trends windows, grouped by (source, window_start, window_end).
/// Days with no row inside a declared window are zero-volume days.
pub fn load_trends_windows(path: &Path) -> Result<Vec<TrendsWindow>, IngestError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    expect_header(
        &mut reader,
        &["source", "window_start", "window_end", "target", "day", "value"],
    )?;
    // (source, start, end) -> target -> offset -> value
    let mut grouped: BTreeMap<(CountryCode, NaiveDate, NaiveDate), BTreeMap<CountryCode, BTreeMap<usize, u8>>> =
        BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(0, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != 6 {
            return Err(malformed(line, format!("expected 6 fields, got {}", record.len())));
        }
        let source = parse_code(&record[0], line)?;
        let start = parse_date(&record[1], line)?;
        let end = parse_date(&record[2], line)?;
        if end < start {
            return Err(malformed(line, "window ends before it starts"));
        }
        let target = parse_code(&record[3], line)?;
        let day = parse_date(&record[4], line)?;
        let value: i64 = record[5]
            .parse()
            .map_err(|_| malformed(line, format!("bad value {:?}", &record[5])))?;
        if !(0..=100).contains(&value) {
            return Err(malformed(line, format!("value {value} outside 0..=100")));
        }
        if day < start || day > end {
            return Err(IngestError::LengthMismatch {
                source_country: source,
                target,
                start,
                end,
                detail: format!("day {day} falls outside the declared window"),
            });
        }
        let offset = (day - start).num_days() as usize;
        match grouped
            .entry((source, start, end))
            .or_default()
            .entry(target)
            .or_default()
            .entry(offset)
        {
            Entry::Vacant(slot) => {
                slot.insert(value as u8);
            }
            Entry::Occupied(_) => {
                return Err(malformed(line, format!("duplicate day {day} for {source}->{target}")));
            }
        }
    }
    let windows = grouped
        .into_iter()
        .map(|((source, start_date, end_date), targets)| {
            let days = (end_date - start_date).num_days() as usize + 1;
            let values = targets
                .into_iter()
                .map(|(target, by_offset)| {
                    let mut series = vec![0u8; days];
                    for (offset, v) in by_offset {
                        series[offset] = v;
                    }
                    (target, series)
                })
                .collect();
            TrendsWindow {
                source,
                start_date,
                end_date,
                values,
            }
        })
        .collect();
    Ok(windows)
}

/// Serialize windows in the same CSV schema `load_trends_windows` reads.
/// Zero-volume days are written explicitly so files are self-describing.
pub fn write_trends_windows(path: &Path, windows: &[TrendsWindow]) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["source", "window_start", "window_end", "target", "day", "value"])
        .map_err(|e| malformed(0, e.to_string()))?;
    for window in windows {
        for (target, series) in &window.values {
            for (offset, value) in series.iter().enumerate() {
                let day = window.start_date + chrono::Duration::days(offset as i64);
                w.write_record([
                    window.source.to_string(),
                    window.start_date.format("%Y-%m-%d").to_string(),
                    window.end_date.format("%Y-%m-%d").to_string(),
                    target.to_string(),
                    day.format("%Y-%m-%d").to_string(),
                    value.to_string(),
                ])
                .map_err(|e| malformed(0, e.to_string()))?;
            }
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Load the country -> region map.
pub fn load_region_map(path: &Path) -> Result<RegionMap, IngestError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    expect_header(&mut reader, &["country", "region"])?;
    let mut map = RegionMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(0, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != 2 {
            return Err(malformed(line, format!("expected 2 fields, got {}", record.len())));
        }
        let country = parse_code(&record[0], line)?;
        let region: Region = record[1].parse().map_err(|_| IngestError::UnknownRegionLabel {
            line,
            label: record[1].to_string(),
        })?;
        if map.insert(country, region).is_some() {
            return Err(malformed(line, format!("duplicate region entry for {country}")));
        }
    }
    Ok(map)
}

/// Serialize a region map in the schema `load_region_map` reads.
pub fn write_region_map(path: &Path, map: &RegionMap) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["country", "region"])
        .map_err(|e| malformed(0, e.to_string()))?;
    for (country, region) in map {
        w.write_record([country.to_string(), region.to_string()])
            .map_err(|e| malformed(0, e.to_string()))?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Load a whitespace-separated embedding table. Words are lowercased; the
/// first row fixes the dimension.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, IngestError> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let mut table: Option<EmbeddingTable> = None;
    for (idx, row) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        if row.trim().is_empty() {
            continue;
        }
        let mut fields = row.split_whitespace();
        let word = fields.next().unwrap().to_lowercase();
        let vector: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| malformed(line, format!("bad vector component {f:?}")))
            })
            .collect::<Result<_, _>>()?;
        if vector.is_empty() {
            return Err(malformed(line, "embedding row has no vector components"));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != table.dimension {
            return Err(IngestError::DimensionMismatch {
                line,
                expected: table.dimension,
                got: vector.len(),
            });
        }
        if table.get(&word).is_some() {
            return Err(malformed(line, format!("duplicate word {word:?}")));
        }
        table.insert(&word, vector);
    }
    Ok(table.unwrap_or_else(|| EmbeddingTable::new(0)))
}

/// Write one stitched daily series per row: `source,target,date,value`.
pub fn write_series_csv(path: &Path, series: &[crate::stitch::Series]) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["source", "target", "date", "value"])
        .map_err(|e| malformed(0, e.to_string()))?;
    for s in series {
        for (offset, value) in s.values.iter().enumerate() {
            let day = s.start_date + chrono::Duration::days(offset as i64);
            w.write_record([
                s.source.to_string(),
                s.target.to_string(),
                day.format("%Y-%m-%d").to_string(),
                value.to_string(),
            ])
            .map_err(|e| malformed(0, e.to_string()))?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Plain text file writer used by the pipeline for small artifacts.
pub fn write_text(path: &Path, content: &str) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(content.as_bytes()).map_err(io_err)?;
    Ok(())
}
