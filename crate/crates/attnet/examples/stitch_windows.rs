//! Two overlapping search-volume windows joined onto one scale.
//!
//! The reference target ends the first window at raw 39 and starts the
//! second at raw 79, so with smoothing +1 the windows are rescaled by
//! 100/40 = 2.5 and 100/80 = 1.25, and the reference lands on exactly 100
//! at the overlap day.

use std::collections::BTreeMap;

use attnet::country::CountryCode;
use attnet::ingest::TrendsWindow;
use attnet::stitch::{stitch_windows, StitchConfig};
use chrono::NaiveDate;

fn main() {
    let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
    let c = |s: &str| CountryCode::new(s).unwrap();

    let mut w1_values: BTreeMap<CountryCode, Vec<u8>> = BTreeMap::new();
    w1_values.insert(c("US"), vec![44, 60, 71, 55, 48, 52, 41, 39]);
    w1_values.insert(c("FR"), vec![10, 12, 18, 14, 11, 13, 9, 8]);
    let w1 = TrendsWindow {
        source: c("KR"),
        start_date: d("2016-03-07"),
        end_date: d("2016-03-14"),
        values: w1_values,
    };

    let mut w2_values: BTreeMap<CountryCode, Vec<u8>> = BTreeMap::new();
    w2_values.insert(c("US"), vec![79, 82, 90, 77, 70, 74, 68, 71]);
    w2_values.insert(c("FR"), vec![17, 15, 20, 18, 13, 16, 12, 14]);
    let w2 = TrendsWindow {
        source: c("KR"),
        start_date: d("2016-03-14"),
        end_date: d("2016-03-21"),
        values: w2_values,
    };

    let cfg = StitchConfig::default();
    let outcome = stitch_windows(&w1, &w2, &cfg).unwrap();

    let overlap = w2.start_date;
    println!("source KR, reference {}, smoothing +{}", cfg.reference_target, cfg.smoothing_add);
    println!(
        "window scales: {} and {}",
        cfg.scale_top / (39 + 1) as f64,
        cfg.scale_top / (79 + 1) as f64
    );
    println!();
    println!("{:<8} {:>12} {:>12} {:>12}", "target", "day before", "overlap", "day after");
    for s in &outcome.series {
        let at = |day: NaiveDate| {
            let offset = (day - s.start_date).num_days() as usize;
            s.values[offset]
        };
        println!(
            "{:<8} {:>12.4} {:>12.4} {:>12.4}",
            s.target.to_string(),
            at(overlap - chrono::Duration::days(1)),
            at(overlap),
            at(overlap + chrono::Duration::days(1)),
        );
    }
    println!();
    for seam in &outcome.seams {
        println!("seam discrepancy at {}: {:.4}", seam.target, seam.discrepancy);
    }
}
