//! Topic inference for co-mentioned phrases, and a country's coverage topic.
//!
//! Embeddings place the eleven topic seed words on the unit circle with
//! related vocabulary nearby; phrases land on the topic whose seed vector
//! is closest in cosine.

use attnet::country::CountryCode;
use attnet::ingest::{AttentionEvent, EmbeddingTable};
use attnet::topics::{country_coverage_topic, coverage_by_source, infer_topic, TOPIC_LABELS};
use chrono::NaiveDate;

fn main() {
    // Topic seeds every 0.28 radians; related words a small angle away.
    let mut emb = EmbeddingTable::new(2);
    let mut put = |word: &str, angle: f64| {
        emb.insert(word, vec![angle.cos(), angle.sin()]);
    };
    for (i, label) in TOPIC_LABELS.iter().enumerate() {
        put(label, 0.28 * i as f64);
    }
    let politics = 0.28 * 4.0;
    let sports = 0.28 * 6.0;
    let travel = 0.28 * 9.0;
    put("election", politics + 0.05);
    put("referendum", politics - 0.04);
    put("senate", politics + 0.06);
    put("olympics", sports - 0.05);
    put("striker", sports + 0.04);
    put("visa", travel + 0.05);
    put("flight", travel - 0.06);

    println!("phrase inference:");
    for phrase in [
        "election",
        "referendum results",
        "olympics opening",
        "visa rules for flight crews",
        "zzz unseen words",
    ] {
        let label = infer_topic(phrase, &emb).unwrap();
        println!("  {phrase:<28} -> {}", label.as_str());
    }

    // What three source countries co-mention when covering GB.
    let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
    let c = |s: &str| CountryCode::new(s).unwrap();
    let event = |source: &str, date: &str, mentions: &[&str]| AttentionEvent {
        date: d(date),
        source: c(source),
        target: c("GB"),
        count: 3,
        co_mentions: mentions.iter().map(|m| m.to_string()).collect(),
    };
    let events = vec![
        event("US", "2016-06-20", &["referendum", "election"]),
        event("US", "2016-06-21", &["referendum", "senate"]),
        event("FR", "2016-06-20", &["referendum"]),
        event("FR", "2016-06-22", &["election", "striker"]),
        event("JP", "2016-06-21", &["olympics", "striker"]),
    ];

    println!();
    println!("coverage of GB by source:");
    let per_source = coverage_by_source(&events, c("GB"), &emb).unwrap();
    for (source, label) in &per_source {
        println!("  {source} -> {}", label.as_str());
    }
    let overall = country_coverage_topic(&events, c("GB"), &emb).unwrap();
    println!("modal coverage topic for GB: {}", overall.as_str());
}
