//! Topic inference for co-mentioned phrases by embedding similarity, and
//! the per-country coverage topic (modal topic across source countries).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::country::CountryCode;
use crate::ingest::{AttentionEvent, EmbeddingTable};

/// The closed topic set, in lexicographic order (the tie-break order).
pub const TOPIC_LABELS: [&str; 11] = [
    "arts", "business", "food", "health", "politics", "science", "sports", "style", "tech",
    "travel", "world",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TopicLabel {
    Arts,
    Business,
    Food,
    Health,
    Politics,
    Science,
    Sports,
    Style,
    Tech,
    Travel,
    World,
    Unknown,
}

impl TopicLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TopicLabel::Arts => "arts",
            TopicLabel::Business => "business",
            TopicLabel::Food => "food",
            TopicLabel::Health => "health",
            TopicLabel::Politics => "politics",
            TopicLabel::Science => "science",
            TopicLabel::Sports => "sports",
            TopicLabel::Style => "style",
            TopicLabel::Tech => "tech",
            TopicLabel::Travel => "travel",
            TopicLabel::World => "world",
            TopicLabel::Unknown => "unknown",
        }
    }

    fn from_index(i: usize) -> TopicLabel {
        [
            TopicLabel::Arts,
            TopicLabel::Business,
            TopicLabel::Food,
            TopicLabel::Health,
            TopicLabel::Politics,
            TopicLabel::Science,
            TopicLabel::Sports,
            TopicLabel::Style,
            TopicLabel::Tech,
            TopicLabel::Travel,
            TopicLabel::World,
        ][i]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopicsError {
    #[error("cannot infer a topic for an empty phrase")]
    EmptyPhrase,
    #[error("no event with in-vocabulary co-mentions targets {0}")]
    NoCoverage(CountryCode),
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na * nb))
    }
}

/// Nearest topic by cosine between the phrase vector (mean of
/// in-vocabulary token vectors, case-insensitive) and each topic word's
/// own vector. All tokens out of vocabulary gives Unknown; cosine ties go
/// to the lexicographically smallest topic name.
pub fn infer_topic(phrase: &str, emb: &EmbeddingTable) -> Result<TopicLabel, TopicsError> {
    if phrase.trim().is_empty() {
        return Err(TopicsError::EmptyPhrase);
    }
    let lowered = phrase.to_lowercase();
    let mut acc = vec![0.0f64; emb.dimension];
    let mut hits = 0usize;
    for token in lowered.split_whitespace() {
        if let Some(vector) = emb.get(token) {
            for (a, v) in acc.iter_mut().zip(vector) {
                *a += v;
            }
            hits += 1;
        }
    }
    if hits == 0 {
        return Ok(TopicLabel::Unknown);
    }
    for a in &mut acc {
        *a /= hits as f64;
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, label) in TOPIC_LABELS.iter().enumerate() {
        let Some(seed) = emb.get(label) else { continue };
        let Some(sim) = cosine(&acc, seed) else { continue };
        // Strict inequality keeps the first (smallest) name on ties.
        if best.map_or(true, |(s, _)| sim > s) {
            best = Some((sim, i));
        }
    }
    Ok(best.map_or(TopicLabel::Unknown, |(_, i)| TopicLabel::from_index(i)))
}

fn modal(counts: &BTreeMap<TopicLabel, usize>) -> Option<TopicLabel> {
    counts
        .iter()
        .max_by(|a, b| {
            a.1.cmp(b.1)
                // More votes wins; on ties the smaller name (reversed so
                // max_by picks it).
                .then_with(|| b.0.as_str().cmp(a.0.as_str()))
        })
        .map(|(&label, _)| label)
}

/// Modal inferred topic of each source country's co-mentions toward
/// `target`. Sources whose co-mentions are all unknown are dropped.
pub fn coverage_by_source(
    events: &[AttentionEvent],
    target: CountryCode,
    emb: &EmbeddingTable,
) -> Result<BTreeMap<CountryCode, TopicLabel>, TopicsError> {
    let mut per_source: BTreeMap<CountryCode, BTreeMap<TopicLabel, usize>> = BTreeMap::new();
    for event in events.iter().filter(|e| e.target == target) {
        let counts = per_source.entry(event.source).or_default();
        for phrase in &event.co_mentions {
            match infer_topic(phrase, emb) {
                Ok(TopicLabel::Unknown) | Err(TopicsError::EmptyPhrase) => {}
                Ok(label) => *counts.entry(label).or_default() += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(per_source
        .into_iter()
        .filter_map(|(source, counts)| modal(&counts).map(|label| (source, label)))
        .collect())
}

/// The topic a country is covered under: each source country votes with
/// its modal co-mention topic, and the modal vote wins. Ties at both
/// stages go to the lexicographically smallest name.
pub fn country_coverage_topic(
    events: &[AttentionEvent],
    target: CountryCode,
    emb: &EmbeddingTable,
) -> Result<TopicLabel, TopicsError> {
    let by_source = coverage_by_source(events, target, emb)?;
    let mut votes: BTreeMap<TopicLabel, usize> = BTreeMap::new();
    for label in by_source.values() {
        *votes.entry(*label).or_default() += 1;
    }
    modal(&votes).ok_or(TopicsError::NoCoverage(target))
}

/// Media events restricted to one topic: an event is kept when the modal
/// inferred topic of its co-mentions equals `topic`. Events with no
/// in-vocabulary co-mentions never match.
pub fn filter_events_by_topic(
    events: &[AttentionEvent],
    topic: TopicLabel,
    emb: &EmbeddingTable,
) -> Vec<AttentionEvent> {
    events
        .iter()
        .filter(|event| {
            let mut counts: BTreeMap<TopicLabel, usize> = BTreeMap::new();
            for phrase in &event.co_mentions {
                if let Ok(label) = infer_topic(phrase, emb) {
                    if label != TopicLabel::Unknown {
                        *counts.entry(label).or_default() += 1;
                    }
                }
            }
            modal(&counts) == Some(topic)
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn cc(s: &str) -> CountryCode {
        CountryCode::new(s).unwrap()
    }

    /// Topic words on the unit circle at angle 0.28·k in lexicographic
    /// order, so hand cosine arithmetic decides every case.
    fn fixture_table() -> EmbeddingTable {
        let mut emb = EmbeddingTable::new(2);
        for (k, label) in TOPIC_LABELS.iter().enumerate() {
            let theta = 0.28 * k as f64;
            emb.insert(label, vec![theta.cos(), theta.sin()]);
        }
        // visa sits 0.05 rad past travel (index 9), well clear of tech.
        let visa: f64 = 0.28 * 9.0 + 0.05;
        emb.insert("visa", vec![visa.cos(), visa.sin()]);
        let election: f64 = 0.28 * 4.0 + 0.1;
        emb.insert("election", vec![election.cos(), election.sin()]);
        emb
    }

    #[test]
    fn visa_lands_on_travel() {
        let emb = fixture_table();
        assert_eq!(infer_topic("visa", &emb).unwrap(), TopicLabel::Travel);
        assert_eq!(infer_topic("Visa", &emb).unwrap(), TopicLabel::Travel);
    }

    #[test]
    fn topic_word_maps_to_itself() {
        let emb = fixture_table();
        for (k, label) in TOPIC_LABELS.iter().enumerate() {
            assert_eq!(
                infer_topic(label, &emb).unwrap(),
                TopicLabel::from_index(k),
                "{label}"
            );
        }
    }

    #[test]
    fn multiword_phrases_average_their_vectors() {
        let emb = fixture_table();
        // Mean of visa (2.57 rad) and election (1.22 rad) points at
        // 1.895 rad; nearest topic angle is sports at 6*0.28 = 1.68
        // (0.215 away) vs style at 1.96 (0.065 away): style wins.
        let visa: f64 = 0.28 * 9.0 + 0.05;
        let election: f64 = 0.28 * 4.0 + 0.1;
        let mean = ((visa + election) / 2.0 - 0.28 * 7.0).abs();
        assert!(mean < 0.28 / 2.0, "fixture drifted: {mean}");
        assert_eq!(
            infer_topic("visa election", &emb).unwrap(),
            TopicLabel::Style
        );
        // OOV tokens are dropped, not averaged as zeros.
        assert_eq!(
            infer_topic("zzzunknown visa", &emb).unwrap(),
            TopicLabel::Travel
        );
    }

    #[test]
    fn all_oov_is_unknown_and_empty_is_an_error() {
        let emb = fixture_table();
        assert_eq!(infer_topic("qqq xyz", &emb).unwrap(), TopicLabel::Unknown);
        assert_eq!(infer_topic("   ", &emb).unwrap_err(), TopicsError::EmptyPhrase);
        assert_eq!(infer_topic("", &emb).unwrap_err(), TopicsError::EmptyPhrase);
    }

    #[test]
    fn exact_cosine_tie_takes_the_smaller_name() {
        let mut emb = EmbeddingTable::new(2);
        emb.insert("arts", vec![1.0, 0.0]);
        emb.insert("business", vec![0.0, 1.0]);
        // Remaining topics point away from the probe.
        for label in &TOPIC_LABELS[2..] {
            emb.insert(label, vec![-1.0, -1.0]);
        }
        emb.insert("probe", vec![0.5, 0.5]);
        assert_eq!(infer_topic("probe", &emb).unwrap(), TopicLabel::Arts);
    }

    proptest! {
        #[test]
        fn casing_and_whitespace_do_not_matter(
            upper_mask in proptest::collection::vec(any::<bool>(), 4),
            pad in 0usize..4,
        ) {
            let emb = fixture_table();
            let word = "visa";
            let mangled: String = word
                .chars()
                .zip(upper_mask.iter().cycle())
                .map(|(c, &up)| if up { c.to_ascii_uppercase() } else { c })
                .collect();
            let spaced = format!("{}{}{}", " ".repeat(pad), mangled, " ".repeat(pad));
            prop_assert_eq!(infer_topic(&spaced, &emb).unwrap(), TopicLabel::Travel);
        }

        #[test]
        fn uniform_scaling_never_changes_the_label(scale in 0.05f64..20.0) {
            let base = fixture_table();
            let mut scaled = EmbeddingTable::new(2);
            for label in TOPIC_LABELS {
                let v = base.get(label).unwrap();
                scaled.insert(label, v.iter().map(|x| x * scale).collect());
            }
            let v = base.get("visa").unwrap();
            scaled.insert("visa", v.iter().map(|x| x * scale).collect());
            prop_assert_eq!(
                infer_topic("visa", &scaled).unwrap(),
                infer_topic("visa", &base).unwrap()
            );
        }
    }

    fn event(source: &str, target: &str, mentions: &[&str]) -> AttentionEvent {
        AttentionEvent {
            date: NaiveDate::from_ymd_opt(2016, 6, 1).unwrap(),
            source: cc(source),
            target: cc(target),
            count: 1,
            co_mentions: mentions.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn unanimous_sources_give_their_topic() {
        let emb = fixture_table();
        let events = vec![
            event("US", "KR", &["election"]),
            event("FR", "KR", &["politics", "election"]),
            event("DE", "KR", &["election", "zzz"]),
        ];
        assert_eq!(
            country_coverage_topic(&events, cc("KR"), &emb).unwrap(),
            TopicLabel::Politics
        );
    }

    #[test]
    fn source_split_breaks_lexicographically() {
        let emb = fixture_table();
        let events = vec![
            event("US", "KR", &["visa"]),
            event("FR", "KR", &["visa"]),
            event("DE", "KR", &["election"]),
            event("JP", "KR", &["election"]),
        ];
        // 2 travel vs 2 politics: politics < travel.
        assert_eq!(
            country_coverage_topic(&events, cc("KR"), &emb).unwrap(),
            TopicLabel::Politics
        );
    }

    #[test]
    fn per_source_votes_are_modal_over_mentions() {
        let emb = fixture_table();
        let events = vec![
            event("US", "KR", &["visa", "visa", "election"]),
            event("US", "KR", &["visa"]),
        ];
        let by_source = coverage_by_source(&events, cc("KR"), &emb).unwrap();
        assert_eq!(by_source[&cc("US")], TopicLabel::Travel);
    }

    #[test]
    fn uncovered_target_errors() {
        let emb = fixture_table();
        let events = vec![event("US", "KR", &["visa"])];
        assert_eq!(
            country_coverage_topic(&events, cc("BR"), &emb).unwrap_err(),
            TopicsError::NoCoverage(cc("BR"))
        );
        // Events exist but every mention is out of vocabulary.
        let oov = vec![event("US", "BR", &["zzz"])];
        assert_eq!(
            country_coverage_topic(&oov, cc("BR"), &emb).unwrap_err(),
            TopicsError::NoCoverage(cc("BR"))
        );
    }

    #[test]
    fn coverage_ignores_event_order() {
        let emb = fixture_table();
        let mut events = vec![
            event("US", "KR", &["visa"]),
            event("FR", "KR", &["election"]),
            event("DE", "KR", &["visa"]),
        ];
        let a = country_coverage_topic(&events, cc("KR"), &emb).unwrap();
        events.reverse();
        let b = country_coverage_topic(&events, cc("KR"), &emb).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, TopicLabel::Travel);
    }

    #[test]
    fn topic_filter_keeps_matching_events() {
        let emb = fixture_table();
        let events = vec![
            event("US", "KR", &["visa", "visa"]),
            event("US", "KR", &["election"]),
            event("US", "KR", &["zzz"]),
        ];
        let travel = filter_events_by_topic(&events, TopicLabel::Travel, &emb);
        assert_eq!(travel.len(), 1);
        assert_eq!(travel[0].co_mentions, vec!["visa", "visa"]);
        let unknown = filter_events_by_topic(&events, TopicLabel::Unknown, &emb);
        assert!(unknown.is_empty());
    }
}
