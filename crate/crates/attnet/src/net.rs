//! Attention network construction and the disparity-filter backbone.
//!
//! Both layers use the same representation: a weighted digraph over country
//! codes with no self-loops and strictly positive weights. Daily networks
//! come straight from the inputs (summed article counts, stitched search
//! volumes); the aggregate of a day range is the edge-wise sum over days.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use thiserror::Error;

use crate::country::CountryCode;
use crate::ingest::AttentionEvent;
use crate::stitch::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Layer {
    Media,
    Public,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Media => "media",
            Layer::Public => "public",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateScope {
    Day(NaiveDate),
    Span(NaiveDate, NaiveDate),
    Empty,
}

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("series {source_country}->{target} does not share the common period")]
    PeriodMismatch {
        source_country: CountryCode,
        target: CountryCode,
    },
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
}

/// Weighted digraph for one attention layer. Out- and in-adjacency are both
/// kept so per-direction algorithms stay linear; iteration order over nodes
/// and edges is always the code order, which keeps every downstream artifact
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionNetwork {
    pub layer: Layer,
    pub scope: DateScope,
    out: BTreeMap<CountryCode, BTreeMap<CountryCode, f64>>,
    inc: BTreeMap<CountryCode, BTreeMap<CountryCode, f64>>,
    nodes: BTreeSet<CountryCode>,
}

impl AttentionNetwork {
    pub fn new(layer: Layer, scope: DateScope) -> Self {
        AttentionNetwork {
            layer,
            scope,
            out: BTreeMap::new(),
            inc: BTreeMap::new(),
            nodes: BTreeSet::new(),
        }
    }

    pub fn add_node(&mut self, node: CountryCode) {
        self.nodes.insert(node);
    }

    /// Insert or increase an edge. Self-loops and non-positive increments
    /// are contract violations at this level; callers drop them beforehand.
    pub fn bump_edge(&mut self, source: CountryCode, target: CountryCode, weight: f64) {
        assert_ne!(source, target, "self-loop {source}->{target}");
        assert!(weight > 0.0, "non-positive weight {weight} on {source}->{target}");
        self.nodes.insert(source);
        self.nodes.insert(target);
        *self.out.entry(source).or_default().entry(target).or_insert(0.0) += weight;
        *self.inc.entry(target).or_default().entry(source).or_insert(0.0) += weight;
    }

    pub fn nodes(&self) -> impl Iterator<Item = CountryCode> + '_ {
        self.nodes.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains_node(&self, node: CountryCode) -> bool {
        self.nodes.contains(&node)
    }

    pub fn edge_count(&self) -> usize {
        self.out.values().map(|m| m.len()).sum()
    }

    pub fn weight(&self, source: CountryCode, target: CountryCode) -> Option<f64> {
        self.out.get(&source).and_then(|m| m.get(&target)).copied()
    }

    /// Edges in (source, target) code order.
    pub fn edges(&self) -> impl Iterator<Item = (CountryCode, CountryCode, f64)> + '_ {
        self.out
            .iter()
            .flat_map(|(s, m)| m.iter().map(move |(t, w)| (*s, *t, *w)))
    }

    pub fn out_edges(&self, source: CountryCode) -> impl Iterator<Item = (CountryCode, f64)> + '_ {
        self.out
            .get(&source)
            .into_iter()
            .flat_map(|m| m.iter().map(|(t, w)| (*t, *w)))
    }

    pub fn in_edges(&self, target: CountryCode) -> impl Iterator<Item = (CountryCode, f64)> + '_ {
        self.inc
            .get(&target)
            .into_iter()
            .flat_map(|m| m.iter().map(|(s, w)| (*s, *w)))
    }

    pub fn out_degree(&self, node: CountryCode) -> usize {
        self.out.get(&node).map_or(0, |m| m.len())
    }

    pub fn in_degree(&self, node: CountryCode) -> usize {
        self.inc.get(&node).map_or(0, |m| m.len())
    }

    pub fn out_strength(&self, node: CountryCode) -> f64 {
        self.out.get(&node).map_or(0.0, |m| m.values().sum())
    }

    pub fn in_strength(&self, node: CountryCode) -> f64 {
        self.inc.get(&node).map_or(0.0, |m| m.values().sum())
    }

    /// Dense-index snapshot for the graph algorithms. Index order is code
    /// order.
    pub fn index(&self) -> NetIndex {
        let codes: Vec<CountryCode> = self.nodes.iter().copied().collect();
        let pos: BTreeMap<CountryCode, usize> =
            codes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut out_adj = vec![Vec::new(); codes.len()];
        let mut in_adj = vec![Vec::new(); codes.len()];
        for (s, t, w) in self.edges() {
            out_adj[pos[&s]].push((pos[&t], w));
            in_adj[pos[&t]].push((pos[&s], w));
        }
        NetIndex {
            codes,
            out_adj,
            in_adj,
        }
    }
}

/// Vec-indexed adjacency view of an [`AttentionNetwork`].
#[derive(Debug, Clone)]
pub struct NetIndex {
    pub codes: Vec<CountryCode>,
    pub out_adj: Vec<Vec<(usize, f64)>>,
    pub in_adj: Vec<Vec<(usize, f64)>>,
}

impl NetIndex {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// The two aggregate layers plus, when retained, their day-indexed sources.
#[derive(Debug, Clone)]
pub struct MultiplexAttention {
    pub media: AttentionNetwork,
    pub public: AttentionNetwork,
    pub daily_media: Option<BTreeMap<NaiveDate, AttentionNetwork>>,
    pub daily_public: Option<BTreeMap<NaiveDate, AttentionNetwork>>,
}

#[derive(Debug, Clone, Copy)]
pub struct BackboneParams {
    pub alpha: f64,
}

impl Default for BackboneParams {
    fn default() -> Self {
        BackboneParams { alpha: 0.05 }
    }
}

/// One media network per day: edge weight is the summed article count of
/// that day's events, self-loops dropped, zero-count totals yielding no edge.
pub fn build_daily_media(events: &[AttentionEvent]) -> BTreeMap<NaiveDate, AttentionNetwork> {
    let mut sums: BTreeMap<NaiveDate, BTreeMap<(CountryCode, CountryCode), u64>> = BTreeMap::new();
    for e in events {
        if e.source == e.target {
            continue;
        }
        *sums.entry(e.date).or_default().entry((e.source, e.target)).or_insert(0) += e.count;
    }
    sums.into_iter()
        .map(|(day, edges)| {
            let mut net = AttentionNetwork::new(Layer::Media, DateScope::Day(day));
            for ((s, t), count) in edges {
                if count > 0 {
                    net.bump_edge(s, t, count as f64);
                }
            }
            (day, net)
        })
        .collect()
}

/// One public network per day from stitched series: edge weight is the
/// day's volume, zero volumes (including gap padding) yielding no edge.
pub fn build_daily_public(
    series: &[Series],
) -> Result<BTreeMap<NaiveDate, AttentionNetwork>, NetError> {
    let mut daily = BTreeMap::new();
    let Some(first) = series.first() else {
        return Ok(daily);
    };
    for s in series {
        if s.start_date != first.start_date || s.values.len() != first.values.len() {
            return Err(NetError::PeriodMismatch {
                source_country: s.source,
                target: s.target,
            });
        }
    }
    for offset in 0..first.values.len() {
        let day = first.start_date + chrono::Duration::days(offset as i64);
        let mut net = AttentionNetwork::new(Layer::Public, DateScope::Day(day));
        for s in series {
            if s.source != s.target && s.values[offset] > 0.0 {
                net.bump_edge(s.source, s.target, s.values[offset]);
            }
        }
        if net.node_count() > 0 {
            daily.insert(day, net);
        }
    }
    Ok(daily)
}

/// Superimpose daily networks: a node or edge is present if present on any
/// day, and aggregate weight is the sum of daily weights.
pub fn aggregate(daily: &BTreeMap<NaiveDate, AttentionNetwork>) -> AttentionNetwork {
    let layer = daily.values().next().map_or(Layer::Media, |n| n.layer);
    let scope = match (daily.keys().next(), daily.keys().next_back()) {
        (Some(&a), Some(&b)) => DateScope::Span(a, b),
        _ => DateScope::Empty,
    };
    let mut agg = AttentionNetwork::new(layer, scope);
    for net in daily.values() {
        debug_assert_eq!(net.layer, layer);
        for node in net.nodes() {
            agg.add_node(node);
        }
        for (s, t, w) in net.edges() {
            agg.bump_edge(s, t, w);
        }
    }
    agg
}

/// Disparity-filter backbone. For a node of degree k >= 2 on one side, an
/// incident edge with weight share p has p-value (1 - p)^(k-1); degree-1
/// sides never reach significance (p-value 1). An edge survives when it is
/// significant at the out-side of its source or the in-side of its target.
/// The node set is preserved; only edges are filtered.
pub fn disparity_backbone(
    n: &AttentionNetwork,
    params: BackboneParams,
) -> Result<AttentionNetwork, NetError> {
    if !(params.alpha > 0.0 && params.alpha <= 1.0) {
        return Err(NetError::BadAlpha(params.alpha));
    }
    let mut backbone = AttentionNetwork::new(n.layer, n.scope);
    for node in n.nodes() {
        backbone.add_node(node);
    }
    let out_strength: BTreeMap<CountryCode, (usize, f64)> = n
        .nodes()
        .map(|v| (v, (n.out_degree(v), n.out_strength(v))))
        .collect();
    let in_strength: BTreeMap<CountryCode, (usize, f64)> = n
        .nodes()
        .map(|v| (v, (n.in_degree(v), n.in_strength(v))))
        .collect();
    for (s, t, w) in n.edges() {
        let p_out = disparity_pvalue(w, out_strength[&s]);
        let p_in = disparity_pvalue(w, in_strength[&t]);
        if p_out < params.alpha || p_in < params.alpha {
            backbone.bump_edge(s, t, w);
        }
    }
    Ok(backbone)
}

fn disparity_pvalue(weight: f64, (degree, strength): (usize, f64)) -> f64 {
    if degree < 2 {
        return 1.0;
    }
    let share = weight / strength;
    (1.0 - share).powi(degree as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cc(s: &str) -> CountryCode {
        CountryCode::new(s).unwrap()
    }

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn event(date: &str, s: &str, t: &str, count: u64) -> AttentionEvent {
        AttentionEvent {
            date: d(date),
            source: cc(s),
            target: cc(t),
            count,
            co_mentions: vec![],
        }
    }

    #[test]
    fn media_counts_sum_per_day() {
        let daily = build_daily_media(&[
            event("2016-06-23", "FR", "GB", 2),
            event("2016-06-23", "FR", "GB", 3),
            event("2016-06-24", "FR", "GB", 7),
        ]);
        assert_eq!(daily.len(), 2);
        assert_eq!(daily[&d("2016-06-23")].weight(cc("FR"), cc("GB")), Some(5.0));
        assert_eq!(daily[&d("2016-06-24")].weight(cc("FR"), cc("GB")), Some(7.0));
    }

    #[test]
    fn self_loops_and_zero_counts_make_no_edges() {
        let daily = build_daily_media(&[
            event("2016-06-23", "US", "US", 7),
            event("2016-06-23", "FR", "GB", 0),
        ]);
        assert_eq!(daily.len(), 1);
        let net = &daily[&d("2016-06-23")];
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn empty_events_build_nothing() {
        assert!(build_daily_media(&[]).is_empty());
    }

    #[test]
    fn public_layer_takes_daily_volumes() {
        let series = vec![
            Series {
                source: cc("DZ"),
                target: cc("FR"),
                start_date: d("2016-03-07"),
                values: vec![50.0, 0.0, 12.5],
                gap: false,
            },
            Series {
                source: cc("US"),
                target: cc("KR"),
                start_date: d("2016-03-07"),
                values: vec![0.0, 30.0, 7.0],
                gap: false,
            },
        ];
        let daily = build_daily_public(&series).unwrap();
        let day0 = &daily[&d("2016-03-07")];
        assert_eq!(day0.weight(cc("DZ"), cc("FR")), Some(50.0));
        assert_eq!(day0.weight(cc("US"), cc("KR")), None);
        let day1 = &daily[&d("2016-03-08")];
        assert_eq!(day1.weight(cc("DZ"), cc("FR")), None); // zero volume
        assert_eq!(day1.weight(cc("US"), cc("KR")), Some(30.0));
    }

    #[test]
    fn public_layer_rejects_ragged_periods() {
        let series = vec![
            Series {
                source: cc("DZ"),
                target: cc("FR"),
                start_date: d("2016-03-07"),
                values: vec![1.0, 2.0],
                gap: false,
            },
            Series {
                source: cc("US"),
                target: cc("KR"),
                start_date: d("2016-03-08"),
                values: vec![1.0, 2.0],
                gap: false,
            },
        ];
        assert!(matches!(
            build_daily_public(&series),
            Err(NetError::PeriodMismatch { .. })
        ));
    }

    #[test]
    fn aggregate_sums_daily_weights() {
        let daily = build_daily_media(&[
            event("2016-06-23", "FR", "GB", 2),
            event("2016-06-24", "FR", "GB", 3),
            event("2016-06-25", "KR", "JP", 1),
        ]);
        let agg = aggregate(&daily);
        assert_eq!(agg.weight(cc("FR"), cc("GB")), Some(5.0));
        assert_eq!(agg.weight(cc("KR"), cc("JP")), Some(1.0));
        assert_eq!(agg.scope, DateScope::Span(d("2016-06-23"), d("2016-06-25")));
        assert_eq!(agg.node_count(), 4);
    }

    #[test]
    fn aggregate_of_single_day_equals_that_day() {
        let daily = build_daily_media(&[event("2016-06-23", "FR", "GB", 2)]);
        let agg = aggregate(&daily);
        let day = &daily[&d("2016-06-23")];
        assert_eq!(agg.edge_count(), day.edge_count());
        assert_eq!(agg.weight(cc("FR"), cc("GB")), day.weight(cc("FR"), cc("GB")));
    }

    #[test]
    fn aggregate_of_nothing_is_empty() {
        let agg = aggregate(&BTreeMap::new());
        assert_eq!(agg.node_count(), 0);
        assert_eq!(agg.scope, DateScope::Empty);
    }

    #[test]
    fn disparity_keeps_the_dominant_edge() {
        // Out-weights (0.7, 0.1, 0.1, 0.1) at k = 4: the strong edge has
        // p-value 0.3^3 = 0.027 < 0.05, the weak ones 0.9^3 = 0.729.
        let mut net = AttentionNetwork::new(Layer::Media, DateScope::Empty);
        net.bump_edge(cc("AA"), cc("BB"), 0.7);
        net.bump_edge(cc("AA"), cc("CC"), 0.1);
        net.bump_edge(cc("AA"), cc("DD"), 0.1);
        net.bump_edge(cc("AA"), cc("EE"), 0.1);
        // Give targets in-degree 2 with overwhelming competing weight so the
        // in-side never rescues the weak edges.
        for t in ["BB", "CC", "DD", "EE"] {
            net.bump_edge(cc("ZZ"), cc(t), 1000.0);
        }
        net.bump_edge(cc("ZZ"), cc("AA"), 1000.0);

        let backbone = disparity_backbone(&net, BackboneParams { alpha: 0.05 }).unwrap();
        assert_eq!(backbone.weight(cc("AA"), cc("BB")), Some(0.7));
        assert_eq!(backbone.weight(cc("AA"), cc("CC")), None);
        assert_eq!(backbone.weight(cc("AA"), cc("DD")), None);
        assert_eq!(backbone.weight(cc("AA"), cc("EE")), None);
    }

    #[test]
    fn degree_one_sides_are_never_significant() {
        let mut net = AttentionNetwork::new(Layer::Media, DateScope::Empty);
        net.bump_edge(cc("AA"), cc("BB"), 5.0);
        let backbone = disparity_backbone(&net, BackboneParams { alpha: 0.05 }).unwrap();
        assert_eq!(backbone.edge_count(), 0);
        assert_eq!(backbone.node_count(), 2); // nodes preserved
    }

    #[test]
    fn backbone_rejects_bad_alpha() {
        let net = AttentionNetwork::new(Layer::Media, DateScope::Empty);
        assert!(matches!(
            disparity_backbone(&net, BackboneParams { alpha: 0.0 }),
            Err(NetError::BadAlpha(_))
        ));
        assert!(matches!(
            disparity_backbone(&net, BackboneParams { alpha: 1.5 }),
            Err(NetError::BadAlpha(_))
        ));
    }

    #[test]
    fn out_side_pvalues_are_scale_invariant() {
        let mut a = AttentionNetwork::new(Layer::Media, DateScope::Empty);
        let mut b = AttentionNetwork::new(Layer::Media, DateScope::Empty);
        let weights = [(cc("BB"), 3.0), (cc("CC"), 1.0), (cc("DD"), 0.5)];
        for (t, w) in weights {
            a.bump_edge(cc("AA"), t, w);
            b.bump_edge(cc("AA"), t, w * 37.5);
        }
        for alpha in [0.01, 0.05, 0.2, 0.6] {
            let ba = disparity_backbone(&a, BackboneParams { alpha }).unwrap();
            let bb = disparity_backbone(&b, BackboneParams { alpha }).unwrap();
            let ea: Vec<_> = ba.edges().map(|(s, t, _)| (s, t)).collect();
            let eb: Vec<_> = bb.edges().map(|(s, t, _)| (s, t)).collect();
            assert_eq!(ea, eb, "alpha={alpha}");
        }
    }

    proptest! {
        #[test]
        fn backbone_is_monotone_in_alpha(
            edges in proptest::collection::vec((0u8..12, 0u8..12, 1u32..1000), 1..60),
            lo in 0.005f64..0.5,
            hi_mult in 1.0f64..10.0,
        ) {
            let mut net = AttentionNetwork::new(Layer::Media, DateScope::Empty);
            for (s, t, w) in edges {
                if s != t {
                    let s = CountryCode::new(&format!("{}{}", (b'A' + s / 12) as char, (b'A' + s % 12) as char)).unwrap();
                    let t = CountryCode::new(&format!("{}{}", (b'A' + t / 12) as char, (b'A' + t % 12) as char)).unwrap();
                    net.bump_edge(s, t, w as f64);
                }
            }
            let hi = (lo * hi_mult).min(1.0);
            let tight = disparity_backbone(&net, BackboneParams { alpha: lo }).unwrap();
            let loose = disparity_backbone(&net, BackboneParams { alpha: hi }).unwrap();
            for (s, t, w) in tight.edges() {
                prop_assert_eq!(loose.weight(s, t), Some(w));
                prop_assert_eq!(net.weight(s, t), Some(w));
            }
        }

        #[test]
        fn aggregation_is_linear_over_day_ranges(
            counts in proptest::collection::vec((0u8..6, 0u8..6, 1u64..50), 1..40),
        ) {
            let mut events = Vec::new();
            for (i, (s, t, c)) in counts.iter().enumerate() {
                if s == t {
                    continue;
                }
                let day = format!("2016-03-{:02}", 7 + (i % 10));
                let s = format!("A{}", (b'A' + s) as char);
                let t = format!("A{}", (b'A' + t) as char);
                events.push(event(&day, &s, &t, *c));
            }
            let daily = build_daily_media(&events);
            let full = aggregate(&daily);
            let cut = d("2016-03-11");
            let first: BTreeMap<_, _> = daily.iter().filter(|(&k, _)| k < cut).map(|(k, v)| (*k, v.clone())).collect();
            let second: BTreeMap<_, _> = daily.iter().filter(|(&k, _)| k >= cut).map(|(k, v)| (*k, v.clone())).collect();
            let a = aggregate(&first);
            let b = aggregate(&second);
            for (s, t, w) in full.edges() {
                let sum = a.weight(s, t).unwrap_or(0.0) + b.weight(s, t).unwrap_or(0.0);
                prop_assert!((w - sum).abs() < 1e-9);
            }
        }
    }
}
