//! Census of the 13 connected directed triads and their Z-scores against a
//! degree-preserving randomized ensemble (repeated double-edge swaps).

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::country::CountryCode;
use crate::net::AttentionNetwork;
use crate::rng::stream_rng;

/// Canonical order of the connected triad classes. 030T is the
/// feed-forward loop, 030C the cyclic triad, 300 the complete one.
pub const TRIAD_CLASSES: [&str; 13] = [
    "021D", "021U", "021C", "111D", "111U", "030T", "030C", "201", "120D", "120U", "120C", "210",
    "300",
];

pub const DEFAULT_SWAPS_PER_EDGE: usize = 10;
pub const DEFAULT_ENSEMBLE_SIZE: usize = 1000;

/// Tricode lookup: the 6 possible arcs among an ordered node triple
/// (v,u,w) form a 6-bit code (v→u=1, u→v=2, v→w=4, w→v=8, u→w=16,
/// w→u=32) mapping to one of the 16 triad isomorphism classes, here
/// 1-indexed with 1=003 (empty) .. 16=300. Verified exhaustively against
/// a permutation-canonicalization oracle in the tests.
const TRICODES: [u8; 64] = [
    1, 2, 2, 3, 2, 4, 6, 8, 2, 6, 5, 7, 3, 8, 7, 11, 2, 6, 4, 8, 5, 9, 9, 13, 6, 10, 9, 14, 7, 14,
    12, 15, 2, 5, 6, 7, 6, 9, 10, 14, 4, 9, 9, 12, 8, 13, 14, 15, 3, 7, 8, 11, 7, 12, 14, 15, 8,
    14, 13, 15, 11, 15, 15, 16,
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TriadCensus {
    /// Counts indexed per TRIAD_CLASSES.
    pub counts: [u64; 13],
}

impl TriadCensus {
    pub fn get(&self, class: &str) -> Option<u64> {
        TRIAD_CLASSES
            .iter()
            .position(|&c| c == class)
            .map(|i| self.counts[i])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotifZScores {
    /// Z per class; None marks an undefined score (degenerate ensemble
    /// whose mean differs from the real count).
    pub z: [Option<f64>; 13],
    pub real: [u64; 13],
    pub mean_rand: [f64; 13],
    pub std_rand: [f64; 13],
    pub ensemble_size: usize,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MotifsError {
    #[error("degree-preserving randomization needs at least 2 edges, got {0}")]
    TooFewEdges(usize),
    #[error("ensemble size must be at least 2, got {0}")]
    EnsembleTooSmall(usize),
}

/// Classifies every connected induced 3-node subgraph. Weights are
/// ignored; only arc presence matters. Node-ordered neighbor-merge
/// enumeration touches each connected triple exactly once, skipping the
/// O(n³) scan over mostly empty triples.
pub fn triad_census(n: &AttentionNetwork) -> TriadCensus {
    let idx = n.index();
    let nn = idx.len();
    let mut out_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nn];
    let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nn];
    for (v, edges) in idx.out_adj.iter().enumerate() {
        for &(w, _) in edges {
            out_sets[v].insert(w);
            nbrs[v].insert(w);
            nbrs[w].insert(v);
        }
    }
    let mut counts = [0u64; 13];
    for v in 0..nn {
        for &u in nbrs[v].iter().filter(|&&u| u > v) {
            let third: BTreeSet<usize> = nbrs[v]
                .union(&nbrs[u])
                .copied()
                .filter(|&w| w != v && w != u)
                .collect();
            for &w in &third {
                // Count each triple once: from its lowest adjacent pair.
                if w > u || (v < w && w < u && !nbrs[v].contains(&w)) {
                    let mut code = 0usize;
                    if out_sets[v].contains(&u) {
                        code |= 1;
                    }
                    if out_sets[u].contains(&v) {
                        code |= 2;
                    }
                    if out_sets[v].contains(&w) {
                        code |= 4;
                    }
                    if out_sets[w].contains(&v) {
                        code |= 8;
                    }
                    if out_sets[u].contains(&w) {
                        code |= 16;
                    }
                    if out_sets[w].contains(&u) {
                        code |= 32;
                    }
                    let class = TRICODES[code] as usize;
                    debug_assert!(class >= 4, "enumerated triple must be connected");
                    counts[class - 4] += 1;
                }
            }
        }
    }
    TriadCensus { counts }
}

fn randomize_with<R: Rng>(
    n: &AttentionNetwork,
    swaps_per_edge: usize,
    rng: &mut R,
) -> Result<AttentionNetwork, MotifsError> {
    let mut edges: Vec<(CountryCode, CountryCode, f64)> = n.edges().collect();
    let m = edges.len();
    if m < 2 {
        return Err(MotifsError::TooFewEdges(m));
    }
    let mut present: BTreeSet<(CountryCode, CountryCode)> =
        edges.iter().map(|&(s, t, _)| (s, t)).collect();
    for _ in 0..swaps_per_edge.saturating_mul(m) {
        let i = rng.gen_range(0..m);
        let j = rng.gen_range(0..m);
        if i == j {
            continue;
        }
        let (a, b, _) = edges[i];
        let (c, d, _) = edges[j];
        // Target exchange (a,b),(c,d) -> (a,d),(c,b); reject self-loops
        // and arcs that already exist.
        if a == d || c == b || present.contains(&(a, d)) || present.contains(&(c, b)) {
            continue;
        }
        present.remove(&(a, b));
        present.remove(&(c, d));
        present.insert((a, d));
        present.insert((c, b));
        edges[i].1 = d;
        edges[j].1 = b;
    }
    let mut out = AttentionNetwork::new(n.layer, n.scope);
    for node in n.nodes() {
        out.add_node(node);
    }
    for &(s, t, w) in &edges {
        out.bump_edge(s, t, w);
    }
    Ok(out)
}

/// One degree-preserving shuffle of the arc set: `swaps_per_edge × m`
/// attempted double-edge swaps, each keeping every node's in- and
/// out-degree. Weights ride along with their source slot; the census
/// ignores them anyway.
pub fn randomize_degree_preserving(
    n: &AttentionNetwork,
    swaps_per_edge: usize,
    seed: u64,
) -> Result<AttentionNetwork, MotifsError> {
    randomize_with(n, swaps_per_edge, &mut crate::rng::rng(seed))
}

/// Triad Z-scores against the degree-preserving null ensemble. Sample i
/// draws from its own RNG stream derived from (seed, i), so the result
/// does not depend on how samples are scheduled across workers.
pub fn motif_zscores(
    n: &AttentionNetwork,
    ensemble_size: usize,
    seed: u64,
) -> Result<MotifZScores, MotifsError> {
    if ensemble_size < 2 {
        return Err(MotifsError::EnsembleTooSmall(ensemble_size));
    }
    if n.edge_count() < 2 {
        return Err(MotifsError::TooFewEdges(n.edge_count()));
    }
    let real = triad_census(n);
    let samples: Vec<TriadCensus> = (0..ensemble_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64 + 1);
            let shuffled = randomize_with(n, DEFAULT_SWAPS_PER_EDGE, &mut rng)
                .expect("edge count checked above");
            triad_census(&shuffled)
        })
        .collect();

    let mut mean_rand = [0.0; 13];
    let mut std_rand = [0.0; 13];
    let mut z = [None; 13];
    for k in 0..13 {
        let vals: Vec<f64> = samples.iter().map(|c| c.counts[k] as f64).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (vals.len() - 1) as f64;
        let std = var.sqrt();
        mean_rand[k] = mean;
        std_rand[k] = std;
        z[k] = if std > 0.0 {
            Some((real.counts[k] as f64 - mean) / std)
        } else if real.counts[k] as f64 == mean {
            Some(0.0)
        } else {
            None
        };
    }
    Ok(MotifZScores {
        z,
        real: real.counts,
        mean_rand,
        std_rand,
        ensemble_size,
        seed,
    })
}
