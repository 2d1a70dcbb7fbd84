//! Node- and network-level statistics: centralities, top-k neighbor
//! overlap, Gini concentration of out-weights, and the summary table
//! (nodes, links, mean degree, reciprocal-link clustering, assortativity,
//! largest strongly connected component, reciprocity).

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::country::CountryCode;
use crate::net::{AttentionNetwork, MultiplexAttention, NetIndex};
use crate::stats::{self, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Measure {
    Degree,
    Betweenness,
    Eigenvector,
    Closeness,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Degree,
        Measure::Betweenness,
        Measure::Eigenvector,
        Measure::Closeness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Degree => "degree",
            Measure::Betweenness => "betweenness",
            Measure::Eigenvector => "eigenvector",
            Measure::Closeness => "closeness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    In,
    Out,
    #[default]
    Total,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
            Direction::Total => "total",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub measure: Measure,
    pub values: BTreeMap<CountryCode, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSummary {
    pub n_nodes: usize,
    pub n_links: usize,
    pub mean_degree: f64,
    /// Average local clustering on the undirected reciprocal-link graph,
    /// over all nodes (degree < 2 contributes 0).
    pub clustering: f64,
    /// Degree assortativity of the reciprocal-link graph; None when there
    /// are no reciprocal edges or no degree variance across them.
    pub assortativity: Option<f64>,
    pub scc_fraction: f64,
    pub reciprocity: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty network")]
    EmptyNetwork,
    #[error("node {0} not in network")]
    UnknownNode(CountryCode),
    #[error("node {0} has no out-edges")]
    NoOutEdges(CountryCode),
    #[error("values sum to zero, Gini undefined")]
    ZeroMean,
    #[error("empty value vector")]
    EmptyInput,
    #[error("need at least {min} shared nodes, got {got}")]
    InsufficientNodes { got: usize, min: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Node centralities for one measure.
///
/// `direction` selects the strength side for degree and the path
/// orientation for harmonic closeness (In walks edges backwards; Out and
/// Total walk forwards). Betweenness always follows directed paths, and
/// eigenvector centrality is fixed as the principal left eigenvector, so
/// both ignore `direction`.
pub fn centralities(
    n: &AttentionNetwork,
    measure: Measure,
    direction: Direction,
) -> Result<CentralityVector, MetricsError> {
    if n.node_count() == 0 {
        return Err(MetricsError::EmptyNetwork);
    }
    let idx = n.index();
    let raw = match measure {
        Measure::Degree => idx
            .codes
            .iter()
            .map(|&c| match direction {
                Direction::In => n.in_strength(c),
                Direction::Out => n.out_strength(c),
                Direction::Total => n.in_strength(c) + n.out_strength(c),
            })
            .collect(),
        Measure::Betweenness => betweenness(&idx),
        Measure::Closeness => harmonic_closeness(&idx, direction),
        Measure::Eigenvector => left_eigenvector(&idx),
    };
    Ok(CentralityVector {
        measure,
        values: idx.codes.iter().copied().zip(raw).collect(),
    })
}

/// Brandes accumulation over BFS shortest paths of the unweighted digraph.
fn betweenness(idx: &NetIndex) -> Vec<f64> {
    let n = idx.len();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &(w, _) in &idx.out_adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    bc
}

fn harmonic_closeness(idx: &NetIndex, direction: Direction) -> Vec<f64> {
    let n = idx.len();
    let adj: Vec<Vec<usize>> = match direction {
        Direction::In => idx.in_adj.iter().map(|a| a.iter().map(|&(u, _)| u).collect()).collect(),
        _ => idx.out_adj.iter().map(|a| a.iter().map(|&(u, _)| u).collect()).collect(),
    };
    (0..n)
        .map(|s| {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            let mut total = 0.0;
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        total += 1.0 / dist[w] as f64;
                        queue.push_back(w);
                    }
                }
            }
            total
        })
        .collect()
}

/// Principal left eigenvector of the weighted adjacency, power-iterated
/// with a small uniform restart so reducible digraphs still converge.
/// Normalized to unit Euclidean norm.
fn left_eigenvector(idx: &NetIndex) -> Vec<f64> {
    const RESTART: f64 = 1e-6;
    const TOL: f64 = 1e-12;
    const MAX_ITER: usize = 10_000;
    let n = idx.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..MAX_ITER {
        let feed = RESTART * x.iter().sum::<f64>() / n as f64;
        let mut y = vec![feed; n];
        for (v, edges) in idx.out_adj.iter().enumerate() {
            for &(w, weight) in edges {
                y[w] += weight * x[v];
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return x;
        }
        for v in &mut y {
            *v /= norm;
        }
        let delta: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        x = y;
        if delta < TOL {
            break;
        }
    }
    x
}

/// The `k` strongest out-neighbors of `node`, heaviest first, ties broken
/// by ascending country code.
pub fn topk_neighbors(
    n: &AttentionNetwork,
    node: CountryCode,
    k: usize,
) -> Result<Vec<CountryCode>, MetricsError> {
    if !n.contains_node(node) {
        return Err(MetricsError::UnknownNode(node));
    }
    let mut neighbors: Vec<(CountryCode, f64)> = n.out_edges(node).collect();
    neighbors.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(neighbors.into_iter().take(k).map(|(t, _)| t).collect())
}

/// Jaccard overlap of two neighbor sets; two empty sets count as 0.
pub fn jaccard_topk(a: &[CountryCode], b: &[CountryCode]) -> f64 {
    let sa: std::collections::BTreeSet<_> = a.iter().collect();
    let sb: std::collections::BTreeSet<_> = b.iter().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

/// Gini coefficient of a non-negative value vector:
/// G = Σᵢⱼ|xᵢ−xⱼ| / (2n²·mean). Computed via the sorted-rank identity;
/// the pairwise definition is kept as the test oracle.
pub fn gini(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = values.len() as f64;
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(MetricsError::ZeroMean);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (i + 1) as f64 * x)
        .sum();
    Ok((2.0 * weighted / (n * total)) - (n + 1.0) / n)
}

/// Gini concentration of one node's out-weights.
pub fn gini_out_weights(n: &AttentionNetwork, node: CountryCode) -> Result<f64, MetricsError> {
    let weights: Vec<f64> = n.out_edges(node).map(|(_, w)| w).collect();
    if weights.is_empty() {
        return Err(MetricsError::NoOutEdges(node));
    }
    gini(&weights)
}

/// Table-style summary of one network.
pub fn network_summary(n: &AttentionNetwork) -> NetworkSummary {
    let idx = n.index();
    let n_nodes = idx.len();
    let n_links = n.edge_count();
    let mean_degree = if n_nodes == 0 {
        0.0
    } else {
        n_links as f64 / n_nodes as f64
    };

    // Reciprocity: directed edges whose reverse exists.
    let mut reciprocal_pairs = 0usize;
    let mut recip_adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for (v, edges) in idx.out_adj.iter().enumerate() {
        for &(w, _) in edges {
            if idx.out_adj[w].iter().any(|&(u, _)| u == v) {
                reciprocal_pairs += 1;
                recip_adj[v].push(w);
            }
        }
    }
    let reciprocity = if n_links == 0 {
        0.0
    } else {
        reciprocal_pairs as f64 / n_links as f64
    };

    // Local clustering on the reciprocal-link undirected graph.
    let clustering = if n_nodes == 0 {
        0.0
    } else {
        let mut acc = 0.0;
        for v in 0..n_nodes {
            let neigh = &recip_adj[v];
            let k = neigh.len();
            if k < 2 {
                continue;
            }
            let mut closed = 0usize;
            for i in 0..k {
                for j in (i + 1)..k {
                    if recip_adj[neigh[i]].contains(&neigh[j]) {
                        closed += 1;
                    }
                }
            }
            acc += closed as f64 / (k * (k - 1) / 2) as f64;
        }
        acc / n_nodes as f64
    };

    // Degree assortativity over reciprocal edges, both orientations.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for v in 0..n_nodes {
        for &w in &recip_adj[v] {
            xs.push(recip_adj[v].len() as f64);
            ys.push(recip_adj[w].len() as f64);
        }
    }
    let assortativity = pearson_opt(&xs, &ys);

    let scc_fraction = if n_nodes == 0 {
        0.0
    } else {
        largest_scc(&idx) as f64 / n_nodes as f64
    };

    NetworkSummary {
        n_nodes,
        n_links,
        mean_degree,
        clustering,
        assortativity,
        scc_fraction,
        reciprocity,
    }
}

fn pearson_opt(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Size of the largest strongly connected component (iterative Tarjan).
fn largest_scc(idx: &NetIndex) -> usize {
    let n = idx.len();
    let mut index = vec![usize::MAX; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut best = 0usize;
    // Explicit DFS frames: (node, next child position).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            if *child < idx.out_adj[v].len() {
                let w = idx.out_adj[v][*child].0;
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    let mut size = 0;
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        size += 1;
                        if w == v {
                            break;
                        }
                    }
                    best = best.max(size);
                }
            }
        }
    }
    best
}

/// Spearman rank alignment of one centrality measure between the two layers
/// of a multiplex (typically the two backbones), over their shared nodes.
/// Degree uses total strength.
pub fn spearman_centrality_alignment(
    mplex: &MultiplexAttention,
    measure: Measure,
) -> Result<(f64, f64), MetricsError> {
    let media = centralities(&mplex.media, measure, Direction::Total)?;
    let public = centralities(&mplex.public, measure, Direction::Total)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (node, x) in &media.values {
        if let Some(y) = public.values.get(node) {
            xs.push(*x);
            ys.push(*y);
        }
    }
    if xs.len() < 3 {
        return Err(MetricsError::InsufficientNodes {
            got: xs.len(),
            min: 3,
        });
    }
    let t = stats::spearman(&xs, &ys)?;
    Ok((t.statistic, t.p))
}
