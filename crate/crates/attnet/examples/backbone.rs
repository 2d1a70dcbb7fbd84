//! Disparity filtering of a skewed attention network.
//!
//! One hub spreads most of its weight over a single favorite; the filter
//! keeps the dominant edges and drops the uniform background. Sweeping
//! alpha shows the backbone growing monotonically.

use attnet::country::CountryCode;
use attnet::net::{disparity_backbone, AttentionNetwork, BackboneParams, DateScope, Layer};

fn main() {
    let c = |s: &str| CountryCode::new(s).unwrap();
    let mut net = AttentionNetwork::new(Layer::Media, DateScope::Empty);

    // US strongly favors GB; everything else it mentions in passing.
    net.bump_edge(c("US"), c("GB"), 900.0);
    for t in ["FR", "DE", "JP", "BR", "IN"] {
        net.bump_edge(c("US"), c(t), 20.0);
    }
    // GB splits attention evenly, so none of its edges stand out.
    for t in ["US", "FR", "DE", "JP"] {
        net.bump_edge(c("GB"), c(t), 50.0);
    }
    // Everyone reciprocates toward US with one moderate edge each, giving
    // the US in-side enough degree for the filter to judge shares.
    for s in ["FR", "DE", "JP", "BR", "IN"] {
        net.bump_edge(c(s), c("US"), 30.0);
        net.bump_edge(c(s), c("GB"), 10.0);
    }

    println!("full network: {} nodes, {} edges", net.node_count(), net.edge_count());
    println!();
    println!("{:>8} {:>8} {:>8}", "alpha", "edges", "nodes");
    let mut previous = 0;
    for alpha in [0.01, 0.05, 0.1, 0.2, 0.3, 0.5] {
        let bb = disparity_backbone(&net, BackboneParams { alpha }).unwrap();
        assert!(bb.edge_count() >= previous, "backbone must grow with alpha");
        previous = bb.edge_count();
        println!("{:>8.2} {:>8} {:>8}", alpha, bb.edge_count(), bb.node_count());
    }

    let bb = disparity_backbone(&net, BackboneParams { alpha: 0.05 }).unwrap();
    println!();
    println!("surviving edges at alpha 0.05:");
    for (s, t, w) in bb.edges() {
        println!("  {s} -> {t}  ({w})");
    }
}
