//! Do the two attention layers rank countries the same way?
//!
//! Builds a media and a public toy network over the same countries,
//! correlates each centrality measure's ranking across layers, and
//! compares favorite sets with top-k Jaccard overlap.

use attnet::country::CountryCode;
use attnet::metrics::{
    jaccard_topk, spearman_centrality_alignment, topk_neighbors, Measure,
};
use attnet::net::{AttentionNetwork, DateScope, Layer, MultiplexAttention};

fn toy_layer(layer: Layer, edges: &[(&str, &str, f64)]) -> AttentionNetwork {
    let mut n = AttentionNetwork::new(layer, DateScope::Empty);
    for &(s, t, w) in edges {
        n.bump_edge(
            CountryCode::new(s).unwrap(),
            CountryCode::new(t).unwrap(),
            w,
        );
    }
    n
}

fn main() {
    // Media: US is the hub, with a European cluster around it.
    let media = toy_layer(
        Layer::Media,
        &[
            ("GB", "US", 90.0), ("FR", "US", 80.0), ("DE", "US", 85.0),
            ("JP", "US", 70.0), ("BR", "US", 60.0), ("US", "GB", 40.0),
            ("US", "JP", 10.0), ("GB", "FR", 30.0), ("FR", "DE", 25.0),
            ("DE", "GB", 20.0), ("JP", "GB", 8.0), ("BR", "FR", 6.0),
        ],
    );
    // Public: same hub but searchers favor different seconds, flipping a
    // few countries' favorites and one contact set.
    let public = toy_layer(
        Layer::Public,
        &[
            ("GB", "US", 55.0), ("FR", "US", 88.0), ("DE", "US", 75.0),
            ("JP", "US", 82.0), ("BR", "US", 40.0), ("US", "GB", 22.0),
            ("US", "JP", 30.0), ("GB", "FR", 60.0), ("FR", "DE", 30.0),
            ("DE", "FR", 25.0), ("JP", "GB", 14.0), ("BR", "FR", 20.0),
        ],
    );
    let mplex = MultiplexAttention {
        media,
        public,
        daily_media: None,
        daily_public: None,
    };

    println!("{:<14} {:>10} {:>10}", "measure", "rho", "p");
    for measure in Measure::ALL {
        let (rho, p) = spearman_centrality_alignment(&mplex, measure).unwrap();
        println!("{:<14} {:>10.4} {:>10.4}", measure.as_str(), rho, p);
    }

    println!();
    println!("top-k favorite overlap per country:");
    println!("{:<8} {:>6} {:>6} {:>6}", "country", "k=1", "k=3", "k=5");
    for node in mplex.media.nodes() {
        let row: Vec<f64> = [1, 3, 5]
            .iter()
            .map(|&k| {
                let a = topk_neighbors(&mplex.media, node, k).unwrap();
                let b = topk_neighbors(&mplex.public, node, k).unwrap();
                jaccard_topk(&a, &b)
            })
            .collect();
        println!("{:<8} {:>6.2} {:>6.2} {:>6.2}", node.to_string(), row[0], row[1], row[2]);
    }
}
