//! Map-equation community detection on two tight groups with one bridge.
//!
//! A random walker stays long inside each densely linked group, so the
//! two-module split compresses its movements well below the one-module
//! description.

use attnet::community::{detect_communities_best_of, map_equation, visit_rates, DEFAULT_TELEPORT, DEFAULT_TOL};
use attnet::country::CountryCode;
use attnet::net::{AttentionNetwork, DateScope, Layer};
use std::collections::BTreeMap;

fn main() {
    let c = |s: &str| CountryCode::new(s).unwrap();
    let americas = ["US", "BR", "CA", "MX", "AR"];
    let europe = ["GB", "FR", "DE", "IT", "ES"];

    let mut net = AttentionNetwork::new(Layer::Public, DateScope::Empty);
    for group in [&americas, &europe] {
        for &s in group.iter() {
            for &t in group.iter() {
                if s != t {
                    net.bump_edge(c(s), c(t), 10.0);
                }
            }
        }
    }
    // One weak bridge in each direction.
    net.bump_edge(c("US"), c("GB"), 1.0);
    net.bump_edge(c("GB"), c("US"), 1.0);

    let partition = detect_communities_best_of(&net, 8, 42);
    println!(
        "found {} modules at codelength {:.4} bits",
        partition.module_count(),
        partition.codelength
    );
    let mut by_module: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (node, module) in &partition.assignment {
        by_module.entry(*module).or_default().push(node.to_string());
    }
    for (module, members) in &by_module {
        println!("  module {module}: {}", members.join(" "));
    }

    // Compare against the trivial one-module description.
    let rates = visit_rates(&net, DEFAULT_TELEPORT, DEFAULT_TOL).unwrap();
    let lumped: BTreeMap<CountryCode, usize> = net.nodes().map(|n| (n, 0)).collect();
    let one_module = map_equation(&net, &rates, &lumped).unwrap();
    println!();
    println!("one-module codelength: {one_module:.4} bits");
    println!(
        "partition saves {:.4} bits per step",
        one_module - partition.codelength
    );
    assert!(partition.codelength < one_module);
}
