//! Region-level flow matrices and the concentration comparison.
//!
//! Aggregates country-to-country attention into the five-region flow
//! matrix for both layers, then asks whether one layer concentrates its
//! regional outflows more than the other.

use attnet::country::CountryCode;
use attnet::ingest::RegionMap;
use attnet::net::{AttentionNetwork, DateScope, Layer};
use attnet::regions::{region_flow_matrix, region_gini_compare};

fn layer(kind: Layer, edges: &[(&str, &str, f64)]) -> AttentionNetwork {
    let mut n = AttentionNetwork::new(kind, DateScope::Empty);
    for &(s, t, w) in edges {
        n.bump_edge(
            CountryCode::new(s).unwrap(),
            CountryCode::new(t).unwrap(),
            w,
        );
    }
    n
}

fn print_matrix(title: &str, n: &AttentionNetwork, rm: &RegionMap) {
    let flow = region_flow_matrix(n, rm).unwrap();
    println!("{title}");
    print!("{:<10}", "");
    for r in flow.regions {
        print!("{:>10}", r.as_str());
    }
    println!();
    for (i, region) in flow.regions.iter().enumerate() {
        print!("{:<10}", region.as_str());
        for j in 0..5 {
            print!("{:>10.3}", flow.matrix[i][j]);
        }
        if flow.zero_rows[i] {
            print!("   (no outflow)");
        }
        println!();
    }
    println!();
}

fn main() {
    let rm: RegionMap = [
        ("US", "Americas"), ("BR", "Americas"), ("EG", "Africa"),
        ("ZA", "Africa"), ("GB", "Europe"), ("FR", "Europe"),
        ("JP", "Asia"), ("KR", "Asia"), ("AU", "Oceania"), ("NZ", "Oceania"),
    ]
    .into_iter()
    .map(|(c, r)| (CountryCode::new(c).unwrap(), r.parse().unwrap()))
    .collect();

    // Media concentrates on the Americas wherever it looks.
    let media = layer(
        Layer::Media,
        &[
            ("US", "BR", 80.0), ("US", "GB", 10.0), ("US", "JP", 5.0),
            ("BR", "US", 90.0), ("EG", "US", 60.0), ("EG", "ZA", 8.0),
            ("ZA", "US", 55.0), ("ZA", "GB", 12.0), ("GB", "US", 70.0),
            ("GB", "FR", 15.0), ("FR", "US", 65.0), ("FR", "GB", 20.0),
            ("JP", "US", 75.0), ("JP", "KR", 10.0), ("KR", "US", 70.0),
            ("KR", "JP", 12.0), ("AU", "US", 50.0), ("AU", "NZ", 9.0),
            ("NZ", "AU", 40.0), ("NZ", "US", 35.0),
        ],
    );
    // Public attention spreads more evenly across regions.
    let public = layer(
        Layer::Public,
        &[
            ("US", "BR", 30.0), ("US", "GB", 28.0), ("US", "JP", 26.0),
            ("BR", "US", 32.0), ("EG", "US", 25.0), ("EG", "ZA", 24.0),
            ("ZA", "US", 22.0), ("ZA", "GB", 26.0), ("GB", "US", 27.0),
            ("GB", "FR", 25.0), ("FR", "US", 24.0), ("FR", "GB", 28.0),
            ("JP", "US", 26.0), ("JP", "KR", 27.0), ("KR", "US", 25.0),
            ("KR", "JP", 28.0), ("AU", "US", 26.0), ("AU", "NZ", 24.0),
            ("NZ", "AU", 25.0), ("NZ", "US", 27.0),
        ],
    );

    print_matrix("media flow shares (rows = source region):", &media, &rm);
    print_matrix("public flow shares:", &public, &rm);

    let test = region_gini_compare(&media, &public, &rm).unwrap();
    println!(
        "outflow concentration, media vs public: U = {}, p = {:.4} ({})",
        test.statistic, test.p, test.method
    );
}
