//! Two-layer country attention networks.
//!
//! One layer holds how much news coverage country A gives country B, the
//! other how much the public of A searches for B. Both layers are weighted
//! digraphs over 2-letter country codes, built from daily event counts and
//! window-normalized search-volume series. On top of them this crate
//! provides:
//!
//! - overlap stitching of per-window search series onto one common scale
//!   ([`stitch`])
//! - daily and aggregated network construction plus disparity-filter
//!   backbones ([`net`])
//! - centralities, top-k overlap, Gini concentration and summary statistics
//!   ([`metrics`])
//! - 13-class triad census with a degree-preserving null model ([`motifs`])
//! - map-equation community detection ([`community`])
//! - pairwise lead-lag (Granger) scans between the two layers ([`causality`])
//! - a self-contained statistical kernel ([`stats`])
//! - embedding-based topic labels for co-mention phrases ([`topics`])
//! - continent-level flow matrices ([`regions`])
//! - seeded synthetic worlds with planted structure for end-to-end checks
//!   ([`simgen`])
//! - a deterministic batch pipeline behind the `attnet` binary ([`pipeline`])
//!
//! Each capability has a runnable example:
//!
//! ```bash
//! cargo run -p attnet --example stitch_windows
//! cargo run -p attnet --example backbone
//! cargo run -p attnet --example centrality_alignment
//! cargo run -p attnet --example motif_profile
//! cargo run -p attnet --example communities
//! cargo run -p attnet --example granger_scan
//! cargo run -p attnet --example region_flows
//! cargo run -p attnet --example topic_inference
//! cargo run -p attnet --example synthetic_world
//! ```
//!
//! Everything that consumes randomness takes an explicit `u64` seed and is
//! reproducible bit-for-bit for a given seed, independent of worker count.

pub mod causality;
pub mod community;
pub mod country;
pub mod ingest;
pub mod metrics;
pub mod motifs;
pub mod net;
pub mod pipeline;
pub mod regions;
pub mod rng;
pub mod simgen;
pub mod stats;
pub mod stitch;
pub mod topics;

pub use country::{CountryCode, Region};
pub use net::{AttentionNetwork, DateScope, Layer, MultiplexAttention};
