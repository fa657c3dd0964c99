//! Predicts csFac1's unknown department and coursesTaught, with the
//! features and triples each prediction came from.
//!
//! `cargo run --example predict_missing -- [high] [med]`

use abac_infer::cluster::{cluster, ClusteringConfig};
use abac_infer::fixtures::{university_fragment, university_fragment_entitlements};
use abac_infer::predict::{predict_all, PredictionConfig};

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer gate"));
    let cfg = match (args.next(), args.next()) {
        (Some(h), Some(m)) => PredictionConfig::new(h, m).expect("high <= med"),
        _ => PredictionConfig::default(),
    };
    let policy = university_fragment();
    let e0 = university_fragment_entitlements();
    let c = cluster(&policy.model, &ClusteringConfig::default()).expect("valid config");
    for p in predict_all(&policy.model, &e0, &c, &cfg) {
        println!(
            "{}.{} = {:?} ({})",
            p.object, p.attr, p.values, p.confidence
        );
        for s in &p.provenance {
            println!(
                "    rank {} {} via groups {}x{} {}",
                s.rank, s.feature, s.triple.user_group, s.triple.resource_group, s.triple.action
            );
        }
    }
}
