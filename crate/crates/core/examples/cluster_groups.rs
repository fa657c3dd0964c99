//! Groups the objects of the university fragment at a few similarity
//! thresholds, optionally weighting one attribute.
//!
//! `cargo run --example cluster_groups -- [attr=weight]`

use abac_infer::cluster::{cluster, group_stats, ClusteringConfig};
use abac_infer::fixtures::university_fragment;

fn main() {
    let policy = university_fragment();
    let mut weights = std::collections::BTreeMap::new();
    if let Some(arg) = std::env::args().nth(1) {
        let (attr, w) = arg.split_once('=').expect("attr=weight");
        weights.insert(attr.to_string(), w.parse::<f64>().expect("numeric weight"));
    }
    for st in [0.25, 0.4, 0.9] {
        let cfg = ClusteringConfig {
            weights: weights.clone(),
            st,
        };
        let c = cluster(&policy.model, &cfg).expect("valid config");
        println!("ST = {st}: {} groups", c.groups().count());
        for g in c.groups() {
            let s = group_stats(g, &policy.model, &cfg).expect("members exist");
            println!(
                "  {} {:<8} sim {:.2}-{:.2}  {}",
                g.id,
                g.class,
                s.min,
                s.max,
                g.members.join(" ")
            );
        }
    }
}
