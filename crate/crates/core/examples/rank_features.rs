//! Fits the permit labels of the faculty x gradebook x modify triple and
//! prints its ranked features.
//!
//! `cargo run --example rank_features`

use abac_infer::cluster::{cluster, ClusteringConfig};
use abac_infer::features::{build_learning_data, learn_important_features};
use abac_infer::fixtures::{university_fragment, university_fragment_entitlements};

fn main() {
    let policy = university_fragment();
    let e0 = university_fragment_entitlements();
    let c = cluster(&policy.model, &ClusteringConfig::default()).expect("valid config");
    let gu = c.group_of("csFac2").expect("faculty group");
    let gr = c.group_of("cs601gb").expect("gradebook group");
    let ld =
        build_learning_data(gu, gr, "modify", &e0, &policy.model).expect("complete rows exist");
    let ranked = learn_important_features(&ld).expect("non-empty design");
    println!(
        "{} rows, {} positive, intercept {:.3}",
        ranked.rows, ranked.positives, ranked.intercept
    );
    for e in ranked.entries.iter().take(8) {
        let tags = match (e.invariant, e.evidence) {
            (true, true) => "invariant, evidence",
            (true, false) => "invariant",
            (false, true) => "evidence",
            (false, false) => "",
        };
        println!(
            "{:>3}  {:>9.6}  {:<32} {}",
            e.rank,
            e.coefficient,
            e.feature.to_string(),
            tags
        );
    }
}
