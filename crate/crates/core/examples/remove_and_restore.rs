//! Removes a share of known cells from a generated policy, predicts them
//! back and scores each prediction.
//!
//! `cargo run --release --example remove_and_restore -- [percent] [seed]`

use abac_infer::cluster::{cluster, ClusteringConfig};
use abac_infer::eval::{remove_attributes, restore, score_prediction};
use abac_infer::generate::{generate, GenSpec, Template};
use abac_infer::predict::{predict_all, PredictionConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let percent: f64 = args.next().map_or(5.0, |s| s.parse().expect("percent"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let g = generate(&GenSpec::new(Template::University, 1, seed)).expect("valid spec");
    let (damaged, plan) =
        remove_attributes(&g.policy.model, percent / 100.0, seed).expect("percent in (0, 100)");
    println!(
        "removed {} of {} eligible cells",
        plan.removed.len(),
        plan.eligible
    );
    let c = cluster(&damaged, &ClusteringConfig::default()).expect("valid config");
    let preds = predict_all(&damaged, &g.entitlements, &c, &PredictionConfig::default());
    for cell in &plan.removed {
        let p = preds
            .iter()
            .find(|p| p.object == cell.object && p.attr == cell.attr)
            .expect("one prediction per cell");
        let verdict = score_prediction(p, &cell.original, false);
        println!(
            "{:<14} {:<14} was {:<18} got {:<18} {:?}",
            cell.object,
            cell.attr,
            cell.original.to_string(),
            format!("{:?}", p.values),
            verdict
        );
    }
    assert_eq!(restore(&damaged, &plan), g.policy.model);
}
