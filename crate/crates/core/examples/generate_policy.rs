//! Generates a synthetic policy and writes it with its entitlements.
//!
//! `cargo run --example generate_policy -- [university|projmgmt] [scale] [seed] [dir]`

use std::path::PathBuf;

use abac_infer::generate::{generate, GenSpec, Template};
use abac_infer::io::{write_entitlements, write_policy};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let template: Template = args
        .first()
        .map_or("university", String::as_str)
        .parse()
        .expect("template");
    let scale = args.get(1).map_or(1, |s| s.parse().expect("scale"));
    let seed = args.get(2).map_or(1, |s| s.parse().expect("seed"));
    let spec = GenSpec::new(template, scale, seed);
    let g = generate(&spec).expect("valid spec");
    println!(
        "{}: {} objects, {} attribute cells, {} rules, {} entitlements",
        spec.dataset_name(),
        g.objects,
        g.attrs,
        g.policy.rules.len(),
        g.entitlements.len()
    );
    if let Some(dir) = args.get(3).map(PathBuf::from) {
        let base = dir.join(spec.dataset_name());
        let policy = std::fs::File::create(base.with_extension("json")).expect("writable dir");
        write_policy(policy, &g.policy).expect("written");
        let ents = std::fs::File::create(base.with_extension("csv")).expect("writable dir");
        write_entitlements(ents, &g.entitlements).expect("written");
        println!("wrote {}.json and .csv", base.display());
    }
}
