//! Removal experiment over both templates at scales 1-3: five runs at 3, 6
//! and 9 percent each, printed as one line per (dataset, percent).
//!
//! `cargo run --release --example evaluate_matrix -- [seed]`

use std::time::Instant;

use abac_infer::eval::{evaluate, EvalSettings};
use abac_infer::generate::{generate, GenSpec, Template};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("seed is an integer"))
        .unwrap_or(42);
    let settings = EvalSettings {
        seed,
        ..EvalSettings::default()
    };
    let start = Instant::now();
    for template in [Template::University, Template::ProjMgmt] {
        for scale in 1..=3 {
            let spec = GenSpec::new(template, scale, seed);
            let g = generate(&spec).expect("valid spec");
            let reports = evaluate(&g.policy, &settings).expect("complete policy");
            for r in &reports {
                let removed: usize = r.runs.iter().map(|x| x.removed).sum();
                println!(
                    "{:<14} objs={:<4} attrs={:<5} |E0|={:<6} pct={:>2}% removed={:<4} acc={:.4} wrong={} cov={:.3} sd={:.3}",
                    spec.dataset_name(),
                    g.objects,
                    g.attrs,
                    g.entitlements.len(),
                    (r.percent * 100.0).round(),
                    removed,
                    r.accuracy,
                    r.wrong(),
                    r.coverage,
                    r.coverage_std,
                );
            }
        }
    }
    eprintln!("elapsed {:.1}s", start.elapsed().as_secs_f64());
}
