//! Evaluates the university fragment rule on a complete and a partial model
//! and prints the entitlements it grants.
//!
//! `cargo run --example policy_meaning`

use abac_infer::fixtures::{gradebook_rule, university_fragment, university_fragment_complete};
use abac_infer::io::entitlements_to_string;
use abac_infer::policy::{eval_condition, rule_meaning};

fn main() {
    let complete = university_fragment_complete();
    let meaning = complete.meaning().expect("valid policy");
    print!(
        "complete model grants {}:\n{}",
        meaning.len(),
        entitlements_to_string(&meaning)
    );

    // csFac1's department and courses are unknown, so its rule evaluation is Unknown
    let partial = university_fragment();
    let rule = gradebook_rule();
    let m = rule_meaning(&rule, &partial.model).expect("valid rule");
    println!(
        "partial model grants {} definitely, {} pairs unknown",
        m.entitlements.len(),
        m.unknown
    );

    let schema = partial.model.schema();
    for u in partial.model.users() {
        let t = eval_condition(schema, u, &rule.user_condition).expect("typed");
        println!("  {:<7} user condition {:?}", u.id, t);
    }
}
