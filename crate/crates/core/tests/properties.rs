//! Property suites at a fixed seed. The acceptance target repeats them under more seeds.

mod common;

const SEED: u64 = 0x00c0_ffee;

fn run(check: fn(u32, u64) -> common::Outcome, cases: u32) {
    if let Err(e) = check(cases, SEED) {
        panic!("{e}");
    }
}

#[test]
fn similarity_is_bounded_symmetric_and_scale_free() {
    run(common::check_similarity, 1000);
}

#[test]
fn clustering_partitions_each_side() {
    run(common::check_clustering, 500);
}

#[test]
fn wider_gates_never_lose_candidates() {
    run(common::check_ntcf_monotone, 200);
}

#[test]
fn removal_round_trips() {
    run(common::check_removal_round_trip, 200);
}

#[test]
fn least_squares_satisfies_normal_equations() {
    run(common::check_ls_residual, 200);
}

#[test]
fn constant_column_gets_zero_coefficient() {
    run(common::check_ls_constant_column, 200);
}

#[test]
fn least_squares_ignores_row_and_column_order() {
    run(common::check_ls_permutation, 200);
}
