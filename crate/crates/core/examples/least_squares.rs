//! Solves a small binary regression, including a duplicated and a constant
//! column, and checks the normal equations.
//!
//! `cargo run --example least_squares`

use abac_infer::regression::{fit_least_squares, normal_equation_residual, LeastSquares};

fn main() {
    // columns: 0 and 1 identical, 2 always on, 3 independent
    let rows: Vec<Vec<u32>> = vec![
        vec![0, 1, 2],
        vec![2, 3],
        vec![0, 1, 2, 3],
        vec![2],
        vec![0, 1, 2],
    ];
    let labels = [1.0, 0.0, 1.0, 0.0, 1.0];
    let ls = LeastSquares::new(4, &rows);
    println!(
        "{} rows, {} features, effective rank {}",
        ls.num_rows(),
        ls.num_features(),
        ls.rank()
    );
    let fit = fit_least_squares(4, &rows, &labels);
    println!("intercept {:.6}", fit.intercept);
    for (j, b) in fit.coefficients.iter().enumerate() {
        println!("  beta[{j}] = {b:.6}");
    }
    println!(
        "normal-equation residual {:e}",
        normal_equation_residual(4, &rows, &labels, &fit)
    );
}
