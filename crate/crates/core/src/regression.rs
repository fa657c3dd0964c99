//! Ridge-damped linear least squares over 0/1 feature rows.
//!
//! The intercept is fitted undamped by centering; feature coefficients solve
//! `(XcᵀXc + λI)β = Xcᵀyc` with `λ = RIDGE`. Constant columns are fixed at
//! zero and identical columns are merged before the solve (they share the
//! coefficient equally, which is what the damped system gives them anyway).
//! The reduced Gram matrix is diagonalized and directions with a numerically
//! zero eigenvalue are dropped: in exact arithmetic the right-hand side has
//! no component there, so keeping them would only amplify rounding by `1/λ`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Diagonal damping added to every feature (not the intercept).
pub const RIDGE: f64 = 1e-8;

/// Relative eigenvalue cut-off below which a direction is treated as null.
const NULL_EIGEN_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

/// Factored normal equations for one design matrix; solves for any label vector.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    num_features: usize,
    rows: Vec<Vec<u32>>,
    /// reduced column index of each original column; `None` for constant columns
    reduced: Vec<Option<usize>>,
    /// multiplicity of each reduced column
    multiplicity: Vec<usize>,
    means: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl LeastSquares {
    /// `rows[i]` lists the indices of the features that are 1 in row `i`.
    pub fn new<R: AsRef<[u32]>>(num_features: usize, rows: &[R]) -> Self {
        let n = rows.len();
        let rows: Vec<Vec<u32>> = rows
            .iter()
            .map(|r| {
                let mut v = r.as_ref().to_vec();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();

        let mut columns: Vec<Vec<u32>> = vec![Vec::new(); num_features];
        for (i, row) in rows.iter().enumerate() {
            for &j in row {
                columns[j as usize].push(i as u32);
            }
        }
        let means: Vec<f64> = columns
            .iter()
            .map(|c| {
                if n == 0 {
                    0.0
                } else {
                    c.len() as f64 / n as f64
                }
            })
            .collect();

        let mut reduced = vec![None; num_features];
        let mut multiplicity = Vec::new();
        let mut counts = Vec::new();
        let mut seen: HashMap<&[u32], usize> = HashMap::new();
        for (j, col) in columns.iter().enumerate() {
            if col.is_empty() || col.len() == n {
                continue;
            }
            let r = *seen.entry(col.as_slice()).or_insert_with(|| {
                multiplicity.push(0);
                counts.push(col.len() as f64);
                multiplicity.len() - 1
            });
            multiplicity[r] += 1;
            reduced[j] = Some(r);
        }

        let q = multiplicity.len();
        let mut gram = DMatrix::<f64>::zeros(q, q);
        let mut active = Vec::new();
        for row in &rows {
            active.clear();
            active.extend(row.iter().filter_map(|&j| reduced[j as usize]));
            active.sort_unstable();
            active.dedup();
            for (a_pos, &a) in active.iter().enumerate() {
                for &b in &active[a_pos..] {
                    gram[(a, b)] += 1.0;
                }
            }
        }
        let scale: Vec<f64> = multiplicity.iter().map(|&k| (k as f64).sqrt()).collect();
        for a in 0..q {
            for b in a..q {
                let centered = gram[(a, b)] - counts[a] * counts[b] / n as f64;
                let v = centered * scale[a] * scale[b];
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
        }
        let (eigenvalues, eigenvectors) = if q == 0 {
            (Vec::new(), DMatrix::zeros(0, 0))
        } else {
            let eig = SymmetricEigen::new(gram);
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        };
        Self {
            num_features,
            rows,
            reduced,
            multiplicity,
            means,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Numerical rank of the centered design.
    pub fn rank(&self) -> usize {
        let cut = self.null_cut();
        self.eigenvalues.iter().filter(|&&mu| mu > cut).count()
    }

    fn null_cut(&self) -> f64 {
        let top = self
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        top.max(1.0) * NULL_EIGEN_RTOL
    }

    pub fn solve(&self, labels: &[f64]) -> Fit {
        assert_eq!(labels.len(), self.rows.len(), "one label per row");
        let n = self.rows.len();
        if n == 0 {
            return Fit {
                intercept: 0.0,
                coefficients: vec![0.0; self.num_features],
            };
        }
        let y_mean = labels.iter().sum::<f64>() / n as f64;
        let q = self.multiplicity.len();

        // Xcᵀ yc for the reduced (scaled) columns
        let mut rhs = DVector::<f64>::zeros(q);
        let mut seen = vec![usize::MAX; q];
        for (i, (row, &y)) in self.rows.iter().zip(labels).enumerate() {
            if y == 0.0 {
                continue;
            }
            for &j in row {
                if let Some(r) = self.reduced[j as usize] {
                    if seen[r] != i {
                        seen[r] = i;
                        rhs[r] += y;
                    }
                }
            }
        }
        let mut rep_count = vec![0.0; q];
        for (j, r) in self.reduced.iter().enumerate() {
            if let Some(r) = *r {
                rep_count[r] = self.means[j] * n as f64;
            }
        }
        for r in 0..q {
            rhs[r] = (rhs[r] - rep_count[r] * y_mean) * (self.multiplicity[r] as f64).sqrt();
        }

        let cut = self.null_cut();
        let mut beta = DVector::<f64>::zeros(q);
        for (k, &mu) in self.eigenvalues.iter().enumerate() {
            if mu <= cut {
                continue;
            }
            let v = self.eigenvectors.column(k);
            let w = v.dot(&rhs) / (mu + RIDGE);
            beta.axpy(w, &v, 1.0);
        }

        let mut coefficients = vec![0.0; self.num_features];
        for (j, r) in self.reduced.iter().enumerate() {
            if let Some(r) = *r {
                coefficients[j] = beta[r] / (self.multiplicity[r] as f64).sqrt();
            }
        }
        let intercept = y_mean
            - coefficients
                .iter()
                .zip(&self.means)
                .map(|(c, m)| c * m)
                .sum::<f64>();
        Fit {
            intercept,
            coefficients,
        }
    }
}

/// One-shot fit: `rows[i]` are the active feature indices of row `i`.
pub fn fit_least_squares<R: AsRef<[u32]>>(num_features: usize, rows: &[R], labels: &[f64]) -> Fit {
    LeastSquares::new(num_features, rows).solve(labels)
}

/// Max-norm residual of the damped normal equations, intercept included:
/// `[n, sᵀ; s, XᵀX + λI] [b0; β] − [Σy; Xᵀy]`.
pub fn normal_equation_residual<R: AsRef<[u32]>>(
    num_features: usize,
    rows: &[R],
    labels: &[f64],
    fit: &Fit,
) -> f64 {
    let p = num_features;
    let mut pred = Vec::with_capacity(rows.len());
    for row in rows {
        let mut v = fit.intercept;
        let mut seen = std::collections::BTreeSet::new();
        for &j in row.as_ref() {
            if seen.insert(j) {
                v += fit.coefficients[j as usize];
            }
        }
        pred.push(v);
    }
    // Xᵀ(Xβ + b0 − y) + λβ, and the intercept row Σ(Xβ + b0 − y)
    let mut grad = vec![0.0; p + 1];
    for (row, (pv, y)) in rows.iter().zip(pred.iter().zip(labels)) {
        let r = pv - y;
        grad[0] += r;
        let mut seen = std::collections::BTreeSet::new();
        for &j in row.as_ref() {
            if seen.insert(j) {
                grad[j as usize + 1] += r;
            }
        }
    }
    for j in 0..p {
        grad[j + 1] += RIDGE * fit.coefficients[j];
    }
    grad.into_iter().fold(0.0, |m, g| m.max(g.abs()))
}
