//! Independent oracles used by the acceptance and property suites.
//!
//! These deliberately avoid the library's own numeric paths: the OLS oracle
//! solves the normal equations by Gaussian elimination, and the mixture
//! oracle brute-forces a simplex grid.

use silicus::analysis::TypeVector;

/// OLS via explicit normal equations: coefficients, classical standard
/// errors, and R-squared. Intercept prepended, matching `analysis::ols`.
pub fn ols_normal_equations(y: &[f64], regressors: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, f64) {
    let n = y.len();
    let k = regressors.len() + 1;
    let x = |r: usize, c: usize| -> f64 {
        if c == 0 {
            1.0
        } else {
            regressors[c - 1][r]
        }
    };

    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for a in 0..k {
        for b in 0..k {
            xtx[a][b] = (0..n).map(|r| x(r, a) * x(r, b)).sum();
        }
        xty[a] = (0..n).map(|r| x(r, a) * y[r]).sum();
    }

    let inverse = invert(&xtx);
    let coefficients: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| inverse[a][b] * xty[b]).sum())
        .collect();

    let rss: f64 = (0..n)
        .map(|r| {
            let fitted: f64 = (0..k).map(|c| x(r, c) * coefficients[c]).sum();
            (y[r] - fitted) * (y[r] - fitted)
        })
        .sum();
    let sigma_sq = rss / (n - k) as f64;
    let std_errors: Vec<f64> = (0..k).map(|a| (sigma_sq * inverse[a][a]).sqrt()).collect();

    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if tss == 0.0 { 0.0 } else { 1.0 - rss / tss };
    (coefficients, std_errors, r_squared)
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = matrix.len();
    let mut augmented: Vec<Vec<f64>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut extended = row.clone();
            extended.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            extended
        })
        .collect();
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|a, b| {
                augmented[*a][col]
                    .abs()
                    .partial_cmp(&augmented[*b][col].abs())
                    .unwrap()
            })
            .unwrap();
        augmented.swap(col, pivot_row);
        let pivot = augmented[col][col];
        assert!(pivot.abs() > 1e-12, "oracle matrix is singular");
        for value in augmented[col].iter_mut() {
            *value /= pivot;
        }
        for row in 0..k {
            if row == col {
                continue;
            }
            let factor = augmented[row][col];
            for c in 0..2 * k {
                augmented[row][c] -= factor * augmented[col][c];
            }
        }
    }
    augmented.into_iter().map(|mut row| row.split_off(k)).collect()
}

/// Brute-force minimum MSE over the simplex grid with the given step
/// denominator (100 -> step 0.01). Returns (weights, mse).
pub fn grid_search_mixture(
    types: &[TypeVector],
    observed: &[f64],
    denominator: u32,
) -> (Vec<f64>, f64) {
    let k = types.len();
    let mut best_weights = vec![0.0; k];
    let mut best_mse = f64::INFINITY;
    let mut current = vec![0u32; k];
    enumerate_compositions(denominator, k, 0, &mut current, &mut |composition| {
        let weights: Vec<f64> = composition
            .iter()
            .map(|c| *c as f64 / denominator as f64)
            .collect();
        let mse = mixture_mse(types, &weights, observed);
        if mse < best_mse {
            best_mse = mse;
            best_weights = weights;
        }
    });
    (best_weights, best_mse)
}

fn enumerate_compositions(
    remaining: u32,
    k: usize,
    index: usize,
    current: &mut Vec<u32>,
    visit: &mut impl FnMut(&[u32]),
) {
    if index == k - 1 {
        current[index] = remaining;
        visit(current);
        return;
    }
    for value in 0..=remaining {
        current[index] = value;
        enumerate_compositions(remaining - value, k, index + 1, current, visit);
    }
}

pub fn mixture_mse(types: &[TypeVector], weights: &[f64], observed: &[f64]) -> f64 {
    let scenarios = observed.len();
    (0..scenarios)
        .map(|s| {
            let predicted: f64 = types
                .iter()
                .zip(weights)
                .map(|(t, w)| w * t.plays_left[s] as f64)
                .sum();
            (predicted - observed[s]).powi(2)
        })
        .sum::<f64>()
        / scenarios as f64
}

/// A small deterministic generator for oracle test instances, independent
/// of the library's seeding scheme.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}
