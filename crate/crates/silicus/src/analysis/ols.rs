//! Ordinary least squares with classical standard errors.
//!
//! The solve goes through a Householder QR factorization of the design
//! matrix (intercept prepended), which is numerically stable without
//! forming X'X. Standard errors are homoskedastic:
//! sqrt(s^2 * diag((X'X)^-1)) with s^2 = RSS / (n - k).

use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub n: usize,
}

impl RegressionResult {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.std_errors[i])
    }
}

/// Column-major dense matrix, just enough for QR.
struct Matrix {
    rows: usize,
    data: Vec<f64>, // column-major
}

impl Matrix {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[c * self.rows + r]
    }
}

/// Regresses `y` on an intercept plus the named regressors.
///
/// `r_squared` is defined as 0 when y has zero variance (TSS = 0), so a
/// constant outcome reports a slope of zero rather than dividing by zero.
pub fn ols(
    y: &[f64],
    regressors: &[(String, Vec<f64>)],
) -> Result<RegressionResult, AnalysisError> {
    let n = y.len();
    for (name, column) in regressors {
        if column.len() != n {
            return Err(AnalysisError::LengthMismatch(name.clone()));
        }
    }
    let k = regressors.len() + 1;
    if n <= k {
        return Err(AnalysisError::DegenerateDoF { n, k });
    }

    let mut x = Matrix {
        rows: n,
        data: vec![0.0; n * k],
    };
    for r in 0..n {
        *x.at_mut(r, 0) = 1.0;
    }
    for (c, (_, column)) in regressors.iter().enumerate() {
        for r in 0..n {
            *x.at_mut(r, c + 1) = column[r];
        }
    }

    // Householder QR: X is overwritten with R in its upper triangle while
    // Q' is applied to a copy of y as we go.
    let mut qty = y.to_vec();
    let mut householders: Vec<Vec<f64>> = Vec::with_capacity(k);
    for col in 0..k {
        let mut norm = 0.0;
        for r in col..n {
            norm += x.at(r, col) * x.at(r, col);
        }
        let norm = norm.sqrt();
        let pivot = x.at(col, col);
        let alpha = if pivot >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (col..n).map(|r| x.at(r, col)).collect();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|e| e * e).sum();
        if v_norm_sq > 0.0 {
            // Apply H = I - 2 v v' / (v'v) to the remaining columns and y.
            for c in col..k {
                let mut dot = 0.0;
                for (i, vi) in v.iter().enumerate() {
                    dot += vi * x.at(col + i, c);
                }
                let scale = 2.0 * dot / v_norm_sq;
                for (i, vi) in v.iter().enumerate() {
                    *x.at_mut(col + i, c) -= scale * vi;
                }
            }
            let mut dot = 0.0;
            for (i, vi) in v.iter().enumerate() {
                dot += vi * qty[col + i];
            }
            let scale = 2.0 * dot / v_norm_sq;
            for (i, vi) in v.iter().enumerate() {
                qty[col + i] -= scale * vi;
            }
        }
        householders.push(v);
    }

    // Rank check on R's diagonal.
    let max_diag = (0..k).map(|i| x.at(i, i).abs()).fold(0.0, f64::max);
    let tol = f64::EPSILON * (n.max(k) as f64) * max_diag.max(1.0);
    for i in 0..k {
        if x.at(i, i).abs() <= tol {
            return Err(AnalysisError::RankDeficient);
        }
    }

    // Back-substitute R b = Q'y.
    let mut coefficients = vec![0.0; k];
    for i in (0..k).rev() {
        let mut sum = qty[i];
        for j in i + 1..k {
            sum -= x.at(i, j) * coefficients[j];
        }
        coefficients[i] = sum / x.at(i, i);
    }

    // Residual sum of squares: rows k..n of Q'y are the residual component.
    let rss: f64 = qty[k..].iter().map(|e| e * e).sum();

    // (X'X)^-1 = R^-1 R^-T. Solve R' z = e_i then R w = z per column.
    let mut xtx_inv_diag = vec![0.0; k];
    for i in 0..k {
        // Forward solve R' z = e_i (R' is lower triangular).
        let mut z = vec![0.0; k];
        for r in 0..k {
            let rhs = if r == i { 1.0 } else { 0.0 };
            let mut sum = rhs;
            for c in 0..r {
                sum -= x.at(c, r) * z[c];
            }
            z[r] = sum / x.at(r, r);
        }
        // Back solve R w = z.
        let mut w = vec![0.0; k];
        for r in (0..k).rev() {
            let mut sum = z[r];
            for c in r + 1..k {
                sum -= x.at(r, c) * w[c];
            }
            w[r] = sum / x.at(r, r);
        }
        xtx_inv_diag[i] = w[i];
    }

    let dof = (n - k) as f64;
    let sigma_sq = rss / dof;
    let std_errors: Vec<f64> = xtx_inv_diag
        .iter()
        .map(|d| (sigma_sq * d.max(0.0)).sqrt())
        .collect();

    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if tss == 0.0 { 0.0 } else { 1.0 - rss / tss };

    let mut terms = vec!["const".to_string()];
    terms.extend(regressors.iter().map(|(name, _)| name.clone()));

    Ok(RegressionResult {
        terms,
        coefficients,
        std_errors,
        r_squared,
        n,
    })
}
