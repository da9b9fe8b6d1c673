//! Simplex-constrained mixture fitting of agent types.
//!
//! Given per-scenario "plays Left" bit vectors for each agent type and the
//! observed fractions playing Left, finds the convex combination of types
//! that minimizes mean squared error over scenarios. Solved by projected
//! gradient descent onto the probability simplex with a fixed step from the
//! Lipschitz bound of the gradient.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

const CONVERGENCE_TOL: f64 = 1e-10;
const MAX_ITERATIONS: u64 = 100_000;

/// Whether an agent type plays "Left" in each scenario, in scenario order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeVector {
    pub type_name: String,
    pub plays_left: Vec<u8>,
}

impl TypeVector {
    pub fn new(type_name: impl Into<String>, plays_left: Vec<u8>) -> TypeVector {
        TypeVector {
            type_name: type_name.into(),
            plays_left,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    /// Weight per type, in input order; non-negative and summing to 1.
    pub weights: Vec<(String, f64)>,
    /// Mean squared error over scenarios at the fitted weights.
    pub residual_mse: f64,
    pub iterations: u64,
}

impl MixtureWeights {
    pub fn weight(&self, type_name: &str) -> Option<f64> {
        self.weights
            .iter()
            .find(|(name, _)| name == type_name)
            .map(|(_, w)| *w)
    }
}

/// File schema for externally supplied mixture inputs, e.g. the original
/// human choice fractions. `types` may be empty when the run's own type
/// vectors should be used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureInput {
    #[serde(default)]
    pub types: Vec<TypeVector>,
    pub observed_left_fractions: Vec<f64>,
}

/// Euclidean projection onto the probability simplex
/// { w : w_i >= 0, sum w_i = 1 }.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (i, value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - 1.0) / (i as f64 + 1.0);
        if value - candidate > 0.0 {
            threshold = candidate;
        }
    }
    v.iter().map(|x| (x - threshold).max(0.0)).collect()
}

fn mse(types: &[TypeVector], weights: &[f64], observed: &[f64]) -> f64 {
    let scenarios = observed.len();
    let mut total = 0.0;
    for s in 0..scenarios {
        let predicted: f64 = types
            .iter()
            .zip(weights)
            .map(|(t, w)| w * t.plays_left[s] as f64)
            .sum();
        let residual = predicted - observed[s];
        total += residual * residual;
    }
    total / scenarios as f64
}

/// Fits simplex weights minimizing mean squared error against the observed
/// Left fractions.
///
/// Projected gradient descent with step 1/L, L bounded by the max column
/// abs-sum of (2/S) V'V; stops when the iterate moves less than 1e-10 in
/// max-norm or after 1e5 iterations.
pub fn fit_type_mixture(
    types: &[TypeVector],
    observed_left_fractions: &[f64],
) -> Result<MixtureWeights, AnalysisError> {
    if types.is_empty() {
        return Err(AnalysisError::DimensionMismatch("no types given".into()));
    }
    let scenarios = observed_left_fractions.len();
    if scenarios == 0 {
        return Err(AnalysisError::DimensionMismatch("no scenarios given".into()));
    }
    for t in types {
        if t.plays_left.len() != scenarios {
            return Err(AnalysisError::DimensionMismatch(format!(
                "type '{}' covers {} scenarios, observed vector has {}",
                t.type_name,
                t.plays_left.len(),
                scenarios
            )));
        }
        if t.plays_left.iter().any(|b| *b > 1) {
            return Err(AnalysisError::InvalidInput(format!(
                "type '{}' has a non-binary entry",
                t.type_name
            )));
        }
    }
    for p in observed_left_fractions {
        if !(0.0..=1.0).contains(p) {
            return Err(AnalysisError::InvalidInput(format!(
                "observed fraction {p} outside [0, 1]"
            )));
        }
    }

    let k = types.len();
    // Gram matrix G = V'V where V is scenarios x types.
    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let mut sum = 0.0;
            for s in 0..scenarios {
                sum += types[a].plays_left[s] as f64 * types[b].plays_left[s] as f64;
            }
            gram[a * k + b] = sum;
        }
    }
    // Lipschitz bound for grad f(w) = (2/S)(G w - V'p): max row abs-sum of
    // (2/S) G dominates its spectral radius.
    let lipschitz = (0..k)
        .map(|a| (0..k).map(|b| gram[a * k + b].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * 2.0
        / scenarios as f64;

    let mut vt_p = vec![0.0; k];
    for a in 0..k {
        for s in 0..scenarios {
            vt_p[a] += types[a].plays_left[s] as f64 * observed_left_fractions[s];
        }
    }

    let mut weights = vec![1.0 / k as f64; k];
    let mut iterations = 0;
    if lipschitz > 0.0 {
        let step = 1.0 / lipschitz;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let mut gradient = vec![0.0; k];
            for a in 0..k {
                let mut gw = 0.0;
                for b in 0..k {
                    gw += gram[a * k + b] * weights[b];
                }
                gradient[a] = 2.0 * (gw - vt_p[a]) / scenarios as f64;
            }
            let proposal: Vec<f64> = weights
                .iter()
                .zip(&gradient)
                .map(|(w, g)| w - step * g)
                .collect();
            let next = project_to_simplex(&proposal);
            let movement = next
                .iter()
                .zip(&weights)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            weights = next;
            if movement < CONVERGENCE_TOL {
                break;
            }
        }
    }
    // lipschitz == 0 means every type plays Right everywhere; any simplex
    // point is optimal and the uniform start is returned as-is.

    let residual_mse = mse(types, &weights, observed_left_fractions);
    Ok(MixtureWeights {
        weights: types
            .iter()
            .zip(&weights)
            .map(|(t, w)| (t.type_name.clone(), *w))
            .collect(),
        residual_mse,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(name: &str, bits: &[u8]) -> TypeVector {
        TypeVector::new(name, bits.to_vec())
    }

    #[test]
    fn exact_type_match_gets_weight_one() {
        let types = vec![
            vector("fair", &[1, 0, 1, 0, 0, 1]),
            vector("selfish", &[0, 1, 0, 1, 1, 0]),
        ];
        let observed = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let fit = fit_type_mixture(&types, &observed).unwrap();
        assert!((fit.weight("fair").unwrap() - 1.0).abs() < 1e-6);
        assert!(fit.residual_mse < 1e-12);
    }

    #[test]
    fn symmetric_halves_split_evenly() {
        let types = vec![vector("a", &[1, 1, 0, 0]), vector("b", &[0, 0, 1, 1])];
        let observed = [0.5, 0.5, 0.5, 0.5];
        let fit = fit_type_mixture(&types, &observed).unwrap();
        assert!((fit.weight("a").unwrap() - 0.5).abs() < 1e-6);
        assert!((fit.weight("b").unwrap() - 0.5).abs() < 1e-6);
        assert!(fit.residual_mse < 1e-12);
    }

    #[test]
    fn weights_lie_on_the_simplex() {
        let types = vec![
            vector("a", &[1, 0, 1, 1, 0, 0]),
            vector("b", &[0, 1, 1, 0, 1, 0]),
            vector("c", &[1, 1, 0, 0, 0, 1]),
        ];
        let observed = [0.3, 0.9, 0.2, 0.6, 0.4, 0.1];
        let fit = fit_type_mixture(&types, &observed).unwrap();
        let sum: f64 = fit.weights.iter().map(|(_, w)| w).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        for (_, w) in &fit.weights {
            assert!(*w >= 0.0);
        }
    }

    #[test]
    fn two_types_match_the_closed_form_projection() {
        // With w2 = 1 - w1 the problem is one-dimensional in w1:
        // minimize || w1 (v1 - v2) - (p - v2) ||^2, so
        // w1* = clip(<p - v2, v1 - v2> / ||v1 - v2||^2, 0, 1).
        let v1 = [1u8, 1, 0, 0, 1, 0];
        let v2 = [0u8, 1, 1, 0, 0, 1];
        let observed = [0.8, 0.9, 0.3, 0.1, 0.55, 0.4];
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        for s in 0..6 {
            let diff = v1[s] as f64 - v2[s] as f64;
            numerator += (observed[s] - v2[s] as f64) * diff;
            denominator += diff * diff;
        }
        let closed_form = (numerator / denominator).clamp(0.0, 1.0);

        let types = vec![vector("one", &v1), vector("two", &v2)];
        let fit = fit_type_mixture(&types, &observed).unwrap();
        assert!(
            (fit.weight("one").unwrap() - closed_form).abs() < 1e-8,
            "fit {} vs closed form {closed_form}",
            fit.weight("one").unwrap()
        );
    }

    #[test]
    fn scenario_relabeling_leaves_weights_unchanged() {
        let types = vec![
            vector("a", &[1, 0, 1, 1, 0, 0]),
            vector("b", &[0, 1, 1, 0, 1, 0]),
            vector("c", &[1, 1, 0, 0, 0, 1]),
        ];
        let observed = [0.3, 0.9, 0.2, 0.6, 0.4, 0.1];
        let baseline = fit_type_mixture(&types, &observed).unwrap();

        let permutation = [3usize, 0, 5, 1, 4, 2];
        let permuted_types: Vec<TypeVector> = types
            .iter()
            .map(|t| {
                vector(
                    &t.type_name,
                    &permutation.map(|s| t.plays_left[s]),
                )
            })
            .collect();
        let permuted_observed = permutation.map(|s| observed[s]);
        let permuted = fit_type_mixture(&permuted_types, &permuted_observed).unwrap();
        for ((_, a), (_, b)) in baseline.weights.iter().zip(&permuted.weights) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let types = vec![vector("a", &[1, 0])];
        assert!(matches!(
            fit_type_mixture(&types, &[0.5, 0.5, 0.5]),
            Err(AnalysisError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn fractions_outside_unit_interval_are_rejected() {
        let types = vec![vector("a", &[1, 0])];
        assert!(matches!(
            fit_type_mixture(&types, &[0.5, 1.5]),
            Err(AnalysisError::InvalidInput(_))
        ));
    }

    #[test]
    fn projection_handles_points_already_on_the_simplex() {
        let w = project_to_simplex(&[0.2, 0.3, 0.5]);
        for (a, b) in w.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_clamps_negative_coordinates() {
        let w = project_to_simplex(&[1.5, -0.5, 0.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|x| *x >= 0.0));
        assert!((w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_is_non_increasing_along_the_iteration() {
        // Re-run the solver manually step by step to watch the objective.
        let types = vec![
            vector("a", &[1, 0, 1, 1, 0, 0]),
            vector("b", &[0, 1, 1, 0, 1, 0]),
            vector("c", &[1, 1, 0, 0, 0, 1]),
        ];
        let observed = [0.25, 0.75, 0.5, 0.6, 0.3, 0.2];
        let scenarios = observed.len();
        let k = types.len();
        let mut gram = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                gram[a * k + b] = (0..scenarios)
                    .map(|s| types[a].plays_left[s] as f64 * types[b].plays_left[s] as f64)
                    .sum();
            }
        }
        let lipschitz = (0..k)
            .map(|a| (0..k).map(|b| gram[a * k + b].abs()).sum::<f64>())
            .fold(0.0, f64::max)
            * 2.0
            / scenarios as f64;
        let step = 1.0 / lipschitz;
        let mut weights = vec![1.0 / k as f64; k];
        let mut last = mse(&types, &weights, &observed);
        for _ in 0..500 {
            let mut gradient = vec![0.0; k];
            for a in 0..k {
                let gw: f64 = (0..k).map(|b| gram[a * k + b] * weights[b]).sum();
                let vp: f64 = (0..scenarios)
                    .map(|s| types[a].plays_left[s] as f64 * observed[s])
                    .sum();
                gradient[a] = 2.0 * (gw - vp) / scenarios as f64;
            }
            let proposal: Vec<f64> = weights
                .iter()
                .zip(&gradient)
                .map(|(w, g)| w - step * g)
                .collect();
            weights = project_to_simplex(&proposal);
            let current = mse(&types, &weights, &observed);
            assert!(current <= last + 1e-12);
            last = current;
        }
    }
}
