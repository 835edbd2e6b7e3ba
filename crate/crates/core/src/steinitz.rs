//! Node reduction by Steinitz' method.
//!
//! If a positive rule on `N > K` nodes is exact on a `K`-dimensional space, the
//! columns of `Φ` are linearly dependent: there is `a != 0` with `Φ a = 0` and
//! some `a_n > 0`. With `σ = max_n a_n / w_n > 0`, the weights
//! `w_n - a_n / σ` are nonnegative, still exact, and at least one of them is
//! zero. Dropping the zero weights and repeating leaves at most `K` nodes.

use std::collections::VecDeque;

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};
use crate::function_space::{vandermonde, FunctionSpace, VandermondeMatrix};
use crate::ls_cubature::exactness_residual;
use crate::moments::MomentVector;

/// Tolerance of the null-vector check `||Φ a||_∞ <= tol ||Φ|| ||a||`.
pub const NULL_VECTOR_TOL: f64 = 1e-10;

/// Unit vector `a` with `Φ a ≈ 0`: the right singular vector of the smallest
/// singular value.
///
/// Sign convention: the first entry that is not negligible is positive, so `a`
/// always has a positive entry. The cost is that of an `N × N` SVD.
pub fn null_vector(phi: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (k, n) = phi.shape();
    if n <= k {
        return Err(CubatureError::InvalidArgument(format!(
            "null vector needs more columns than rows ({k} x {n})"
        )));
    }
    // pad to a square matrix so the SVD returns a full set of right vectors
    let mut square = DMatrix::zeros(n, n);
    square.view_mut((0, 0), (k, n)).copy_from(phi);
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let smallest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let mut a: Vec<f64> = v_t.row(smallest).iter().copied().collect();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter_mut().for_each(|x| *x /= norm);

    let phi_norm = phi.norm();
    let image = phi * DVector::from_column_slice(&a);
    if image.amax() > NULL_VECTOR_TOL * phi_norm.max(f64::MIN_POSITIVE) {
        return Err(CubatureError::TrivialNullSpace);
    }
    let negligible = 1e-12;
    if let Some(first) = a.iter().find(|x| x.abs() > negligible) {
        if *first < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
        }
    }
    if !a.iter().any(|&x| x > 0.0) {
        a.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(a)
}

/// Result of applying one null direction to a weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StepUpdate {
    pub sigma: f64,
    /// Index attaining `σ`; its weight is set to exactly zero.
    pub pivot: usize,
    /// All indices whose new weight is zero (includes `pivot`).
    pub removed: Vec<usize>,
}

/// `w ← (σ w - a) / σ` with `σ = max a_n / w_n`, followed by zeroing the pivot
/// and every weight `<= zero_tol · max w`.
pub fn apply_null_direction(weights: &mut [f64], a: &[f64], zero_tol: f64) -> Result<StepUpdate> {
    debug_assert_eq!(weights.len(), a.len());
    let (pivot, sigma) = a
        .iter()
        .zip(weights.iter())
        .map(|(an, wn)| an / wn)
        .enumerate()
        .fold((usize::MAX, f64::NEG_INFINITY), |best, (i, q)| {
            if q > best.1 {
                (i, q)
            } else {
                best
            }
        });
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(CubatureError::NonPositiveSigma(sigma));
    }
    let max_before = weights.iter().fold(0.0f64, |m, w| m.max(*w));
    for (wn, an) in weights.iter_mut().zip(a) {
        *wn = (sigma * *wn - an) / sigma;
    }
    weights[pivot] = 0.0;
    let threshold = zero_tol * max_before;
    let mut removed = Vec::new();
    for (i, wn) in weights.iter_mut().enumerate() {
        if *wn <= threshold {
            *wn = 0.0;
            removed.push(i);
        }
    }
    Ok(StepUpdate {
        sigma,
        pivot,
        removed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteinitzConfig {
    /// Weights `<= zero_tol · max w` after a step are removed.
    pub zero_tol: f64,
    /// Re-solve the exactness system on the final support.
    pub refine_final: bool,
    /// Allowed residual growth, relative to `1 + ||m||_∞`.
    pub max_residual_drift: f64,
}

impl Default for SteinitzConfig {
    fn default() -> Self {
        Self {
            zero_tol: 1e-14,
            refine_final: true,
            max_residual_drift: 1e-8,
        }
    }
}

/// A single step on the full matrix `Φ`.
#[derive(Debug, Clone)]
pub struct SteinitzStep {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub phi: VandermondeMatrix,
    pub null_vector: Vec<f64>,
    pub update: StepUpdate,
}

/// One Steinitz step: requires positive weights and `N > K`.
pub fn steinitz_step(nodes: &[Vec<f64>], weights: &[f64], phi: &VandermondeMatrix, zero_tol: f64) -> Result<SteinitzStep> {
    if weights.len() != phi.cols() || nodes.len() != phi.cols() {
        return Err(CubatureError::DimensionMismatch {
            expected: phi.cols(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
        return Err(CubatureError::InvalidArgument(format!(
            "Steinitz step needs positive weights, got {w}"
        )));
    }
    let a = null_vector(&phi.matrix)?;
    let mut w = weights.to_vec();
    let update = apply_null_direction(&mut w, &a, zero_tol)?;
    let keep: Vec<usize> = (0..w.len()).filter(|i| w[*i] > 0.0).collect();
    Ok(SteinitzStep {
        nodes: keep.iter().map(|&i| nodes[i].clone()).collect(),
        weights: keep.iter().map(|&i| w[i]).collect(),
        phi: VandermondeMatrix {
            matrix: phi.matrix.select_columns(&keep),
            nodes: keep.iter().map(|&i| phi.nodes[i].clone()).collect(),
        },
        null_vector: a,
        update,
    })
}

/// Record of one reduction iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub nodes_before: usize,
    /// Index of the pivot in the input node list.
    pub removed: usize,
    pub removed_count: usize,
    pub sigma: f64,
    /// Exactness residual after the step, tracked incrementally.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub initial_nodes: usize,
    pub pruned_zero_weights: usize,
    pub steps: Vec<ReductionStep>,
    pub residual_before_refinement: f64,
    /// `Some(accepted)` when the final refinement was attempted.
    pub refinement_accepted: Option<bool>,
    pub final_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Positions of the surviving nodes in the input list.
    pub support: Vec<usize>,
    pub residual: f64,
    pub trace: ReductionTrace,
}

/// Least-squares re-solve of `Φ' w = m` on the surviving support.
fn refine(phi: &DMatrix<f64>, moments: &[f64]) -> Option<Vec<f64>> {
    let svd = phi.clone().svd(true, true);
    let rhs = DVector::from_column_slice(moments);
    let tol = 1e-13 * svd.singular_values.max();
    svd.solve(&rhs, tol).ok().map(|w| w.iter().copied().collect())
}

/// Reduces a nonnegative `F_K`-exact rule to at most `K` nodes with positive
/// weights.
///
/// Zero weights are pruned first. Each iteration takes the null vector of the
/// first `K + 1` remaining columns of `Φ`, which is a null vector of the whole
/// matrix padded with zeros, so one step costs an SVD of size `K + 1`
/// regardless of `N`.
pub fn reduce(
    nodes: &[Vec<f64>],
    weights: &[f64],
    space: &FunctionSpace,
    moments: &MomentVector,
    config: &SteinitzConfig,
) -> Result<Reduction> {
    if nodes.len() != weights.len() {
        return Err(CubatureError::DimensionMismatch {
            expected: nodes.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(CubatureError::InvalidArgument(format!(
            "input rule must be nonnegative, found weight {w}"
        )));
    }
    let k = space.size();
    let m = moments.values();
    let scale = 1.0 + moments.max_abs();
    let mut alive: VecDeque<usize> = (0..nodes.len()).filter(|&i| weights[i] > 0.0).collect();
    if alive.is_empty() {
        return Err(CubatureError::InvalidArgument("all weights are zero".into()));
    }
    let pruned = nodes.len() - alive.len();
    let phi = vandermonde(space, nodes)?.matrix;
    let mut w = weights.to_vec();

    let mut residual_vec: Vec<f64> = {
        let alive_vec: Vec<usize> = alive.iter().copied().collect();
        let sub = phi.select_columns(&alive_vec);
        let ws: Vec<f64> = alive_vec.iter().map(|&i| w[i]).collect();
        let got = &sub * DVector::from_column_slice(&ws);
        got.iter().zip(m).map(|(g, mk)| g - mk).collect()
    };
    let initial_residual = residual_vec.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut steps = Vec::new();

    while alive.len() > k {
        let window: Vec<usize> = alive.iter().take(k + 1).copied().collect();
        let sub = phi.select_columns(&window);
        let a = null_vector(&sub)?;
        let mut ww: Vec<f64> = window.iter().map(|&i| w[i]).collect();
        let old = ww.clone();
        let update = apply_null_direction(&mut ww, &a, config.zero_tol)?;
        // residual += Φ_window (w_new - w_old)
        let delta: Vec<f64> = ww.iter().zip(&old).map(|(n, o)| n - o).collect();
        let change = &sub * DVector::from_column_slice(&delta);
        for (r, c) in residual_vec.iter_mut().zip(change.iter()) {
            *r += c;
        }
        for (&i, &v) in window.iter().zip(&ww) {
            w[i] = v;
        }
        let before = alive.len();
        for _ in 0..window.len() {
            alive.pop_front();
        }
        for &i in window.iter().rev() {
            if w[i] > 0.0 {
                alive.push_front(i);
            }
        }
        let residual = residual_vec.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        steps.push(ReductionStep {
            nodes_before: before,
            removed: window[update.pivot],
            removed_count: update.removed.len(),
            sigma: update.sigma,
            residual,
        });
    }

    let mut support: Vec<usize> = alive.iter().copied().collect();
    let sub = phi.select_columns(&support);
    let mut final_w: Vec<f64> = support.iter().map(|&i| w[i]).collect();
    let before_refinement = exactness_residual(&sub, &final_w, m);
    debug!(
        "reduced {} -> {} nodes in {} steps, residual {before_refinement:e}",
        nodes.len(),
        support.len(),
        steps.len()
    );
    let budget = initial_residual + config.max_residual_drift * scale;
    if !(before_refinement <= budget) {
        return Err(CubatureError::ResidualDrift {
            residual: before_refinement,
            budget,
        });
    }
    let mut refinement_accepted = None;
    if config.refine_final {
        let accepted = match refine(&sub, m) {
            Some(candidate) if candidate.iter().all(|&x| x > 0.0) => {
                let res = exactness_residual(&sub, &candidate, m);
                if res < before_refinement {
                    final_w = candidate;
                    true
                } else {
                    false
                }
            }
            _ => false,
        };
        refinement_accepted = Some(accepted);
    }
    // collateral zeros can only come from the clean-up threshold; keep positivity strict
    let keep: Vec<usize> = (0..final_w.len()).filter(|&i| final_w[i] > 0.0).collect();
    if keep.len() != final_w.len() {
        support = keep.iter().map(|&i| support[i]).collect();
        final_w = keep.iter().map(|&i| final_w[i]).collect();
    }
    let sub = phi.select_columns(&support);
    let final_residual = exactness_residual(&sub, &final_w, m);
    Ok(Reduction {
        nodes: support.iter().map(|&i| nodes[i].clone()).collect(),
        weights: final_w,
        support,
        residual: final_residual,
        trace: ReductionTrace {
            initial_nodes: nodes.len(),
            pruned_zero_weights: pruned,
            steps,
            residual_before_refinement: before_refinement,
            refinement_accepted,
            final_residual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentProvenance;
    use approx::assert_relative_eq;

    #[test]
    fn null_vector_of_constant_row() {
        let phi = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let a = null_vector(&phi).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_relative_eq!(a[0], h, epsilon = 1e-15);
        assert_relative_eq!(a[1], -h, epsilon = 1e-15);
    }

    #[test]
    fn null_vector_is_second_difference() {
        let phi = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, -1.0, 0.0, 1.0]);
        let a = null_vector(&phi).unwrap();
        let s = 6f64.sqrt();
        assert_relative_eq!(a[0], 1.0 / s, epsilon = 1e-15);
        assert_relative_eq!(a[1], -2.0 / s, epsilon = 1e-15);
        assert_relative_eq!(a[2], 1.0 / s, epsilon = 1e-15);
        assert!(a.iter().any(|&x| x > 0.0));
    }

    #[test]
    fn null_vector_needs_wide_matrix() {
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(null_vector(&phi).is_err());
    }

    #[test]
    fn step_with_two_nodes() {
        let s = FunctionSpace::algebraic(1, 0).unwrap();
        let nodes = vec![vec![0.2], vec![0.7]];
        let phi = vandermonde(&s, &nodes).unwrap();
        let step = steinitz_step(&nodes, &[1.0, 1.0], &phi, 1e-14).unwrap();
        assert_relative_eq!(step.update.sigma, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(step.nodes, vec![vec![0.7]]);
        assert_relative_eq!(step.weights[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn step_on_three_point_rule() {
        // a ∝ (1, -2, 1), w = (1/3, 4/3, 1/3): σ = 3/|a| at both endpoints
        let s = FunctionSpace::algebraic(1, 1).unwrap();
        let nodes = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let phi = vandermonde(&s, &nodes).unwrap();
        let w = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
        let step = steinitz_step(&nodes, &w, &phi, 1e-14).unwrap();
        assert_relative_eq!(step.update.sigma, 3.0 / 6f64.sqrt(), epsilon = 1e-14);
        // both endpoints tie, leaving the midpoint with weight 2
        assert_eq!(step.nodes, vec![vec![0.0]]);
        assert_relative_eq!(step.weights[0], 2.0, epsilon = 1e-14);
        let got = &step.phi.matrix * DVector::from_column_slice(&step.weights);
        assert_relative_eq!(got[0], 2.0, epsilon = 1e-14);
        assert!(got[1].abs() < 1e-14);
    }

    #[test]
    fn step_removes_one_endpoint_without_tie() {
        let s = FunctionSpace::algebraic(1, 1).unwrap();
        let nodes = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let phi = vandermonde(&s, &nodes).unwrap();
        let w = [0.5, 1.0, 0.5];
        let step = steinitz_step(&nodes, &[w[0], w[1], w[2] * 1.2], &phi, 1e-14).unwrap();
        assert_eq!(step.nodes.len(), 2);
        let sum: f64 = step.weights.iter().sum();
        assert_relative_eq!(sum, 2.1, epsilon = 1e-14);
        let first: f64 = step.weights.iter().zip(&step.nodes).map(|(w, x)| w * x[0]).sum();
        assert_relative_eq!(first, 0.1, epsilon = 1e-14);
    }

    #[test]
    fn weight_sum_is_conserved() {
        let s = FunctionSpace::algebraic(2, 1).unwrap();
        let nodes: Vec<Vec<f64>> = (0..7)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()])
            .collect();
        let phi = vandermonde(&s, &nodes).unwrap();
        let w: Vec<f64> = (0..7).map(|i| 0.5 + 0.1 * i as f64).collect();
        let step = steinitz_step(&nodes, &w, &phi, 1e-14).unwrap();
        let before: f64 = w.iter().sum();
        let after: f64 = step.weights.iter().sum();
        assert_relative_eq!(before, after, max_relative = 1e-14);
    }

    #[test]
    fn reduce_is_identity_for_small_rules() {
        let s = FunctionSpace::algebraic(1, 1).unwrap();
        let m = MomentVector::new(vec![2.0, 0.0], MomentProvenance::Analytic).unwrap();
        let nodes = vec![vec![-0.5], vec![0.3], vec![0.5]];
        let r = reduce(&nodes, &[1.0, 0.0, 1.0], &s, &m, &SteinitzConfig::default()).unwrap();
        assert_eq!(r.nodes, vec![vec![-0.5], vec![0.5]]);
        assert_eq!(r.trace.pruned_zero_weights, 1);
        assert!(r.trace.steps.is_empty());
    }

    #[test]
    fn reduce_constant_space_to_one_node() {
        let s = FunctionSpace::algebraic(2, 0).unwrap();
        let m = MomentVector::new(vec![5.0], MomentProvenance::Analytic).unwrap();
        let nodes: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        let r = reduce(&nodes, &[0.5; 10], &s, &m, &SteinitzConfig::default()).unwrap();
        assert_eq!(r.nodes.len(), 1);
        assert_relative_eq!(r.weights[0], 5.0, epsilon = 1e-13);
    }

    #[test]
    fn reduce_rejects_negative_input() {
        let s = FunctionSpace::algebraic(1, 0).unwrap();
        let m = MomentVector::new(vec![1.0], MomentProvenance::Analytic).unwrap();
        assert!(reduce(&[vec![0.0], vec![1.0]], &[1.5, -0.5], &s, &m, &SteinitzConfig::default()).is_err());
    }
}
