//! Nonnegative least-squares cubature.
//!
//! For nodes `x_1..x_N` and discrete weights `r_n = |Ω| ω(x_n) / N`, the LS
//! weights are the solution of `Φ w = m` with minimal `||R^{-1/2} w||_2`. With
//! a basis `π_k` that is orthonormal in `[u, v]_N = Σ r_n u(x_n) v(x_n)` they
//! reduce to
//!
//! ```text
//! w_n = r_n Σ_k π_k(x_n) I[π_k]
//! ```
//!
//! The orthonormal basis is obtained by modified Gram-Schmidt on the node
//! values of the initial basis; its lower-triangular coefficient matrix maps
//! the moments `m` to `I[π_k]`.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};
use crate::function_space::{vandermonde, FunctionSpace, VandermondeMatrix};
use crate::geometry::WeightFunction;
use crate::moments::MomentVector;
use crate::sequences::PointSequence;

/// Discrete weights `r_n >= 0` defining the inner product `[u, v]_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWeights(Vec<f64>);

impl DiscreteWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(CubatureError::InvalidArgument(format!(
                "discrete weights must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.0.iter().filter(|&&r| r > 0.0).count()
    }
}

/// `r_n = volume · ω(x_n) / N`.
pub fn discrete_weights(nodes: &[Vec<f64>], weight: &WeightFunction, volume: f64) -> Result<DiscreteWeights> {
    if !(volume > 0.0) {
        return Err(CubatureError::InvalidArgument(format!(
            "volume must be positive, got {volume}"
        )));
    }
    let scale = volume / nodes.len() as f64;
    let values = nodes
        .iter()
        .map(|x| weight.sample(x).map(|w| scale * w))
        .collect::<Result<Vec<_>>>()?;
    DiscreteWeights::new(values)
}

/// `[u, v]_N = Σ r_n u_n v_n`.
pub fn discrete_inner_product(u: &[f64], v: &[f64], r: &DiscreteWeights) -> Result<f64> {
    if u.len() != v.len() || u.len() != r.len() {
        return Err(CubatureError::DimensionMismatch {
            expected: r.len(),
            got: if u.len() != r.len() { u.len() } else { v.len() },
        });
    }
    Ok(u.iter().zip(v).zip(r.values()).map(|((a, b), r)| r * a * b).sum())
}

fn weighted_dot(a: &[f64], b: &[f64], r: &[f64]) -> f64 {
    a.iter().zip(b).zip(r).map(|((x, y), w)| w * x * y).sum()
}

/// Discrete orthonormal basis `π_k = Σ_{l <= k} C[k][l] φ_l`.
#[derive(Debug, Clone)]
pub struct DobFactorization {
    /// Lower-triangular `K × K` coefficients `C`.
    pub coefficients: DMatrix<f64>,
    /// Node values of the basis, `N × K` (column `k` holds `π_k(x_n)`).
    pub values: DMatrix<f64>,
    /// `||π̃_k||_N` from the first Gram-Schmidt pass.
    pub norms: Vec<f64>,
    /// First index at which `||π̃_k||_N <= tol · ||φ_k||_N`.
    pub breakdown: Option<usize>,
    /// Whether a second orthogonalization pass was applied.
    pub reorthogonalized: bool,
}

impl DobFactorization {
    pub fn size(&self) -> usize {
        self.coefficients.nrows()
    }

    /// `max_{k,l} |[π_k, π_l]_N - δ_kl|`.
    pub fn orthonormality_defect(&self, r: &DiscreteWeights) -> f64 {
        orthonormality_defect(&self.values, r.values())
    }
}

fn orthonormality_defect(values: &DMatrix<f64>, r: &[f64]) -> f64 {
    let k = values.ncols();
    let mut defect: f64 = 0.0;
    for i in 0..k {
        for j in 0..=i {
            let g = weighted_dot(values.column(i).as_slice(), values.column(j).as_slice(), r);
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((g - target).abs());
        }
    }
    defect
}

/// One modified Gram-Schmidt sweep over the columns of `values`, carrying the
/// coefficient rows along. Returns the pre-normalization norms, or the index of
/// the first column whose norm collapses below `tol` times `reference[k]`.
fn mgs_pass(
    values: &mut DMatrix<f64>,
    coef: &mut DMatrix<f64>,
    r: &[f64],
    tol: f64,
    reference: &[f64],
) -> std::result::Result<Vec<f64>, usize> {
    let k_total = values.ncols();
    let mut norms = Vec::with_capacity(k_total);
    for k in 0..k_total {
        for l in 0..k {
            let p = weighted_dot(values.column(k).as_slice(), values.column(l).as_slice(), r);
            let (left, mut right) = values.columns_range_pair_mut(l, k);
            right.axpy(-p, &left, 1.0);
            for j in 0..=l {
                let c = coef[(l, j)];
                coef[(k, j)] -= p * c;
            }
        }
        let norm = weighted_dot(values.column(k).as_slice(), values.column(k).as_slice(), r).sqrt();
        if !(norm > tol * reference[k]) || !norm.is_finite() {
            return Err(k);
        }
        values.column_mut(k).scale_mut(1.0 / norm);
        for j in 0..=k {
            coef[(k, j)] /= norm;
        }
        norms.push(norm);
    }
    Ok(norms)
}

/// Orthonormality defect above which a second Gram-Schmidt pass is run.
pub const REORTHOGONALIZATION_THRESHOLD: f64 = 1e-10;

/// Modified Gram-Schmidt in `[·, ·]_N` applied to `φ_1, ..., φ_K`.
///
/// Breakdown (`||π̃_k||_N <= tol · ||φ_k||_N`) is reported through
/// [`DobFactorization::breakdown`]; it means the nodes with `r_n > 0` are not
/// unisolvent.
pub fn gram_schmidt_dob(phi: &VandermondeMatrix, r: &DiscreteWeights, tol: f64) -> Result<DobFactorization> {
    let (k, n) = (phi.rows(), phi.cols());
    if r.len() != n {
        return Err(CubatureError::DimensionMismatch {
            expected: n,
            got: r.len(),
        });
    }
    if !(r.values().iter().sum::<f64>() > 0.0) {
        return Err(CubatureError::InvalidArgument(
            "discrete weights sum to zero".into(),
        ));
    }
    let rv = r.values();
    let mut values = phi.matrix.transpose();
    let reference: Vec<f64> = (0..k)
        .map(|j| weighted_dot(values.column(j).as_slice(), values.column(j).as_slice(), rv).sqrt())
        .collect();
    let mut coef = DMatrix::identity(k, k);
    let norms = match mgs_pass(&mut values, &mut coef, rv, tol, &reference) {
        Ok(norms) => norms,
        Err(index) => {
            return Ok(DobFactorization {
                coefficients: coef,
                values,
                norms: Vec::new(),
                breakdown: Some(index),
                reorthogonalized: false,
            })
        }
    };
    let mut reorthogonalized = false;
    if orthonormality_defect(&values, rv) > REORTHOGONALIZATION_THRESHOLD {
        let ones = vec![1.0; k];
        if let Err(index) = mgs_pass(&mut values, &mut coef, rv, tol, &ones) {
            return Ok(DobFactorization {
                coefficients: coef,
                values,
                norms,
                breakdown: Some(index),
                reorthogonalized: true,
            });
        }
        reorthogonalized = true;
    }
    Ok(DobFactorization {
        coefficients: coef,
        values,
        norms,
        breakdown: None,
        reorthogonalized,
    })
}

/// `max_k |Σ_n w_n φ_k(x_n) - m_k|`.
pub fn exactness_residual(phi: &DMatrix<f64>, weights: &[f64], moments: &[f64]) -> f64 {
    let w = DVector::from_column_slice(weights);
    let got = phi * w;
    got.iter()
        .zip(moments)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn dob_weights(dob: &DobFactorization, r: &[f64], moments: &DVector<f64>) -> Vec<f64> {
    let dob_moments = &dob.coefficients * moments;
    let sums = &dob.values * dob_moments;
    sums.iter()
        .zip(r)
        .map(|(s, &rn)| if rn > 0.0 { rn * s } else { 0.0 })
        .collect()
}

/// LS weights `w_n = r_n Σ_k π_k(x_n) I[π_k]` with `I[π_k] = (C m)_k`.
///
/// One step of iterative refinement is applied with the same factorization,
/// which keeps the solution in the range of `R Φ^T` (hence minimal norm).
/// Entries with `r_n = 0` are exactly zero.
pub fn ls_weights(dob: &DobFactorization, phi: &VandermondeMatrix, r: &DiscreteWeights, m: &MomentVector) -> Result<Vec<f64>> {
    if let Some(index) = dob.breakdown {
        return Err(CubatureError::Breakdown { index });
    }
    if m.len() != dob.size() || phi.rows() != dob.size() {
        return Err(CubatureError::DimensionMismatch {
            expected: dob.size(),
            got: m.len(),
        });
    }
    let rv = r.values();
    let moments = DVector::from_column_slice(m.values());
    let mut w = dob_weights(dob, rv, &moments);
    let correction_rhs = &moments - &phi.matrix * DVector::from_column_slice(&w);
    let correction = dob_weights(dob, rv, &correction_rhs);
    for (wn, c) in w.iter_mut().zip(correction) {
        *wn += c;
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsConfig {
    /// Relative Gram-Schmidt breakdown tolerance.
    pub rank_tol: f64,
    /// Weights in `[-neg_weight_tol · max w, 0)` are clamped to zero.
    pub neg_weight_tol: f64,
    /// Largest `N` tried; `None` means `2^20 · K`.
    pub n_cap: Option<usize>,
    pub growth_factor: f64,
}

impl Default for LsConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            neg_weight_tol: 1e-12,
            n_cap: None,
            growth_factor: 2.0,
        }
    }
}

/// One iteration of the doubling loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsAttempt {
    pub nodes: usize,
    pub unisolvent: bool,
    pub min_weight: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LsResult {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub discrete_weights: DiscreteWeights,
    pub dob: DobFactorization,
    pub residual: f64,
    pub history: Vec<LsAttempt>,
}

/// Doubles `N` (starting at `K`) until the LS weights on the first `N` in-domain
/// sequence points are nonnegative.
pub fn construct_nonnegative_ls_cf(
    space: &FunctionSpace,
    weight: &WeightFunction,
    volume: f64,
    moments: &MomentVector,
    seq: &mut PointSequence,
    config: &LsConfig,
) -> Result<LsResult> {
    let k = space.size();
    if moments.len() != k {
        return Err(CubatureError::DimensionMismatch {
            expected: k,
            got: moments.len(),
        });
    }
    if seq.domain().dimension() != space.dimension() {
        return Err(CubatureError::DimensionMismatch {
            expected: space.dimension(),
            got: seq.domain().dimension(),
        });
    }
    if !(config.growth_factor > 1.0) {
        return Err(CubatureError::InvalidArgument(
            "growth factor must exceed 1".into(),
        ));
    }
    let cap = config.n_cap.unwrap_or(k.saturating_mul(1 << 20));
    let mut n = k;
    let mut history = Vec::new();
    let mut last_min = None;
    loop {
        if n > cap {
            return Err(CubatureError::NodeCapExceeded {
                cap,
                last_min_weight: last_min,
            });
        }
        let nodes = seq.first_n_in_domain(n)?.to_vec();
        let r = discrete_weights(&nodes, weight, volume)?;
        let phi = vandermonde(space, &nodes)?;
        let dob = if r.positive_count() >= k {
            gram_schmidt_dob(&phi, &r, config.rank_tol)?
        } else {
            DobFactorization {
                coefficients: DMatrix::zeros(k, k),
                values: DMatrix::zeros(n, k),
                norms: Vec::new(),
                breakdown: Some(0),
                reorthogonalized: false,
            }
        };
        if dob.breakdown.is_some() {
            debug!("N = {n}: nodes not unisolvent");
            history.push(LsAttempt {
                nodes: n,
                unisolvent: false,
                min_weight: None,
            });
        } else {
            let mut w = ls_weights(&dob, &phi, &r, moments)?;
            let (min, max) = w
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            debug!("N = {n}: min weight {min:e}");
            history.push(LsAttempt {
                nodes: n,
                unisolvent: true,
                min_weight: Some(min),
            });
            last_min = Some(min);
            let tol = config.neg_weight_tol * max.max(0.0);
            if min >= -tol {
                for wn in w.iter_mut().filter(|wn| **wn < 0.0) {
                    *wn = 0.0;
                }
                let residual = exactness_residual(&phi.matrix, &w, moments.values());
                return Ok(LsResult {
                    nodes,
                    weights: w,
                    discrete_weights: r,
                    dob,
                    residual,
                    history,
                });
            }
        }
        n = ((n as f64 * config.growth_factor).ceil() as usize).max(n + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::moments::{analytic_moments, MomentProvenance};
    use crate::sequences::SequenceKind;
    use approx::assert_relative_eq;

    fn vm(space: &FunctionSpace, nodes: &[Vec<f64>]) -> VandermondeMatrix {
        vandermonde(space, nodes).unwrap()
    }

    #[test]
    fn discrete_weight_examples() {
        let four: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 * 0.1, 0.0]).collect();
        let r = discrete_weights(&four, &WeightFunction::One, 4.0).unwrap();
        assert_eq!(r.values(), &[1.0; 4]);
        let eight: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.1, 0.0]).collect();
        let r = discrete_weights(&eight, &WeightFunction::One, 4.0).unwrap();
        assert_eq!(r.values(), &[0.5; 8]);
        let r = discrete_weights(&[vec![0.0, 0.0, 0.0]], &WeightFunction::sqrt_norm(), 1.0).unwrap();
        assert_eq!(r.values(), &[0.0]);
        let neg = WeightFunction::Custom {
            evaluator: std::sync::Arc::new(|_: &[f64]| -1.0),
            zero_set_nowhere_dense: true,
        };
        assert!(matches!(
            discrete_weights(&four, &neg, 4.0),
            Err(CubatureError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn inner_product_examples() {
        let r = DiscreteWeights::new(vec![1.0; 4]).unwrap();
        assert_eq!(discrete_inner_product(&[1.0; 4], &[1.0; 4], &r).unwrap(), 4.0);
        assert_eq!(
            discrete_inner_product(&[1.0; 4], &[-1.0, -0.5, 0.5, 1.0], &r).unwrap(),
            0.0
        );
        let r2 = DiscreteWeights::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(discrete_inner_product(&[-1.0, 1.0], &[-1.0, 1.0], &r2).unwrap(), 2.0);
        assert!(discrete_inner_product(&[1.0], &[1.0, 2.0], &r2).is_err());
    }

    #[test]
    fn dob_constant_only() {
        let s = FunctionSpace::algebraic(2, 0).unwrap();
        let nodes: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let r = DiscreteWeights::new(vec![1.0; 4]).unwrap();
        let dob = gram_schmidt_dob(&vm(&s, &nodes), &r, 1e-10).unwrap();
        assert_eq!(dob.breakdown, None);
        assert_relative_eq!(dob.coefficients[(0, 0)], 0.5);
        assert!(dob.values.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn dob_two_points() {
        let s = FunctionSpace::algebraic(1, 1).unwrap();
        let r = DiscreteWeights::new(vec![1.0, 1.0]).unwrap();
        let dob = gram_schmidt_dob(&vm(&s, &[vec![-1.0], vec![1.0]]), &r, 1e-10).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_relative_eq!(dob.coefficients[(0, 0)], h, epsilon = 1e-15);
        assert_relative_eq!(dob.coefficients[(1, 0)], 0.0, epsilon = 1e-15);
        assert_relative_eq!(dob.coefficients[(1, 1)], h, epsilon = 1e-15);
        assert_eq!(dob.coefficients[(0, 1)], 0.0);
    }

    #[test]
    fn dob_breakdown_on_single_effective_node() {
        let s = FunctionSpace::algebraic(1, 1).unwrap();
        let r = DiscreteWeights::new(vec![1.0, 0.0, 0.0]).unwrap();
        let dob = gram_schmidt_dob(&vm(&s, &[vec![0.3], vec![0.5], vec![0.9]]), &r, 1e-10).unwrap();
        assert_eq!(dob.breakdown, Some(1));
        let m = MomentVector::new(vec![1.0, 0.0], MomentProvenance::Analytic).unwrap();
        assert!(matches!(
            ls_weights(&dob, &vm(&s, &[vec![0.3], vec![0.5], vec![0.9]]), &r, &m),
            Err(CubatureError::Breakdown { index: 1 })
        ));
    }

    #[test]
    fn ls_weight_examples() {
        let s = FunctionSpace::algebraic(2, 0).unwrap();
        let nodes = vec![vec![-0.5, -0.5], vec![0.5, -0.5], vec![-0.5, 0.5], vec![0.5, 0.5]];
        let r = DiscreteWeights::new(vec![1.0; 4]).unwrap();
        let phi = vm(&s, &nodes);
        let dob = gram_schmidt_dob(&phi, &r, 1e-10).unwrap();
        let m = MomentVector::new(vec![4.0], MomentProvenance::Analytic).unwrap();
        let w = ls_weights(&dob, &phi, &r, &m).unwrap();
        for wn in w {
            assert_relative_eq!(wn, 1.0, epsilon = 1e-14);
        }

        // {1, x} on [-1, 1], nodes {-1, 0, 1}, r = 2/3: pseudoinverse gives 2/3 each
        let s = FunctionSpace::algebraic(1, 1).unwrap();
        let phi = vm(&s, &[vec![-1.0], vec![0.0], vec![1.0]]);
        let r = DiscreteWeights::new(vec![2.0 / 3.0; 3]).unwrap();
        let dob = gram_schmidt_dob(&phi, &r, 1e-10).unwrap();
        let m = MomentVector::new(vec![2.0, 0.0], MomentProvenance::Analytic).unwrap();
        let w = ls_weights(&dob, &phi, &r, &m).unwrap();
        for wn in &w {
            assert_relative_eq!(*wn, 2.0 / 3.0, epsilon = 1e-14);
        }
        assert!(exactness_residual(&phi.matrix, &w, m.values()) <= 1e-10 * 3.0);
    }

    #[test]
    fn zero_discrete_weight_gives_zero_ls_weight() {
        let s = FunctionSpace::algebraic(1, 1).unwrap();
        let phi = vm(&s, &[vec![-1.0], vec![0.0], vec![0.4], vec![1.0]]);
        let r = DiscreteWeights::new(vec![0.5, 0.0, 0.5, 0.5]).unwrap();
        let dob = gram_schmidt_dob(&phi, &r, 1e-10).unwrap();
        let m = MomentVector::new(vec![2.0, 0.0], MomentProvenance::Analytic).unwrap();
        let w = ls_weights(&dob, &phi, &r, &m).unwrap();
        assert_eq!(w[1], 0.0);
    }

    #[test]
    fn cube_degree_zero_terminates_at_one_node() {
        let c = Domain::cube(&[0.0, 0.0], 1.0).unwrap();
        let s = FunctionSpace::algebraic(2, 0).unwrap();
        let m = analytic_moments(&s, &c, &WeightFunction::One).unwrap().unwrap();
        let mut seq = PointSequence::new(SequenceKind::Bisection, c).unwrap();
        let res = construct_nonnegative_ls_cf(&s, &WeightFunction::One, 4.0, &m, &mut seq, &LsConfig::default()).unwrap();
        assert_eq!(res.nodes.len(), 1);
        assert_relative_eq!(res.weights[0], 4.0, epsilon = 1e-14);
        assert_eq!(res.history.len(), 1);
    }

    #[test]
    fn cube_degree_two_is_nonnegative_and_exact() {
        let c = Domain::cube(&[0.0, 0.0], 1.0).unwrap();
        let s = FunctionSpace::algebraic(2, 2).unwrap();
        let m = analytic_moments(&s, &c, &WeightFunction::One).unwrap().unwrap();
        let mut seq = PointSequence::new(SequenceKind::Bisection, c).unwrap();
        let res = construct_nonnegative_ls_cf(&s, &WeightFunction::One, 4.0, &m, &mut seq, &LsConfig::default()).unwrap();
        let n = res.nodes.len();
        assert!(n.is_multiple_of(6) && (n / 6).is_power_of_two(), "N = {n}");
        assert!(res.weights.iter().all(|&w| w >= 0.0));
        assert!(res.residual <= 1e-10 * (1.0 + m.max_abs()));
        assert!(res.dob.orthonormality_defect(&res.discrete_weights) <= 1e-8);
    }

    #[test]
    fn node_cap_is_reported() {
        let c = Domain::cube(&[0.0, 0.0], 1.0).unwrap();
        let s = FunctionSpace::algebraic(2, 4).unwrap();
        let m = analytic_moments(&s, &c, &WeightFunction::One).unwrap().unwrap();
        let mut seq = PointSequence::new(SequenceKind::Bisection, c).unwrap();
        let cfg = LsConfig {
            n_cap: Some(20),
            ..LsConfig::default()
        };
        let err = construct_nonnegative_ls_cf(&s, &WeightFunction::One, 4.0, &m, &mut seq, &cfg).unwrap_err();
        assert!(matches!(err, CubatureError::NodeCapExceeded { cap: 20, .. }));
    }
}
