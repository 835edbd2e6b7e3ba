//! Exactness spaces `F_K(Ω)` and the matrix `Φ(X_N)` of the exactness system.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};
use crate::geometry::Domain;
use crate::sequences::{PointSequence, SequenceKind};

/// Basis function supplied by the caller.
pub type BasisFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Algebraic,
    Trigonometric,
    Custom,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceKind::Algebraic => "algebraic",
            SpaceKind::Trigonometric => "trigonometric",
            SpaceKind::Custom => "custom",
        })
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = CubatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(SpaceKind::Algebraic),
            "trigonometric" | "trig" => Ok(SpaceKind::Trigonometric),
            "custom" => Ok(SpaceKind::Custom),
            other => Err(CubatureError::InvalidArgument(format!(
                "unknown space kind `{other}`"
            ))),
        }
    }
}

/// Serializable description of a function space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub kind: SpaceKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    /// Number of basis functions `K`.
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// `cos(2π α·x)` or `sin(2π α·x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigTerm {
    pub frequency: Vec<i32>,
    pub kind: Trig,
}

#[derive(Clone)]
enum Basis {
    Monomials(Vec<Vec<u32>>),
    Trig(Vec<TrigTerm>),
    Custom(Vec<BasisFn>),
}

/// Ordered basis `φ_1, ..., φ_K` with `φ_1 ≡ 1`.
#[derive(Clone)]
pub struct FunctionSpace {
    dimension: usize,
    degree: Option<u32>,
    basis: Basis,
}

impl fmt::Debug for FunctionSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpace")
            .field("kind", &self.kind())
            .field("dimension", &self.dimension)
            .field("degree", &self.degree)
            .field("size", &self.size())
            .finish()
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// All `α` in `N^d` with `|α| = total`, lexicographically descending.
fn compositions(d: usize, total: u32) -> Vec<Vec<u32>> {
    if d == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(d - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Graded-lexicographic exponents of all monomials of total degree `<= m`.
pub fn monomial_exponents(d: usize, m: u32) -> Vec<Vec<u32>> {
    (0..=m).flat_map(|t| compositions(d, t)).collect()
}

/// One representative per `±α` pair with `0 < |α|_1 <= m`: the first nonzero
/// entry is positive. Graded by `|α|_1`, lexicographically descending within a
/// grade.
pub fn trig_frequencies(d: usize, m: u32) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    for t in 1..=m {
        for abs in compositions(d, t) {
            // expand signs of nonzero entries, keep the canonical half-space
            let nz: Vec<usize> = (0..d).filter(|&i| abs[i] > 0).collect();
            let mut group = Vec::new();
            for mask in 0u32..(1 << nz.len()) {
                if mask & 1 == 1 {
                    continue; // first nonzero entry must stay positive
                }
                let mut alpha: Vec<i32> = abs.iter().map(|&a| a as i32).collect();
                for (bit, &i) in nz.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        alpha[i] = -alpha[i];
                    }
                }
                group.push(alpha);
            }
            group.sort_by(|a, b| b.cmp(a));
            out.extend(group);
        }
    }
    out
}

impl FunctionSpace {
    /// Monomials `x^α` with `|α| <= m`; `K = binom(m + d, d)`.
    pub fn algebraic(dimension: usize, degree: u32) -> Result<Self> {
        if dimension == 0 {
            return Err(CubatureError::InvalidArgument("dimension must be >= 1".into()));
        }
        Ok(Self {
            dimension,
            degree: Some(degree),
            basis: Basis::Monomials(monomial_exponents(dimension, degree)),
        })
    }

    /// Real trigonometric polynomials of total degree `<= m` with period 1 per
    /// coordinate: `1`, then `cos(2π α·x)`, `sin(2π α·x)` per representative `α`.
    pub fn trigonometric(dimension: usize, degree: u32) -> Result<Self> {
        if dimension == 0 {
            return Err(CubatureError::InvalidArgument("dimension must be >= 1".into()));
        }
        let mut terms = vec![TrigTerm {
            frequency: vec![0; dimension],
            kind: Trig::Cos,
        }];
        for alpha in trig_frequencies(dimension, degree) {
            terms.push(TrigTerm {
                frequency: alpha.clone(),
                kind: Trig::Cos,
            });
            terms.push(TrigTerm {
                frequency: alpha,
                kind: Trig::Sin,
            });
        }
        Ok(Self {
            dimension,
            degree: Some(degree),
            basis: Basis::Trig(terms),
        })
    }

    /// Wraps caller-supplied basis functions. The first must be the constant 1;
    /// this is spot-checked at 8 deterministic points of `domain`.
    pub fn custom(domain: &Domain, evaluators: Vec<BasisFn>) -> Result<Self> {
        let first = evaluators
            .first()
            .ok_or_else(|| CubatureError::InvalidArgument("basis must not be empty".into()))?;
        let mut seq = PointSequence::new(SequenceKind::Halton, domain.clone())?;
        for x in seq.first_n_in_domain(8)? {
            let v = first(x);
            if v != 1.0 {
                return Err(CubatureError::NotConstantOne(format!(
                    "first basis function is {v} at {x:?}"
                )));
            }
        }
        Ok(Self {
            dimension: domain.dimension(),
            degree: None,
            basis: Basis::Custom(evaluators),
        })
    }

    pub fn from_descriptor(kind: SpaceKind, dimension: usize, degree: u32) -> Result<Self> {
        match kind {
            SpaceKind::Algebraic => Self::algebraic(dimension, degree),
            SpaceKind::Trigonometric => Self::trigonometric(dimension, degree),
            SpaceKind::Custom => Err(CubatureError::Unsupported(
                "custom spaces are only available through the library API".into(),
            )),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        match self.basis {
            Basis::Monomials(_) => SpaceKind::Algebraic,
            Basis::Trig(_) => SpaceKind::Trigonometric,
            Basis::Custom(_) => SpaceKind::Custom,
        }
    }

    /// Spatial dimension `d`.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> Option<u32> {
        self.degree
    }

    /// Number of basis functions `K`.
    pub fn size(&self) -> usize {
        match &self.basis {
            Basis::Monomials(e) => e.len(),
            Basis::Trig(t) => t.len(),
            Basis::Custom(f) => f.len(),
        }
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor {
            kind: self.kind(),
            dimension: self.dimension,
            degree: self.degree,
            size: self.size(),
        }
    }

    pub fn monomials(&self) -> Option<&[Vec<u32>]> {
        match &self.basis {
            Basis::Monomials(e) => Some(e),
            _ => None,
        }
    }

    pub fn trig_terms(&self) -> Option<&[TrigTerm]> {
        match &self.basis {
            Basis::Trig(t) => Some(t),
            _ => None,
        }
    }

    /// Writes `φ_k(x)` for all `k` into `out`.
    pub fn evaluate_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.size());
        match &self.basis {
            Basis::Monomials(exps) => {
                let m = self.degree.unwrap_or(0) as usize;
                // powers[i * (m + 1) + e] = x_i^e
                let mut powers = vec![1.0; self.dimension * (m + 1)];
                for (i, &xi) in x.iter().enumerate() {
                    for e in 1..=m {
                        powers[i * (m + 1) + e] = powers[i * (m + 1) + e - 1] * xi;
                    }
                }
                for (o, alpha) in out.iter_mut().zip(exps) {
                    *o = alpha
                        .iter()
                        .enumerate()
                        .map(|(i, &a)| powers[i * (m + 1) + a as usize])
                        .product();
                }
            }
            Basis::Trig(terms) => {
                for (o, term) in out.iter_mut().zip(terms) {
                    let phase: f64 = term
                        .frequency
                        .iter()
                        .zip(x)
                        .map(|(&a, &xi)| a as f64 * xi)
                        .sum::<f64>()
                        * 2.0
                        * PI;
                    *o = match term.kind {
                        Trig::Cos => phase.cos(),
                        Trig::Sin => phase.sin(),
                    };
                }
            }
            Basis::Custom(fs) => {
                for (o, f) in out.iter_mut().zip(fs) {
                    *o = f(x);
                }
            }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        self.evaluate_into(x, &mut out);
        out
    }
}

/// `Φ(X_N)` with entries `φ_k(x_n)`: `K` rows, `N` columns.
#[derive(Debug, Clone)]
pub struct VandermondeMatrix {
    pub matrix: DMatrix<f64>,
    pub nodes: Vec<Vec<f64>>,
}

impl VandermondeMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn vandermonde(space: &FunctionSpace, nodes: &[Vec<f64>]) -> Result<VandermondeMatrix> {
    if nodes.is_empty() {
        return Err(CubatureError::InvalidArgument("need at least one node".into()));
    }
    let k = space.size();
    let mut matrix = DMatrix::zeros(k, nodes.len());
    for (n, x) in nodes.iter().enumerate() {
        if x.len() != space.dimension() {
            return Err(CubatureError::DimensionMismatch {
                expected: space.dimension(),
                got: x.len(),
            });
        }
        let mut col = matrix.column_mut(n);
        space.evaluate_into(x, col.as_mut_slice());
        if let Some(basis) = col.iter().position(|v| !v.is_finite()) {
            return Err(CubatureError::NonFiniteBasis { basis, node: n });
        }
    }
    Ok(VandermondeMatrix {
        matrix,
        nodes: nodes.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn algebraic_dimensions() {
        assert_eq!(FunctionSpace::algebraic(3, 2).unwrap().size(), 10);
        assert_eq!(FunctionSpace::algebraic(2, 1).unwrap().size(), 3);
        let p0 = FunctionSpace::algebraic(2, 0).unwrap();
        assert_eq!(p0.size(), 1);
        assert_eq!(p0.evaluate(&[0.3, -2.0]), vec![1.0]);
        for d in 1..=4 {
            for m in 0..=8 {
                let s = FunctionSpace::algebraic(d, m).unwrap();
                assert_eq!(s.size() as u64, binomial(m as u64 + d as u64, d as u64));
            }
        }
    }

    #[test]
    fn graded_lex_order() {
        let e = monomial_exponents(2, 2);
        assert_eq!(
            e,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn trig_basis_enumeration() {
        let s = FunctionSpace::trigonometric(1, 1).unwrap();
        assert_eq!(s.size(), 3);
        let v = s.evaluate(&[0.25]);
        assert_relative_eq!(v[0], 1.0);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(v[2], 1.0);
        assert_eq!(FunctionSpace::trigonometric(2, 0).unwrap().size(), 1);
        // d = 2, m = 1: α in {(1,0), (0,1)}
        assert_eq!(trig_frequencies(2, 1), vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(FunctionSpace::trigonometric(2, 1).unwrap().size(), 5);
        // d = 2, m = 2 adds (2,0), (1,1), (1,-1), (0,2)
        assert_eq!(FunctionSpace::trigonometric(2, 2).unwrap().size(), 13);
    }

    #[test]
    fn trig_frequencies_cover_each_pair_once() {
        for d in 1..=3 {
            for m in 0..=3 {
                let reps = trig_frequencies(d, m);
                for a in &reps {
                    let neg: Vec<i32> = a.iter().map(|v| -v).collect();
                    assert!(!reps.contains(&neg));
                }
                // brute force count of nonzero α with |α|_1 <= m
                let mut count = 0usize;
                let range = -(m as i32)..=(m as i32);
                let mut stack = vec![vec![]];
                while let Some(v) = stack.pop() {
                    if v.len() == d {
                        let l1: i32 = v.iter().map(|x: &i32| x.abs()).sum();
                        if l1 > 0 && l1 <= m as i32 {
                            count += 1;
                        }
                        continue;
                    }
                    for c in range.clone() {
                        let mut w = v.clone();
                        w.push(c);
                        stack.push(w);
                    }
                }
                assert_eq!(2 * reps.len(), count);
            }
        }
    }

    #[test]
    fn custom_space_checks_constant() {
        let b = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
        let s = FunctionSpace::custom(
            &b,
            vec![
                Arc::new(|_: &[f64]| 1.0),
                Arc::new(|x: &[f64]| x[0].hypot(x[1])),
            ],
        )
        .unwrap();
        assert_eq!(s.size(), 2);
        let s = FunctionSpace::custom(
            &b,
            vec![Arc::new(|_: &[f64]| 1.0), Arc::new(|x: &[f64]| x[0].exp())],
        )
        .unwrap();
        assert_eq!(s.size(), 2);
        let err = FunctionSpace::custom(
            &b,
            vec![Arc::new(|_: &[f64]| 2.0), Arc::new(|x: &[f64]| x[0])],
        )
        .unwrap_err();
        assert!(matches!(err, CubatureError::NotConstantOne(_)));
    }

    #[test]
    fn vandermonde_examples() {
        let s = FunctionSpace::algebraic(1, 1).unwrap();
        let v = vandermonde(&s, &[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(
            v.matrix,
            DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, -1.0, 0.0, 1.0])
        );
        let s = FunctionSpace::algebraic(2, 1).unwrap();
        let v = vandermonde(&s, &[vec![1.0 / 3.0, -1.0 / 3.0]]).unwrap();
        assert_eq!(v.cols(), 1);
        assert_eq!(v.matrix.column(0).as_slice(), &[1.0, 1.0 / 3.0, -1.0 / 3.0]);
    }

    #[test]
    fn vandermonde_reports_non_finite_node() {
        let b = Domain::cube(&[0.0], 1.0).unwrap();
        let s = FunctionSpace::custom(
            &b,
            vec![Arc::new(|_: &[f64]| 1.0), Arc::new(|x: &[f64]| 1.0 / x[0])],
        )
        .unwrap();
        let err = vandermonde(&s, &[vec![0.5], vec![0.0]]).unwrap_err();
        assert!(matches!(err, CubatureError::NonFiniteBasis { basis: 1, node: 1 }));
    }

    #[test]
    fn first_row_is_ones_and_unisolvent() {
        for (domain, kind) in [
            (Domain::cube(&[0.0, 0.0], 1.0).unwrap(), SequenceKind::Bisection),
            (Domain::ball(&[0.0, 0.0], 1.0).unwrap(), SequenceKind::Bisection),
            (Domain::ball(&[0.0, 0.0, 0.0], 1.0).unwrap(), SequenceKind::Halton),
        ] {
            let mut seq = PointSequence::new(kind, domain.clone()).unwrap();
            let nodes = seq.first_n_in_domain(400).unwrap().to_vec();
            for m in 0..=5 {
                let s = FunctionSpace::algebraic(domain.dimension(), m).unwrap();
                let v = vandermonde(&s, &nodes).unwrap();
                assert!(v.matrix.row(0).iter().all(|&x| x == 1.0));
                assert_eq!(v.matrix.rank(1e-10), s.size(), "m = {m}");
            }
        }
    }
}
