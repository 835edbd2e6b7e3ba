//! The cubature rule value type `C_N[f] = Σ w_n f(x_n)`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};
use crate::function_space::{FunctionSpace, SpaceDescriptor};
use crate::moments::{MomentProvenance, MomentVector};

/// Relative distinctness tolerance, scaled by the diameter of the node set.
pub const DISTINCTNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CubatureMetadata {
    pub space: Option<SpaceDescriptor>,
    pub moment_provenance: Option<MomentProvenance>,
    pub residual: Option<f64>,
}

/// A cubature rule with distinct nodes and strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Cubature {
    dimension: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    metadata: CubatureMetadata,
}

pub(crate) fn check_distinct(nodes: &[Vec<f64>]) -> Result<()> {
    if nodes.len() < 2 {
        return Ok(());
    }
    let d = nodes[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in nodes {
        for i in 0..d {
            lo[i] = lo[i].min(x[i]);
            hi[i] = hi[i].max(x[i]);
        }
    }
    let diameter = lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt();
    let tol = DISTINCTNESS_TOL * diameter;
    // sweep over nodes sorted by the first coordinate; only neighbours within
    // `tol` along that axis can violate the bound
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a][0].total_cmp(&nodes[b][0]));
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if nodes[j][0] - nodes[i][0] > tol {
                break;
            }
            let dist = nodes[i]
                .iter()
                .zip(&nodes[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if !(dist > tol) {
                return Err(CubatureError::Invariant(format!(
                    "nodes {i} and {j} coincide (distance {dist:e})"
                )));
            }
        }
    }
    Ok(())
}

impl Cubature {
    pub fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>, metadata: CubatureMetadata) -> Result<Self> {
        if nodes.is_empty() {
            return Err(CubatureError::Invariant("a rule needs at least one node".into()));
        }
        if nodes.len() != weights.len() {
            return Err(CubatureError::Invariant(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        let dimension = nodes[0].len();
        if dimension == 0 {
            return Err(CubatureError::Invariant("nodes must have at least one coordinate".into()));
        }
        for (n, x) in nodes.iter().enumerate() {
            if x.len() != dimension {
                return Err(CubatureError::Invariant(format!(
                    "node {n} has {} coordinates, expected {dimension}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(CubatureError::Invariant(format!("node {n} is not finite")));
            }
        }
        if let Some((n, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0) || !w.is_finite())
        {
            return Err(CubatureError::Invariant(format!(
                "weight {n} is {w}; weights must be positive"
            )));
        }
        check_distinct(&nodes)?;
        Ok(Self {
            dimension,
            nodes,
            weights,
            metadata,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn metadata(&self) -> &CubatureMetadata {
        &self.metadata
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_n f(x_n)`; fails on a non-finite function value.
    pub fn evaluate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<f64> {
        let mut sum = 0.0;
        for (n, (x, w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let v = f(x);
            if !v.is_finite() {
                return Err(CubatureError::NonFiniteValue(n));
            }
            sum += w * v;
        }
        Ok(sum)
    }

    /// `max_k |C_N[φ_k] - m_k|`.
    pub fn exactness_residual(&self, space: &FunctionSpace, moments: &MomentVector) -> Result<f64> {
        if space.dimension() != self.dimension {
            return Err(CubatureError::DimensionMismatch {
                expected: space.dimension(),
                got: self.dimension,
            });
        }
        if moments.len() != space.size() {
            return Err(CubatureError::DimensionMismatch {
                expected: space.size(),
                got: moments.len(),
            });
        }
        let mut sums = vec![0.0; space.size()];
        let mut phi = vec![0.0; space.size()];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            space.evaluate_into(x, &mut phi);
            for (s, p) in sums.iter_mut().zip(&phi) {
                *s += w * p;
            }
        }
        Ok(sums
            .iter()
            .zip(moments.values())
            .map(|(s, m)| (s - m).abs())
            .fold(0.0, f64::max))
    }

    pub fn to_document(&self) -> RuleDocument {
        let (provenance, samples, error) = match self.metadata.moment_provenance {
            Some(MomentProvenance::Analytic) => (Some("analytic".to_string()), None, None),
            Some(MomentProvenance::Qmc {
                samples,
                error_estimate,
            }) => (Some("qmc".to_string()), Some(samples), Some(error_estimate)),
            None => (None, None, None),
        };
        RuleDocument {
            dimension: self.dimension,
            space: self.metadata.space.clone(),
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            residual: self.metadata.residual,
            moment_provenance: provenance,
            qmc_samples: samples,
            qmc_error_estimate: error,
        }
    }

    pub fn from_document(doc: RuleDocument) -> Result<Self> {
        let provenance = match doc.moment_provenance.as_deref() {
            None => None,
            Some("analytic") => Some(MomentProvenance::Analytic),
            Some("qmc") => Some(MomentProvenance::Qmc {
                samples: doc.qmc_samples.ok_or_else(|| {
                    CubatureError::Schema("qmc provenance requires `qmc_samples`".into())
                })?,
                error_estimate: doc.qmc_error_estimate.unwrap_or(f64::NAN),
            }),
            Some(other) => {
                return Err(CubatureError::Schema(format!(
                    "unknown moment provenance `{other}`"
                )))
            }
        };
        let cf = Cubature::new(
            doc.nodes,
            doc.weights,
            CubatureMetadata {
                space: doc.space,
                moment_provenance: provenance,
                residual: doc.residual,
            },
        )?;
        if cf.dimension != doc.dimension {
            return Err(CubatureError::Schema(format!(
                "declared dimension {} but nodes have {}",
                doc.dimension, cf.dimension
            )));
        }
        Ok(cf)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RuleDocument =
            serde_json::from_str(text).map_err(|e| CubatureError::Schema(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One row `x_1,...,x_d,w` per node, with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dimension)
            .map(|i| format!("x_{i}"))
            .chain(std::iter::once("w".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let row: Vec<String> = x.iter().chain(std::iter::once(w)).map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// On-disk JSON layout of a rule.
///
/// Floats are written in shortest round-trip form, so reading a document back
/// reproduces the node and weight arrays bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDocument {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceDescriptor>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_provenance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qmc_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qmc_error_estimate: Option<f64>,
}
