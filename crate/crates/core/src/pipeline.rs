//! End-to-end construction: nonnegative LS rule, then Steinitz reduction.

use log::info;
use serde::{Deserialize, Serialize};

use crate::cubature::{Cubature, CubatureMetadata};
use crate::error::{CubatureError, Result};
use crate::function_space::FunctionSpace;
use crate::geometry::{Domain, WeightFunction};
use crate::ls_cubature::{construct_nonnegative_ls_cf, LsAttempt, LsConfig};
use crate::moments::{compute_moments, domain_volume, MomentMode, MomentVector, DEFAULT_QMC_SAMPLES};
use crate::sequences::{PointSequence, SequenceKind, DEFAULT_REJECTION_CAP};
use crate::steinitz::{reduce, ReductionTrace, SteinitzConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructionConfig {
    /// `None` picks bisection for `d <= 2` and Halton otherwise.
    pub sequence: Option<SequenceKind>,
    pub moments: MomentMode,
    pub qmc_samples: usize,
    pub rejection_cap: usize,
    pub ls: LsConfig,
    pub steinitz: SteinitzConfig,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        Self {
            sequence: None,
            moments: MomentMode::Auto,
            qmc_samples: DEFAULT_QMC_SAMPLES,
            rejection_cap: DEFAULT_REJECTION_CAP,
            ls: LsConfig::default(),
            steinitz: SteinitzConfig::default(),
        }
    }
}

/// Summary of a construction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionTrace {
    pub space_size: usize,
    pub sequence: SequenceKind,
    pub ls_history: Vec<LsAttempt>,
    pub ls_nodes: usize,
    pub ls_residual: f64,
    pub reduction: ReductionTrace,
}

impl ConstructionTrace {
    /// Human-readable multi-line report.
    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("K = {}, sequence = {}\n", self.space_size, self.sequence));
        out.push_str("least-squares stage:\n");
        for a in &self.ls_history {
            match a.min_weight {
                Some(min) => out.push_str(&format!("  N = {:>8}  min weight = {min:+.3e}\n", a.nodes)),
                None => out.push_str(&format!("  N = {:>8}  not unisolvent\n", a.nodes)),
            }
        }
        out.push_str(&format!(
            "  nonnegative rule with {} nodes, residual {:.3e}\n",
            self.ls_nodes, self.ls_residual
        ));
        let r = &self.reduction;
        out.push_str(&format!(
            "reduction: {} zero weights pruned, {} Steinitz steps\n",
            r.pruned_zero_weights,
            r.steps.len()
        ));
        out.push_str(&format!(
            "  residual before refinement {:.3e}, after {:.3e}",
            r.residual_before_refinement, r.final_residual
        ));
        match r.refinement_accepted {
            Some(true) => out.push_str(" (refinement accepted)\n"),
            Some(false) => out.push_str(" (refinement rejected)\n"),
            None => out.push('\n'),
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Construction {
    pub cubature: Cubature,
    pub moments: MomentVector,
    pub trace: ConstructionTrace,
}

/// Builds a positive rule with at most `K` nodes inside `domain` that is exact
/// on `space` with respect to the computed moments.
pub fn construct(
    domain: &Domain,
    weight: &WeightFunction,
    space: &FunctionSpace,
    config: &ConstructionConfig,
) -> Result<Construction> {
    let moments = compute_moments(space, domain, weight, config.moments, config.qmc_samples)?;
    construct_with_moments(domain, weight, space, moments, config)
}

/// Like [`construct`], with caller-supplied moments.
pub fn construct_with_moments(
    domain: &Domain,
    weight: &WeightFunction,
    space: &FunctionSpace,
    moments: MomentVector,
    config: &ConstructionConfig,
) -> Result<Construction> {
    if domain.dimension() != space.dimension() {
        return Err(CubatureError::DimensionMismatch {
            expected: domain.dimension(),
            got: space.dimension(),
        });
    }
    let kind = config
        .sequence
        .unwrap_or_else(|| SequenceKind::default_for(domain.dimension()));
    let volume = domain_volume(domain, config.qmc_samples)?;
    let mut seq = PointSequence::new(kind, domain.clone())?.with_rejection_cap(config.rejection_cap);
    let ls = construct_nonnegative_ls_cf(space, weight, volume, &moments, &mut seq, &config.ls)?;
    info!(
        "nonnegative LS rule: N = {} after {} attempts",
        ls.nodes.len(),
        ls.history.len()
    );
    let reduction = reduce(&ls.nodes, &ls.weights, space, &moments, &config.steinitz)?;
    if reduction.nodes.len() > space.size() {
        return Err(CubatureError::Invariant(format!(
            "{} nodes remain for K = {}",
            reduction.nodes.len(),
            space.size()
        )));
    }
    if let Some(x) = reduction.nodes.iter().find(|x| !domain.contains(x)) {
        return Err(CubatureError::Invariant(format!("node {x:?} lies outside the domain")));
    }
    let cubature = Cubature::new(
        reduction.nodes,
        reduction.weights,
        CubatureMetadata {
            space: Some(space.descriptor()),
            moment_provenance: Some(moments.provenance()),
            residual: Some(reduction.residual),
        },
    )?;
    let trace = ConstructionTrace {
        space_size: space.size(),
        sequence: kind,
        ls_nodes: ls.nodes.len(),
        ls_residual: ls.residual,
        ls_history: ls.history,
        reduction: reduction.trace,
    };
    Ok(Construction {
        cubature,
        moments,
        trace,
    })
}
