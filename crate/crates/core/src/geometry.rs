//! Compact integration domains and nonnegative weight functions.
//!
//! A [`Domain`] is an axis-aligned bounding box together with a closed
//! membership test and, when known in closed form, its volume. Standard shapes
//! (max-norm cubes and Euclidean balls) can be combined by union, intersection
//! and set difference.
//!
//! Two assumptions on inputs are documented here rather than checked: the
//! boundary of a domain has Lebesgue measure zero, and the zero set of a weight
//! function is nowhere dense. Neither is decidable from a membership oracle.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};

/// Membership predicate for custom domains.
pub type Indicator = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Pointwise evaluator for custom weight functions.
pub type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Shape {
    /// `{x : ||x - center||_inf <= radius}`
    Cube { center: Vec<f64>, radius: f64 },
    /// `{x : ||x - center||_2 <= radius}`
    Ball { center: Vec<f64>, radius: f64 },
    Union { parts: Vec<Domain>, disjoint: bool },
    Intersection { parts: Vec<Domain> },
    Difference { base: Box<Domain>, removed: Box<Domain> },
    Custom { indicator: Indicator },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Cube { center, radius } => f
                .debug_struct("Cube")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Shape::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Shape::Union { parts, disjoint } => f
                .debug_struct("Union")
                .field("parts", parts)
                .field("disjoint", disjoint)
                .finish(),
            Shape::Intersection { parts } => {
                f.debug_struct("Intersection").field("parts", parts).finish()
            }
            Shape::Difference { base, removed } => f
                .debug_struct("Difference")
                .field("base", base)
                .field("removed", removed)
                .finish(),
            Shape::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// How the volume of a domain is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Volume {
    Analytic(f64),
    /// Defer to a quasi-Monte Carlo estimate (see [`crate::moments::domain_volume`]).
    Estimate,
}

#[derive(Debug, Clone)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Shape,
    volume: Volume,
}

impl Domain {
    /// Max-norm ball `C_r(center)`.
    pub fn cube(center: &[f64], radius: f64) -> Result<Self> {
        check_center_radius(center, radius)?;
        let d = center.len();
        Ok(Self {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
            shape: Shape::Cube {
                center: center.to_vec(),
                radius,
            },
            volume: Volume::Analytic((2.0 * radius).powi(d as i32)),
        })
    }

    /// Euclidean ball `B_r(center)`.
    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        check_center_radius(center, radius)?;
        let d = center.len();
        Ok(Self {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
            shape: Shape::Ball {
                center: center.to_vec(),
                radius,
            },
            volume: Volume::Analytic(unit_ball_volume(d) * radius.powi(d as i32)),
        })
    }

    /// Union of two or more domains. The volume is the sum of the parts only
    /// when the caller asserts the parts are disjoint.
    pub fn union(parts: Vec<Domain>, disjoint: bool) -> Result<Self> {
        let d = common_dimension(&parts)?;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in &parts {
            for i in 0..d {
                lo[i] = lo[i].min(p.lo[i]);
                hi[i] = hi[i].max(p.hi[i]);
            }
        }
        let volume = match (disjoint, parts.iter().map(|p| p.volume).collect::<Vec<_>>()) {
            (true, vols) if vols.iter().all(|v| matches!(v, Volume::Analytic(_))) => {
                Volume::Analytic(
                    vols.iter()
                        .map(|v| match v {
                            Volume::Analytic(x) => *x,
                            Volume::Estimate => unreachable!(),
                        })
                        .sum(),
                )
            }
            _ => Volume::Estimate,
        };
        Ok(Self {
            lo,
            hi,
            shape: Shape::Union { parts, disjoint },
            volume,
        })
    }

    pub fn intersection(parts: Vec<Domain>) -> Result<Self> {
        let d = common_dimension(&parts)?;
        let mut lo = vec![f64::NEG_INFINITY; d];
        let mut hi = vec![f64::INFINITY; d];
        for p in &parts {
            for i in 0..d {
                lo[i] = lo[i].max(p.lo[i]);
                hi[i] = hi[i].min(p.hi[i]);
            }
        }
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(CubatureError::InvalidArgument(
                "intersection has an empty bounding box".into(),
            ));
        }
        Ok(Self {
            lo,
            hi,
            shape: Shape::Intersection { parts },
            volume: Volume::Estimate,
        })
    }

    /// `base \ removed`.
    pub fn difference(base: Domain, removed: Domain) -> Result<Self> {
        if base.dimension() != removed.dimension() {
            return Err(CubatureError::DimensionMismatch {
                expected: base.dimension(),
                got: removed.dimension(),
            });
        }
        Ok(Self {
            lo: base.lo.clone(),
            hi: base.hi.clone(),
            shape: Shape::Difference {
                base: Box::new(base),
                removed: Box::new(removed),
            },
            volume: Volume::Estimate,
        })
    }

    /// Domain given by an arbitrary indicator inside a bounding box.
    pub fn custom(lo: Vec<f64>, hi: Vec<f64>, indicator: Indicator, volume: Option<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(CubatureError::InvalidArgument(
                "bounding box corners must be non-empty and of equal length".into(),
            ));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(CubatureError::InvalidArgument(
                "bounding box requires lo < hi on every axis".into(),
            ));
        }
        let volume = match volume {
            Some(v) if v > 0.0 && v.is_finite() => Volume::Analytic(v),
            Some(v) => {
                return Err(CubatureError::InvalidArgument(format!(
                    "volume must be positive, got {v}"
                )))
            }
            None => Volume::Estimate,
        };
        Ok(Self {
            lo,
            hi,
            shape: Shape::Custom { indicator },
            volume,
        })
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn volume(&self) -> Volume {
        self.volume
    }

    /// Volume of the bounding box.
    pub fn box_volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    /// Euclidean diameter of the bounding box.
    pub fn box_diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(xi, (l, h))| *l <= *xi && *xi <= *h)
    }

    /// Closed-set membership test. Always false outside the bounding box.
    pub fn contains(&self, x: &[f64]) -> bool {
        if !self.in_box(x) {
            return false;
        }
        match &self.shape {
            Shape::Cube { center, radius } => x
                .iter()
                .zip(center)
                .all(|(xi, ci)| (xi - ci).abs() <= *radius),
            Shape::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
                r2 <= radius * radius
            }
            Shape::Union { parts, .. } => parts.iter().any(|p| p.contains(x)),
            Shape::Intersection { parts } => parts.iter().all(|p| p.contains(x)),
            Shape::Difference { base, removed } => base.contains(x) && !removed.contains(x),
            Shape::Custom { indicator } => indicator(x),
        }
    }
}

fn check_center_radius(center: &[f64], radius: f64) -> Result<()> {
    if center.is_empty() {
        return Err(CubatureError::InvalidArgument(
            "center must have at least one coordinate".into(),
        ));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(CubatureError::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(CubatureError::InvalidArgument("center must be finite".into()));
    }
    Ok(())
}

fn common_dimension(parts: &[Domain]) -> Result<usize> {
    let first = parts.first().ok_or_else(|| {
        CubatureError::InvalidArgument("a composite domain needs at least one part".into())
    })?;
    let d = first.dimension();
    for p in &parts[1..] {
        if p.dimension() != d {
            return Err(CubatureError::DimensionMismatch {
                expected: d,
                got: p.dimension(),
            });
        }
    }
    Ok(d)
}

/// `Γ(k/2)` for a positive integer `k`, by the half-integer recursion.
pub(crate) fn gamma_half(k: u32) -> f64 {
    assert!(k > 0);
    let (mut value, mut x) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = k as f64 / 2.0;
    while x < target {
        value *= x;
        x += 1.0;
    }
    value
}

/// Volume of the unit Euclidean ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half(d as u32 + 2)
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d as u32)
}

/// Nonnegative weight function `ω` of the integral `I[f] = ∫ ω f`.
#[derive(Clone)]
pub enum WeightFunction {
    /// `ω ≡ 1`
    One,
    /// `ω(x) = ||x||_2^p`, measured from the origin.
    RadialPower(f64),
    Custom {
        evaluator: WeightFn,
        /// Caller-asserted; not verifiable from point evaluations.
        zero_set_nowhere_dense: bool,
    },
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFunction::One => f.write_str("One"),
            WeightFunction::RadialPower(p) => write!(f, "RadialPower({p})"),
            WeightFunction::Custom {
                zero_set_nowhere_dense,
                ..
            } => write!(f, "Custom(zero_set_nowhere_dense={zero_set_nowhere_dense})"),
        }
    }
}

impl WeightFunction {
    pub fn sqrt_norm() -> Self {
        WeightFunction::RadialPower(0.5)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, WeightFunction::One)
    }

    /// Evaluates `ω(x)`; a negative or non-finite value is an error.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let value = self.raw(x);
        if value >= 0.0 && value.is_finite() {
            Ok(value)
        } else if value == f64::INFINITY {
            Err(CubatureError::SingularWeight(x.to_vec()))
        } else {
            Err(CubatureError::NegativeWeight {
                value,
                point: x.to_vec(),
            })
        }
    }

    /// Like [`evaluate`](Self::evaluate), but a point where `ω` is infinite
    /// counts as zero. Integrable singularities sit on null sets, so sampling
    /// schemes may drop such points.
    pub fn sample(&self, x: &[f64]) -> Result<f64> {
        match self.evaluate(x) {
            Err(CubatureError::SingularWeight(_)) => Ok(0.0),
            other => other,
        }
    }

    fn raw(&self, x: &[f64]) -> f64 {
        match self {
            WeightFunction::One => 1.0,
            WeightFunction::RadialPower(p) => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if *p == 0.0 {
                    1.0
                } else {
                    r.powf(*p)
                }
            }
            WeightFunction::Custom { evaluator, .. } => evaluator(x),
        }
    }
}

/// JSON description of a domain, as accepted by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DomainSpec {
    Cube {
        center: Vec<f64>,
        radius: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Union {
        parts: Vec<DomainSpec>,
        #[serde(default)]
        disjoint: bool,
    },
    Intersection {
        parts: Vec<DomainSpec>,
    },
    Difference {
        parts: Vec<DomainSpec>,
    },
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CubatureError::Schema(e.to_string()))
    }

    pub fn build(&self) -> Result<Domain> {
        match self {
            DomainSpec::Cube { center, radius } => Domain::cube(center, *radius),
            DomainSpec::Ball { center, radius } => Domain::ball(center, *radius),
            DomainSpec::Union { parts, disjoint } => Domain::union(
                parts.iter().map(|p| p.build()).collect::<Result<_>>()?,
                *disjoint,
            ),
            DomainSpec::Intersection { parts } => {
                Domain::intersection(parts.iter().map(|p| p.build()).collect::<Result<_>>()?)
            }
            DomainSpec::Difference { parts } => match parts.as_slice() {
                [base, removed] => Domain::difference(base.build()?, removed.build()?),
                _ => Err(CubatureError::Schema(
                    "difference takes exactly two parts".into(),
                )),
            },
        }
    }
}

/// JSON description of a weight function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightSpec {
    One,
    RadialPower { p: f64 },
}

impl WeightSpec {
    pub fn build(&self) -> WeightFunction {
        match self {
            WeightSpec::One => WeightFunction::One,
            WeightSpec::RadialPower { p } => WeightFunction::RadialPower(*p),
        }
    }
}
