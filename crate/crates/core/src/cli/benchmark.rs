//! Accuracy benchmark: constructed rules against product Gauss–Legendre rules.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use super::gauss_legendre::{gauss_legendre_interval, gauss_legendre_reference};
use crate::error::{CubatureError, Result};
use crate::function_space::{BasisFn, FunctionSpace, SpaceKind};
use crate::geometry::{unit_sphere_area, Domain, Shape, WeightFunction};
use crate::moments::{qmc_moments, MomentProvenance};
use crate::pipeline::{construct, ConstructionConfig};

/// Samples behind QMC reference integrals.
pub const REFERENCE_QMC_SAMPLES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// `Π_i 1/(1+x_i^2)`
    Product,
    /// `1/(1+||x||^2) + sin(x_1)`
    RadialSin,
}

impl TestFunction {
    pub const ALL: [TestFunction; 2] = [TestFunction::Product, TestFunction::RadialSin];

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Product => x.iter().map(|v| 1.0 / (1.0 + v * v)).product(),
            TestFunction::RadialSin => {
                1.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>()) + x[0].sin()
            }
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestFunction::Product => "product",
            TestFunction::RadialSin => "radial-sin",
        })
    }
}

impl FromStr for TestFunction {
    type Err = CubatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(TestFunction::Product),
            "radial-sin" => Ok(TestFunction::RadialSin),
            other => Err(CubatureError::InvalidArgument(format!(
                "unknown test function `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceProvenance {
    Analytic,
    /// One-dimensional Gauss–Legendre quadrature of a radial profile.
    Radial,
    Qmc { samples: usize, error_estimate: f64 },
}

impl fmt::Display for ReferenceProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceProvenance::Analytic => f.write_str("analytic"),
            ReferenceProvenance::Radial => f.write_str("radial"),
            ReferenceProvenance::Qmc { .. } => f.write_str("qmc"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceIntegral {
    pub value: f64,
    pub provenance: ReferenceProvenance,
}

/// `∫_Ω f ω`: closed form or radial quadrature where possible, QMC otherwise.
pub fn reference_integral(
    f: TestFunction,
    domain: &Domain,
    weight: &WeightFunction,
    qmc_samples: usize,
) -> Result<ReferenceIntegral> {
    match (f, domain.shape(), weight) {
        (TestFunction::Product, Shape::Cube { center, radius }, WeightFunction::One) => {
            let value = center
                .iter()
                .map(|c| (c + radius).atan() - (c - radius).atan())
                .product();
            Ok(ReferenceIntegral {
                value,
                provenance: ReferenceProvenance::Analytic,
            })
        }
        (TestFunction::RadialSin, Shape::Ball { center, radius }, WeightFunction::One | WeightFunction::RadialPower(_))
            if center.iter().all(|c| *c == 0.0) =>
        {
            // sin(x_1) is odd and the weight even, so only the radial term survives.
            let p = match weight {
                WeightFunction::RadialPower(p) => *p,
                _ => 0.0,
            };
            let d = center.len();
            let value = unit_sphere_area(d) * radial_integral(d as f64 - 1.0 + p, *radius)?;
            Ok(ReferenceIntegral {
                value,
                provenance: ReferenceProvenance::Radial,
            })
        }
        _ => {
            let one: BasisFn = Arc::new(|_| 1.0);
            let g: BasisFn = Arc::new(move |x| f.eval(x));
            let space = FunctionSpace::custom(domain, vec![one, g])?;
            let m = qmc_moments(&space, domain, weight, qmc_samples)?;
            let error_estimate = match m.provenance() {
                MomentProvenance::Qmc { error_estimate, .. } => error_estimate,
                MomentProvenance::Analytic => 0.0,
            };
            Ok(ReferenceIntegral {
                value: m.values()[1],
                provenance: ReferenceProvenance::Qmc {
                    samples: qmc_samples,
                    error_estimate,
                },
            })
        }
    }
}

/// `∫_0^R r^e / (1 + r^2) dr` for `e > -1`.
fn radial_integral(e: f64, radius: f64) -> Result<f64> {
    if e <= -1.0 {
        return Err(CubatureError::InvalidArgument(format!(
            "radial exponent {e} is not integrable at the origin"
        )));
    }
    // r = R t^2 smooths the r^e singularity for half-integer e.
    let (t, w) = gauss_legendre_interval(200, 0.0, 1.0)?;
    Ok(t.iter()
        .zip(&w)
        .map(|(t, w)| {
            let r = radius * t * t;
            w * r.powf(e) / (1.0 + r * r) * 2.0 * radius * t
        })
        .sum())
}

/// Points per axis so that the reference rule uses about `budget` nodes.
pub fn matched_points_per_axis(domain: &Domain, budget: usize) -> usize {
    let d = domain.dimension() as f64;
    let b = budget.max(1) as f64;
    let n = match domain.shape() {
        Shape::Ball { .. } if d >= 2.0 => (b / 2.0).powf(1.0 / d),
        _ => b.powf(1.0 / d),
    };
    (n.round() as usize).max(1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub degree: u32,
    pub space_size: usize,
    pub function: TestFunction,
    pub reference: f64,
    pub nodes: Option<usize>,
    pub rule_error: Option<f64>,
    pub gl_nodes: Option<usize>,
    pub gl_error: Option<f64>,
    /// `ok`, or the reason the row is incomplete.
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub space: SpaceKind,
    pub references: Vec<(TestFunction, ReferenceIntegral)>,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub const CSV_HEADER: &'static str =
        "m,K,function,reference,reference_provenance,reference_error,N,rule_error,gl_nodes,gl_error,status";

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        let opt_usize = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        let opt_f64 = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
        for row in &self.rows {
            let provenance = self
                .references
                .iter()
                .find(|(f, _)| *f == row.function)
                .map(|(_, r)| r.provenance);
            let reference_error = match provenance {
                Some(ReferenceProvenance::Qmc { error_estimate, .. }) => format!("{error_estimate:e}"),
                Some(_) => "0".into(),
                None => String::new(),
            };
            writeln!(
                out,
                "{},{},{},{:?},{},{},{},{},{},{},{}",
                row.degree,
                row.space_size,
                row.function,
                row.reference,
                provenance.map(|p| p.to_string()).unwrap_or_default(),
                reference_error,
                opt_usize(row.nodes),
                opt_f64(row.rule_error),
                opt_usize(row.gl_nodes),
                opt_f64(row.gl_error),
                csv_field(&row.status),
            )?;
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub space: SpaceKind,
    pub degrees: std::ops::RangeInclusive<u32>,
    pub functions: Vec<TestFunction>,
    pub construction: ConstructionConfig,
    pub reference_samples: usize,
}

/// Builds a rule per degree and records the errors of both rules per function.
///
/// A failed construction yields rows with `status` set to the error; the run
/// continues with the next degree.
pub fn run_benchmark(domain: &Domain, weight: &WeightFunction, spec: &BenchmarkSpec) -> Result<BenchmarkReport> {
    let references = spec
        .functions
        .iter()
        .map(|&f| Ok((f, reference_integral(f, domain, weight, spec.reference_samples)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for m in spec.degrees.clone() {
        let space = FunctionSpace::from_descriptor(spec.space, domain.dimension(), m)?;
        let built = construct(domain, weight, &space, &spec.construction);
        if let Err(e) = &built {
            warn!("degree {m}: construction failed: {e}");
        }
        let gl = built.as_ref().ok().map(|c| {
            let n = matched_points_per_axis(domain, c.cubature.len());
            gauss_legendre_reference(domain, weight, n)
        });
        for (f, reference) in &references {
            let mut row = BenchmarkRow {
                degree: m,
                space_size: space.size(),
                function: *f,
                reference: reference.value,
                nodes: None,
                rule_error: None,
                gl_nodes: None,
                gl_error: None,
                status: "ok".into(),
            };
            match &built {
                Ok(c) => {
                    row.nodes = Some(c.cubature.len());
                    row.rule_error = Some((c.cubature.evaluate(|x| f.eval(x))? - reference.value).abs());
                }
                Err(e) => row.status = format!("construction failed: {e}"),
            }
            match &gl {
                Some(Ok(g)) => {
                    row.gl_nodes = Some(g.len());
                    row.gl_error = Some((g.evaluate(|x| f.eval(x))? - reference.value).abs());
                }
                Some(Err(e)) if row.status == "ok" => row.status = format!("no reference rule: {e}"),
                _ => {}
            }
            rows.push(row);
        }
    }
    Ok(BenchmarkReport {
        space: spec.space,
        references,
        rows,
    })
}
