//! Moments `m_k = I[φ_k] = ∫_Ω ω φ_k` of the active basis.
//!
//! Closed forms cover cubes (monomials and trigonometric terms with `ω ≡ 1`),
//! balls (monomials with `ω ≡ 1`, or with `ω = ||x||^p` when centered at the
//! origin) and disjoint unions of supported parts. Everything else falls back
//! to a Halton quasi-Monte Carlo estimate in the bounding box.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};
use crate::function_space::{binomial, FunctionSpace, SpaceKind, Trig};
use crate::geometry::{gamma_half, Domain, Shape, Volume, WeightFunction};
use crate::sequences::{radical_inverse, HALTON_PRIMES};

/// Default QMC sample count, `2^20`.
pub const DEFAULT_QMC_SAMPLES: usize = 1 << 20;
pub const MIN_QMC_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MomentProvenance {
    Analytic,
    Qmc { samples: usize, error_estimate: f64 },
}

impl MomentProvenance {
    pub fn is_analytic(&self) -> bool {
        matches!(self, MomentProvenance::Analytic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    values: Vec<f64>,
    provenance: MomentProvenance,
}

impl MomentVector {
    /// Checks `m_1 > 0`, i.e. the integral is positive on constants.
    pub fn new(values: Vec<f64>, provenance: MomentProvenance) -> Result<Self> {
        match values.first() {
            Some(&m1) if m1 > 0.0 && m1.is_finite() => Ok(Self { values, provenance }),
            Some(&m1) => Err(CubatureError::NonPositiveMass(m1)),
            None => Err(CubatureError::InvalidArgument("empty moment vector".into())),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> MomentProvenance {
        self.provenance
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest acceptable exactness residual against these moments:
    /// `1e-8 (1 + ||m||_∞)` for analytic moments, three QMC error estimates otherwise.
    pub fn residual_tolerance(&self) -> f64 {
        match self.provenance {
            MomentProvenance::Analytic => 1e-8 * (1.0 + self.max_abs()),
            MomentProvenance::Qmc { error_estimate, .. } => 3.0 * error_estimate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    /// Analytic when available, QMC otherwise.
    #[default]
    Auto,
    Analytic,
    Qmc,
}

impl fmt::Display for MomentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentMode::Auto => "auto",
            MomentMode::Analytic => "analytic",
            MomentMode::Qmc => "qmc",
        })
    }
}

impl FromStr for MomentMode {
    type Err = CubatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MomentMode::Auto),
            "analytic" => Ok(MomentMode::Analytic),
            "qmc" => Ok(MomentMode::Qmc),
            other => Err(CubatureError::InvalidArgument(format!(
                "unknown moment mode `{other}`"
            ))),
        }
    }
}

/// `∫_{S^{d-1}} ξ^α dσ(ξ)`.
fn sphere_monomial(alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let d = alpha.len() as u32;
    let total: u32 = alpha.iter().sum();
    2.0 * alpha.iter().map(|&a| gamma_half(a + 1)).product::<f64>() / gamma_half(total + d)
}

/// `∫_{B_R(0)} ||y||^p y^α dy`.
fn ball_radial_monomial(alpha: &[u32], radius: f64, p: f64) -> f64 {
    let s = sphere_monomial(alpha);
    if s == 0.0 {
        return 0.0;
    }
    let e = p + alpha.iter().sum::<u32>() as f64 + alpha.len() as f64;
    s * radius.powf(e) / e
}

/// `∫_{B_R(c)} x^α dx`, by expanding `(c + y)^α`.
fn ball_shifted_monomial(alpha: &[u32], center: &[f64], radius: f64) -> f64 {
    let d = alpha.len();
    let mut beta = vec![0u32; d];
    let mut total = 0.0;
    loop {
        let coeff: f64 = (0..d)
            .map(|j| {
                binomial(alpha[j] as u64, beta[j] as u64) as f64
                    * center[j].powi((alpha[j] - beta[j]) as i32)
            })
            .product();
        if coeff != 0.0 {
            total += coeff * ball_radial_monomial(&beta, radius, 0.0);
        }
        // next β <= α
        let mut j = 0;
        loop {
            if j == d {
                return total;
            }
            if beta[j] < alpha[j] {
                beta[j] += 1;
                break;
            }
            beta[j] = 0;
            j += 1;
        }
    }
}

/// `∫_{lo}^{hi} e^{2πi a x} dx`.
fn interval_exponential(a: i32, lo: f64, hi: f64) -> Complex64 {
    if a == 0 {
        return Complex64::new(hi - lo, 0.0);
    }
    let w = 2.0 * std::f64::consts::PI * a as f64;
    let i = Complex64::i();
    ((i * w * hi).exp() - (i * w * lo).exp()) / (i * w)
}

fn analytic_values(space: &FunctionSpace, domain: &Domain, weight: &WeightFunction) -> Option<Vec<f64>> {
    let radial_power = match weight {
        WeightFunction::One => Some(0.0),
        WeightFunction::RadialPower(p) => Some(*p),
        WeightFunction::Custom { .. } => None,
    }?;
    match domain.shape() {
        Shape::Cube { .. } if radial_power == 0.0 => {
            let (lo, hi) = (domain.lo(), domain.hi());
            match space.kind() {
                SpaceKind::Algebraic => Some(
                    space
                        .monomials()?
                        .iter()
                        .map(|alpha| {
                            alpha
                                .iter()
                                .enumerate()
                                .map(|(j, &a)| {
                                    let e = a as i32 + 1;
                                    (hi[j].powi(e) - lo[j].powi(e)) / e as f64
                                })
                                .product()
                        })
                        .collect(),
                ),
                SpaceKind::Trigonometric => Some(
                    space
                        .trig_terms()?
                        .iter()
                        .map(|t| {
                            let z: Complex64 = t
                                .frequency
                                .iter()
                                .enumerate()
                                .map(|(j, &a)| interval_exponential(a, lo[j], hi[j]))
                                .product();
                            match t.kind {
                                Trig::Cos => z.re,
                                Trig::Sin => z.im,
                            }
                        })
                        .collect(),
                ),
                SpaceKind::Custom => None,
            }
        }
        Shape::Ball { center, radius } => {
            let monomials = space.monomials()?;
            let d = domain.dimension() as f64;
            if radial_power == 0.0 {
                Some(
                    monomials
                        .iter()
                        .map(|alpha| ball_shifted_monomial(alpha, center, *radius))
                        .collect(),
                )
            } else if center.iter().all(|&c| c == 0.0) && radial_power > -d {
                Some(
                    monomials
                        .iter()
                        .map(|alpha| ball_radial_monomial(alpha, *radius, radial_power))
                        .collect(),
                )
            } else {
                None
            }
        }
        Shape::Union {
            parts,
            disjoint: true,
        } => {
            let mut sum = vec![0.0; space.size()];
            for part in parts {
                for (s, v) in sum.iter_mut().zip(analytic_values(space, part, weight)?) {
                    *s += v;
                }
            }
            Some(sum)
        }
        _ => None,
    }
}

/// Closed-form moments, or `None` when the combination is not supported.
pub fn analytic_moments(
    space: &FunctionSpace,
    domain: &Domain,
    weight: &WeightFunction,
) -> Option<Result<MomentVector>> {
    analytic_values(space, domain, weight)
        .map(|values| MomentVector::new(values, MomentProvenance::Analytic))
}

/// Quasi-Monte Carlo moments from `samples` Halton points in the bounding box.
///
/// The error estimate is the largest deviation of the estimates from the first
/// `samples / 2` and `samples / 4` points from the full estimate.
pub fn qmc_moments(
    space: &FunctionSpace,
    domain: &Domain,
    weight: &WeightFunction,
    samples: usize,
) -> Result<MomentVector> {
    if samples < MIN_QMC_SAMPLES {
        return Err(CubatureError::InvalidArgument(format!(
            "QMC needs at least {MIN_QMC_SAMPLES} samples, got {samples}"
        )));
    }
    let d = domain.dimension();
    if d > HALTON_PRIMES.len() {
        return Err(CubatureError::HaltonDimension(d, HALTON_PRIMES.len()));
    }
    let k = space.size();
    let (lo, hi) = (domain.lo(), domain.hi());
    let half = samples / 2;
    let quarter = samples / 4;
    let mut sum = vec![0.0; k];
    let mut half_sum = vec![0.0; k];
    let mut quarter_sum = vec![0.0; k];
    let mut hits = 0usize;
    let mut x = vec![0.0; d];
    let mut phi = vec![0.0; k];
    for n in 1..=samples {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = lo[j] + radical_inverse(n as u64, HALTON_PRIMES[j]) * (hi[j] - lo[j]);
        }
        if domain.contains(&x) {
            hits += 1;
            let w = weight.sample(&x)?;
            space.evaluate_into(&x, &mut phi);
            for (s, p) in sum.iter_mut().zip(&phi) {
                *s += w * p;
            }
        }
        if n == quarter {
            quarter_sum.copy_from_slice(&sum);
        }
        if n == half {
            half_sum.copy_from_slice(&sum);
        }
    }
    if hits == 0 {
        return Err(CubatureError::DegenerateDomain);
    }
    let vol = domain.box_volume();
    let values: Vec<f64> = sum.iter().map(|s| vol * s / samples as f64).collect();
    let error_estimate = values
        .iter()
        .zip(half_sum.iter().zip(&quarter_sum))
        .map(|(v, (h, q))| {
            (v - vol * h / half as f64)
                .abs()
                .max((v - vol * q / quarter as f64).abs())
        })
        .fold(0.0, f64::max);
    MomentVector::new(
        values,
        MomentProvenance::Qmc {
            samples,
            error_estimate,
        },
    )
}

/// Volume of `domain`: analytic when known, QMC estimate otherwise.
pub fn domain_volume(domain: &Domain, samples: usize) -> Result<f64> {
    match domain.volume() {
        Volume::Analytic(v) => Ok(v),
        Volume::Estimate => {
            let one = FunctionSpace::algebraic(domain.dimension(), 0)?;
            Ok(qmc_moments(&one, domain, &WeightFunction::One, samples)?.values()[0])
        }
    }
}

/// Moments according to `mode`.
pub fn compute_moments(
    space: &FunctionSpace,
    domain: &Domain,
    weight: &WeightFunction,
    mode: MomentMode,
    samples: usize,
) -> Result<MomentVector> {
    match mode {
        MomentMode::Qmc => qmc_moments(space, domain, weight, samples),
        MomentMode::Analytic => {
            analytic_moments(space, domain, weight).ok_or(CubatureError::MomentsUnsupported)?
        }
        MomentMode::Auto => match analytic_moments(space, domain, weight) {
            Some(m) => m,
            None => qmc_moments(space, domain, weight, samples),
        },
    }
}
