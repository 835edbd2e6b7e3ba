//! Deterministic sequences that are equidistributed in a domain.
//!
//! Two ambient generators fill the bounding box of a domain: a tensor grid of
//! the one-dimensional bisection sequence (`-R, R, 0, -R/2, R/2, ...`) and
//! Halton points. Points outside the domain are dropped, which keeps the
//! sequence equidistributed in the domain itself.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};
use crate::geometry::Domain;

/// Prime bases for Halton coordinates.
pub const HALTON_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Ambient draws allowed per `first_n_in_domain` request.
pub const DEFAULT_REJECTION_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Bisection,
    Halton,
}

impl SequenceKind {
    /// Bisection grid for `d <= 2`, Halton points above.
    pub fn default_for(dimension: usize) -> Self {
        if dimension <= 2 {
            SequenceKind::Bisection
        } else {
            SequenceKind::Halton
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SequenceKind::Bisection => "bisection",
            SequenceKind::Halton => "halton",
        })
    }
}

impl FromStr for SequenceKind {
    type Err = CubatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bisection" => Ok(SequenceKind::Bisection),
            "halton" => Ok(SequenceKind::Halton),
            other => Err(CubatureError::InvalidArgument(format!(
                "unknown sequence kind `{other}`"
            ))),
        }
    }
}

/// Position in `[0, 1]` of the `n`-th (1-based) element of the bisection sequence.
fn bisection_unit(n: u64) -> f64 {
    match n {
        1 => 0.0,
        2 => 1.0,
        _ => {
            // level L holds 2^(L-1) points, indices 2^(L-1)+2 ..= 2^L+1
            let mut level = 1u32;
            while (1u64 << level) + 1 < n {
                level += 1;
            }
            let i = n - ((1u64 << (level - 1)) + 1);
            (2 * i - 1) as f64 / (1u64 << level) as f64
        }
    }
}

/// `n`-th element (1-based) of the bisection sequence in `[-R, R]`.
pub fn bisection_1d(radius: f64, n: usize) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(CubatureError::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if n == 0 {
        return Err(CubatureError::InvalidArgument("index starts at 1".into()));
    }
    Ok(-radius + 2.0 * radius * bisection_unit(n as u64))
}

/// Level-by-level enumeration of the tensor bisection grid in `[0, 1]^d`.
///
/// Level `L` consists of all grid points `j / 2^L` (`j` in `0..=2^L` per axis)
/// that were not part of level `L - 1`, emitted in lexicographic order.
#[derive(Debug, Clone)]
pub struct BisectionGrid {
    dimension: usize,
    level: u32,
    index: Vec<u64>,
    exhausted_level: bool,
}

impl BisectionGrid {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            level: 0,
            index: vec![0; dimension],
            exhausted_level: false,
        }
    }

    fn advance_odometer(&mut self) {
        let top = 1u64 << self.level;
        for i in (0..self.dimension).rev() {
            if self.index[i] < top {
                self.index[i] += 1;
                return;
            }
            self.index[i] = 0;
        }
        self.exhausted_level = true;
    }
}

impl Iterator for BisectionGrid {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        loop {
            if self.exhausted_level {
                self.level += 1;
                self.index.iter_mut().for_each(|j| *j = 0);
                self.exhausted_level = false;
            }
            let fresh = self.level == 0 || self.index.iter().any(|j| j % 2 == 1);
            let scale = (1u64 << self.level) as f64;
            let point = fresh.then(|| self.index.iter().map(|&j| j as f64 / scale).collect());
            self.advance_odometer();
            if point.is_some() {
                return point;
            }
        }
    }
}

/// `n`-th point (1-based) of the tensor bisection grid in `[-R, R]^d`.
pub fn bisection_grid(radius: f64, dimension: usize, n: usize) -> Result<Vec<f64>> {
    if !(radius > 0.0) || dimension == 0 || n == 0 {
        return Err(CubatureError::InvalidArgument(
            "bisection grid needs R > 0, d >= 1 and n >= 1".into(),
        ));
    }
    let t = BisectionGrid::new(dimension).nth(n - 1).expect("grid is infinite");
    Ok(t.into_iter().map(|t| -radius + 2.0 * radius * t).collect())
}

/// Radical inverse of `n` in base `base`.
pub fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while n > 0 {
        value += (n % base) as f64 * scale;
        n /= base;
        scale *= inv;
    }
    value
}

/// `n`-th Halton point (1-based) in `(0, 1)^d`.
pub fn halton(dimension: usize, n: u64) -> Result<Vec<f64>> {
    if dimension == 0 || dimension > HALTON_PRIMES.len() {
        return Err(CubatureError::HaltonDimension(dimension, HALTON_PRIMES.len()));
    }
    if n == 0 {
        return Err(CubatureError::InvalidArgument("index starts at 1".into()));
    }
    Ok(HALTON_PRIMES[..dimension]
        .iter()
        .map(|&b| radical_inverse(n, b))
        .collect())
}

#[derive(Debug, Clone)]
enum Ambient {
    Bisection(BisectionGrid),
    Halton { next: u64 },
}

/// Cursor over the in-domain subsequence of an ambient generator.
///
/// Accepted points are cached, so repeated requests return consistent prefixes.
#[derive(Debug, Clone)]
pub struct PointSequence {
    kind: SequenceKind,
    domain: Domain,
    ambient: Ambient,
    accepted: Vec<Vec<f64>>,
    draws: usize,
    rejection_cap: usize,
}

impl PointSequence {
    pub fn new(kind: SequenceKind, domain: Domain) -> Result<Self> {
        let d = domain.dimension();
        let ambient = match kind {
            SequenceKind::Bisection => Ambient::Bisection(BisectionGrid::new(d)),
            SequenceKind::Halton => {
                if d > HALTON_PRIMES.len() {
                    return Err(CubatureError::HaltonDimension(d, HALTON_PRIMES.len()));
                }
                Ambient::Halton { next: 1 }
            }
        };
        Ok(Self {
            kind,
            domain,
            ambient,
            accepted: Vec::new(),
            draws: 0,
            rejection_cap: DEFAULT_REJECTION_CAP,
        })
    }

    pub fn with_rejection_cap(mut self, cap: usize) -> Self {
        self.rejection_cap = cap;
        self
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Total ambient points drawn so far.
    pub fn draws(&self) -> usize {
        self.draws
    }

    fn next_ambient(&mut self) -> Vec<f64> {
        let t = match &mut self.ambient {
            Ambient::Bisection(grid) => grid.next().expect("grid is infinite"),
            Ambient::Halton { next } => {
                let n = *next;
                *next += 1;
                HALTON_PRIMES[..self.domain.dimension()]
                    .iter()
                    .map(|&b| radical_inverse(n, b))
                    .collect()
            }
        };
        self.draws += 1;
        let (lo, hi) = (self.domain.lo(), self.domain.hi());
        t.iter()
            .enumerate()
            .map(|(i, t)| lo[i] + t * (hi[i] - lo[i]))
            .collect()
    }

    /// The first `n` sequence points that lie in the domain, in sequence order.
    pub fn first_n_in_domain(&mut self, n: usize) -> Result<&[Vec<f64>]> {
        if n == 0 {
            return Err(CubatureError::InvalidArgument("N must be at least 1".into()));
        }
        let start = self.draws;
        while self.accepted.len() < n {
            if self.draws - start >= self.rejection_cap {
                return Err(CubatureError::RejectionBudget {
                    requested: n,
                    found: self.accepted.len(),
                    draws: self.draws - start,
                });
            }
            let x = self.next_ambient();
            if self.domain.contains(&x) {
                self.accepted.push(x);
            }
        }
        Ok(&self.accepted[..n])
    }
}
