//! Product Gauss–Legendre reference rules on cubes and balls.

use std::f64::consts::PI;

use crate::cubature::{Cubature, CubatureMetadata};
use crate::error::{CubatureError, Result};
use crate::geometry::{Domain, Shape, WeightFunction};

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(CubatureError::InvalidArgument(
            "Gauss-Legendre needs at least one point".into(),
        ));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_legendre(n)?;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    Ok((
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| half * v).collect(),
    ))
}

/// Reference rule with `n` points per coordinate direction.
///
/// Cubes get the tensor product rule. Balls in two and three dimensions get a
/// polar (spherical) product rule: Gauss–Legendre in the radius with the
/// `r^{d-1}` Jacobian, the trapezoidal rule with `2n` points in the azimuth and,
/// for `d = 3`, Gauss–Legendre in the cosine of the polar angle. Weights are
/// multiplied by `ω` at the nodes.
pub fn gauss_legendre_reference(domain: &Domain, weight: &WeightFunction, n: usize) -> Result<Cubature> {
    let (nodes, base) = match domain.shape() {
        Shape::Cube { center, radius } => cube_rule(center, *radius, n)?,
        Shape::Ball { center, radius } => match center.len() {
            1 => cube_rule(center, *radius, n)?,
            2 => disk_rule(center, *radius, n)?,
            3 => ball3_rule(center, *radius, n)?,
            d => {
                return Err(CubatureError::Unsupported(format!(
                    "Gauss-Legendre reference on a {d}-dimensional ball"
                )))
            }
        },
        _ => {
            return Err(CubatureError::Unsupported(
                "Gauss-Legendre reference needs a cube or a ball".into(),
            ))
        }
    };
    let weights = nodes
        .iter()
        .zip(&base)
        .map(|(x, w)| Ok(w * weight.sample(x)?))
        .collect::<Result<Vec<f64>>>()?;
    // Points where ω vanishes carry no information and would violate positivity.
    let (nodes, weights): (Vec<_>, Vec<_>) = nodes
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w > 0.0)
        .unzip();
    Cubature::new(nodes, weights, CubatureMetadata::default())
}

fn cube_rule(center: &[f64], radius: f64, n: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let (x, w) = gauss_legendre(n)?;
    let d = center.len();
    let total = n.pow(d as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        nodes.push(
            idx.iter()
                .zip(center)
                .map(|(&i, c)| c + radius * x[i])
                .collect(),
        );
        weights.push(idx.iter().map(|&i| radius * w[i]).product());
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    Ok((nodes, weights))
}

fn disk_rule(center: &[f64], radius: f64, n: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let (r, wr) = gauss_legendre_interval(n, 0.0, radius)?;
    let na = 2 * n;
    let wa = 2.0 * PI / na as f64;
    let mut nodes = Vec::with_capacity(n * na);
    let mut weights = Vec::with_capacity(n * na);
    for (ri, wi) in r.iter().zip(&wr) {
        for j in 0..na {
            let t = wa * j as f64;
            nodes.push(vec![center[0] + ri * t.cos(), center[1] + ri * t.sin()]);
            weights.push(wi * ri * wa);
        }
    }
    Ok((nodes, weights))
}

fn ball3_rule(center: &[f64], radius: f64, n: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let (r, wr) = gauss_legendre_interval(n, 0.0, radius)?;
    let (u, wu) = gauss_legendre(n)?;
    let na = 2 * n;
    let wa = 2.0 * PI / na as f64;
    let mut nodes = Vec::with_capacity(n * n * na);
    let mut weights = Vec::with_capacity(n * n * na);
    for (ri, wi) in r.iter().zip(&wr) {
        for (ui, wui) in u.iter().zip(&wu) {
            let s = (1.0 - ui * ui).sqrt();
            for j in 0..na {
                let t = wa * j as f64;
                nodes.push(vec![
                    center[0] + ri * s * t.cos(),
                    center[1] + ri * s * t.sin(),
                    center[2] + ri * ui,
                ]);
                weights.push(wi * ri * ri * wui * wa);
            }
        }
    }
    Ok((nodes, weights))
}
