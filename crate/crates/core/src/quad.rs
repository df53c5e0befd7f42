//! Product quadrature on the unit ball `B(x¹, 1)` and reproducible Monte Carlo.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{range, Error, Result};
use crate::geometry::{BallPoint, X1_LAST};
use crate::special::gamma;
use crate::sum::Neumaier;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre on `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|t| a + h * (t + 1.0)).collect(),
        w.iter().map(|v| v * h).collect(),
    )
}

/// Nodes and positive weights on the ball `B(x¹, 1)` of dimension 2 or 3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub dim: usize,
    pub radial_order: usize,
    pub angular_order: usize,
    /// Row-major node coordinates, `dim` per node.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub id: String,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn ball_point(&self, i: usize) -> BallPoint {
        BallPoint::new(self.node(i).to_vec())
    }

    /// Highest total degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        let radial = match self.dim {
            2 => 2 * self.radial_order - 2,
            _ => 2 * self.radial_order - 3,
        };
        radial.min(self.angular_order - 1)
    }

    /// CSV with columns `index, zeta_1, …, zeta_dim, weight`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["index".to_string()];
        header.extend((1..=self.dim).map(|k| format!("zeta_{k}")));
        header.push("weight".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![i.to_string()];
            rec.extend(self.node(i).iter().map(|v| fmt17(*v)));
            rec.push(fmt17(self.weights[i]));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Round-trip float formatting with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Product rule on `B(x¹,1) ⊂ R^dim`.
///
/// * dim 2: `|ζ−x¹|² = 1−(1−τ)²` with Gauss–Legendre in `τ`, which clusters
///   radii toward the sphere, times an `angular_order`-point trapezoid.
/// * dim 3: Gauss–Legendre in the radius (weight `ρ²`), Gauss–Legendre in
///   `cos ϑ` with `⌈angular_order/2⌉` points, trapezoid in the azimuth.
pub fn build_ball_rule(dim: usize, radial_order: usize, angular_order: usize) -> Result<QuadratureRule> {
    if !(dim == 2 || dim == 3) {
        return range(format!("deterministic rules exist for dim 2 and 3, got {dim}"));
    }
    if radial_order < 2 || angular_order < 2 {
        return range("quadrature orders must be at least 2");
    }
    let (tau, wt) = gauss_legendre_interval(radial_order, 0.0, 1.0);
    let m = angular_order;
    let dphi = 2.0 * PI / m as f64;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    if dim == 2 {
        for (t, w) in tau.iter().zip(&wt) {
            let rho = (1.0 - (1.0 - t) * (1.0 - t)).sqrt();
            let wr = w * (1.0 - t) * dphi;
            for j in 0..m {
                let phi = dphi * j as f64;
                nodes.push(rho * phi.cos());
                nodes.push(rho * phi.sin() + X1_LAST);
                weights.push(wr);
            }
        }
    } else {
        let (ct, wc) = gauss_legendre(angular_order.div_ceil(2));
        for (rho, w) in tau.iter().zip(&wt) {
            let wr = w * rho * rho * dphi;
            for (c, v) in ct.iter().zip(&wc) {
                let s = (1.0 - c * c).sqrt();
                for j in 0..m {
                    let phi = dphi * j as f64;
                    nodes.push(rho * s * phi.cos());
                    nodes.push(rho * s * phi.sin());
                    nodes.push(rho * c + X1_LAST);
                    weights.push(wr * v);
                }
            }
        }
    }
    let id = rule_id(dim, radial_order, angular_order, &nodes, &weights);
    Ok(QuadratureRule {
        dim,
        radial_order,
        angular_order,
        nodes,
        weights,
        id,
    })
}

fn rule_id(dim: usize, nr: usize, na: usize, nodes: &[f64], weights: &[f64]) -> String {
    let mut h = Sha256::new();
    h.update(format!("ball-rule:{dim}:{nr}:{na}:").as_bytes());
    for v in nodes.iter().chain(weights) {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

/// `Σ wᵢ f(ζᵢ)`.
pub fn integrate<F: Fn(&[f64]) -> f64>(f: F, rule: &QuadratureRule) -> Result<f64> {
    integrate_indexed(|i| f(rule.node(i)), rule)
}

/// `Σ wᵢ vᵢ` for node values.
pub fn integrate_values(values: &[f64], rule: &QuadratureRule) -> Result<f64> {
    if values.len() != rule.len() {
        return range("value count does not match the rule");
    }
    integrate_indexed(|i| values[i], rule)
}

pub(crate) fn integrate_indexed<F: Fn(usize) -> f64>(f: F, rule: &QuadratureRule) -> Result<f64> {
    let mut acc = Neumaier::new();
    for i in 0..rule.len() {
        let v = f(i);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("integrand {v} at node {i}")));
        }
        acc.add(rule.weights[i] * v);
    }
    Ok(acc.value())
}

/// `Σᵢⱼ wᵢ wⱼ F(ζᵢ, ζⱼ)`. Rows run in parallel; each row and the final
/// reduction are compensated sums in fixed order.
pub fn double_integral<F>(f: F, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let rows: Vec<Result<f64>> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let zi = rule.node(i);
            let mut acc = Neumaier::new();
            for j in 0..rule.len() {
                let v = f(zi, rule.node(j));
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("integrand {v} at pair ({i}, {j})")));
                }
                acc.add(rule.weights[j] * v);
            }
            Ok(acc.value())
        })
        .collect();
    let mut acc = Neumaier::new();
    for (i, r) in rows.into_iter().enumerate() {
        acc.add(rule.weights[i] * r?);
    }
    Ok(acc.value())
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

const MC_CHUNKS: u64 = 64;

/// Volume of the unit ball in `R^dim`.
pub fn ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    PI.powf(0.5 * d) / gamma(0.5 * d + 1.0).expect("positive argument")
}

/// Uniform rejection sampling in `B(x¹, 1)`.
///
/// Samples are split into 64 fixed chunks. Chunk `c` draws from ChaCha8
/// seeded with `seed` on stream `c`, and the chunk sums are reduced in
/// order, so the result is independent of the thread count.
pub fn mc_integrate<F>(f: F, dim: usize, samples: u64, seed: u64) -> Result<MCEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim < 2 {
        return range(format!("Monte Carlo needs dim >= 2, got {dim}"));
    }
    if samples < 2 {
        return range("Monte Carlo needs at least 2 samples");
    }
    let chunks: Vec<Result<(f64, f64)>> = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let count = samples / MC_CHUNKS + u64::from(c < samples % MC_CHUNKS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut s1 = Neumaier::new();
            let mut s2 = Neumaier::new();
            let mut z = vec![0.0; dim];
            for _ in 0..count {
                loop {
                    for v in z.iter_mut() {
                        *v = rng.random_range(-1.0..1.0);
                    }
                    if z.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                        break;
                    }
                }
                z[dim - 1] += X1_LAST;
                let v = f(&z);
                z[dim - 1] -= X1_LAST;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("Monte Carlo sample {v}")));
                }
                s1.add(v);
                s2.add(v * v);
            }
            Ok((s1.value(), s2.value()))
        })
        .collect();
    let mut s1 = Neumaier::new();
    let mut s2 = Neumaier::new();
    for c in chunks {
        let (a, b) = c?;
        s1.add(a);
        s2.add(b);
    }
    let nf = samples as f64;
    let mean = s1.value() / nf;
    let var = ((s2.value() / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    let vol = ball_volume(dim);
    Ok(MCEstimate {
        value: vol * mean,
        stderr: vol * (var / nf).sqrt(),
        samples,
        seed,
    })
}
