//! Half-space potentials with discrete sources, and Euler–Lagrange pairs
//! transported from the ball.
//!
//! A ball solution `(f, g, c)` of `T g = c f^{p−1}`, `Tᵗ f = c g^{q−1}` becomes
//! a pair `(u, v)` on the half space solving
//!
//! ```text
//! u(X) = t^α ∫ z^β |X−Y|^{−λ} v(Y)^{−κ} dY,   v(Y) = z^β ∫ t^α |X−Y|^{−λ} u(X)^{−θ} dX
//! ```
//!
//! with the integrals taken against the ball nodes mapped by `T`. The node
//! identities hold exactly when the exponents are conformal.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{range, Error, Result};
use crate::functional::{kernel_from_dist_sq, Field};
use crate::geometry::{self, map_coords};
use crate::params::ExponentSet;
use crate::quad::QuadratureRule;
use crate::sum::Neumaier;

/// Ball nodes mapped to the half space.
#[derive(Clone, Debug)]
pub struct ChartNodes {
    pub dim: usize,
    /// `T(ζⱼ)`, row-major.
    pub points: Vec<f64>,
    /// `Wⱼ J(ζⱼ)^{2(n+1)}`: the half-space measure of node `j`.
    pub measure: Vec<f64>,
    /// `J(ζⱼ)`.
    pub jac: Vec<f64>,
}

impl ChartNodes {
    pub fn new(rule: &QuadratureRule) -> Self {
        let d = rule.dim;
        let mut points = vec![0.0; rule.nodes.len()];
        let mut measure = Vec::with_capacity(rule.len());
        let mut jac = Vec::with_capacity(rule.len());
        for i in 0..rule.len() {
            let j = map_coords(rule.node(i), &mut points[i * d..(i + 1) * d]);
            measure.push(rule.weights[i] * j.powi(2 * d as i32));
            jac.push(j);
        }
        Self {
            dim: d,
            points,
            measure,
            jac,
        }
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn height(&self, i: usize) -> f64 {
        self.points[(i + 1) * self.dim - 1]
    }
}

/// `X ↦ t^{outer} Σⱼ mⱼ |X−Yⱼ|^{−λ}`.
#[derive(Clone, Debug, Serialize)]
pub struct NystromPotential {
    pub dim: usize,
    pub lambda: f64,
    pub outer_exp: f64,
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
}

impl NystromPotential {
    /// Potential `t^{outer} ∫ z^{inner} |X−Y|^{−λ} ρ(Y) dY` of a density `ρ`,
    /// discretized on the mapped ball nodes.
    pub fn from_density<F>(density: F, inner_exp: f64, outer_exp: f64, lambda: f64, rule: &QuadratureRule) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let chart = ChartNodes::new(rule);
        let mut masses = Vec::with_capacity(chart.len());
        for j in 0..chart.len() {
            let y = chart.point(j);
            let m = chart.measure[j] * chart.height(j).powf(inner_exp) * density(y);
            if !m.is_finite() {
                return Err(Error::NonFinite(format!("density mass {m} at node {j}")));
            }
            masses.push(m);
        }
        Ok(Self {
            dim: rule.dim,
            lambda,
            outer_exp,
            points: chart.points,
            masses,
        })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    #[inline]
    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    /// `Σⱼ mⱼ |X−Yⱼ|^{−λ}`, i.e. the potential divided by `t^{outer}`.
    pub fn reduced(&self, x: &[f64]) -> f64 {
        let mut acc = Neumaier::new();
        for (j, m) in self.masses.iter().enumerate() {
            acc.add(m * kernel_from_dist_sq(geometry::dist_sq(x, self.point(j)), self.lambda));
        }
        acc.value()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let t = x[x.len() - 1];
        let w = if self.outer_exp == 0.0 { 1.0 } else { t.powf(self.outer_exp) };
        w * self.reduced(x)
    }

    /// `Σⱼ mⱼ`, the limit of `u/(t^{outer} |X|^{−λ})` at infinity.
    pub fn total_mass(&self) -> f64 {
        crate::sum::sum(self.masses.iter().copied())
    }

    pub fn scale(&mut self, s: f64) {
        for m in &mut self.masses {
            *m *= s;
        }
    }

    /// Values at many points, in parallel, each a fixed-order sum.
    pub fn eval_many(&self, points: &[f64]) -> Vec<f64> {
        points.par_chunks(self.dim).map(|x| self.eval(x)).collect()
    }
}

/// Logarithms `(S_u, S_v)` of the scale factors that turn the ball multiplier
/// `c` into the unit-multiplier half-space system:
/// `S_v = θ(κ−1) ln c/(1−θκ)` and `S_u = −κ(S_v + ln c)`.
pub fn transport_log_scales(theta: f64, kappa: f64, c: f64) -> (f64, f64) {
    let lc = c.ln();
    let s_v = theta * (kappa - 1.0) * lc / (1.0 - theta * kappa);
    let s_u = -kappa * (s_v + lc);
    (s_u, s_v)
}

/// An Euler–Lagrange pair on the half space.
#[derive(Clone, Debug, Serialize)]
pub struct HalfSpacePair {
    pub set: ExponentSet,
    pub u: NystromPotential,
    pub v: NystromPotential,
    pub log_scale_u: f64,
    pub log_scale_v: f64,
}

impl HalfSpacePair {
    /// Transports a ball solution `(f, g, c)`.
    ///
    /// `u` has masses `e^{S_u} Wⱼ w(ηⱼ)^β gⱼ J(ηⱼ)^λ` at `T(ηⱼ)`, so that
    /// `u(Tζ) = e^{S_u} J(ζ)^{2α−λ} (T g)(ζ)`; `v` is built symmetrically from `f`.
    pub fn from_solution(f: &Field, g: &Field, c_star: f64, set: &ExponentSet, rule: &QuadratureRule) -> Result<Self> {
        if f.rule_id != rule.id || g.rule_id != rule.id {
            return range("fields are not bound to this rule");
        }
        if !(c_star > 0.0) {
            return range(format!("multiplier c = {c_star} must be positive"));
        }
        let chart = ChartNodes::new(rule);
        let (s_u, s_v) = transport_log_scales(set.theta, set.kappa, c_star);
        let (eu, ev) = (s_u.exp(), s_v.exp());
        let mut mu = Vec::with_capacity(rule.len());
        let mut mv = Vec::with_capacity(rule.len());
        for j in 0..rule.len() {
            let w = 0.5 * (1.0 - geometry::radius_sq(rule.node(j)));
            let jl = chart.jac[j].powf(set.lambda);
            mu.push(eu * rule.weights[j] * w.powf(set.beta) * g.values[j] * jl);
            mv.push(ev * rule.weights[j] * w.powf(set.alpha) * f.values[j] * jl);
        }
        let mk = |masses, outer| NystromPotential {
            dim: rule.dim,
            lambda: set.lambda,
            outer_exp: outer,
            points: chart.points.clone(),
            masses,
        };
        Ok(Self {
            set: set.clone(),
            u: mk(mu, set.alpha),
            v: mk(mv, set.beta),
            log_scale_u: s_u,
            log_scale_v: s_v,
        })
    }

    pub fn u(&self, x: &[f64]) -> f64 {
        self.u.eval(x)
    }

    pub fn v(&self, y: &[f64]) -> f64 {
        self.v.eval(y)
    }

    /// `lim_{t→0} u/t^α` at the boundary point `(x, 0)`.
    pub fn u_trace(&self, x: &[f64]) -> f64 {
        let mut c = x.to_vec();
        c.push(0.0);
        self.u.reduced(&c)
    }

    pub fn v_trace(&self, x: &[f64]) -> f64 {
        let mut c = x.to_vec();
        c.push(0.0);
        self.v.reduced(&c)
    }
}
