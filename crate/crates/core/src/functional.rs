//! Node-sampled fields, quasi-norms, the weighted operators and the bilinear
//! form on the ball.
//!
//! With `w(ζ) = (1−|ζ−x¹|²)/2`, the ball operator is
//! `(T g)(ζ) = w(ζ)^α ∫_B w(η)^β |ζ−η|^{−λ} g(η) dη`,
//! its transpose swaps the roles of `α` and `β`, and the bilinear form is
//! `∫ f T g`. Since `λ < 0` the kernel is continuous, so collocation at the
//! quadrature nodes is exact up to the rule's error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{range, Error, Result};
use crate::geometry::{self, radius_sq, HalfSpacePoint};
use crate::pair::NystromPotential;
use crate::params::ExponentSet;
use crate::quad::{fmt17, integrate_indexed, QuadratureRule};
use crate::sum::Neumaier;

/// Positive values at the nodes of one quadrature rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
    pub rule_id: String,
}

impl Field {
    pub fn new(values: Vec<f64>, rule: &QuadratureRule) -> Result<Self> {
        if values.len() != rule.len() {
            return range(format!(
                "field has {} values but the rule has {} nodes",
                values.len(),
                rule.len()
            ));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("field value {v} at node {i} is not positive")));
        }
        Ok(Self {
            values,
            rule_id: rule.id.clone(),
        })
    }

    pub fn constant(rule: &QuadratureRule, c: f64) -> Result<Self> {
        Self::new(vec![c; rule.len()], rule)
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(rule: &QuadratureRule, f: F) -> Result<Self> {
        Self::new((0..rule.len()).map(|i| f(rule.node(i))).collect(), rule)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value; the first one among ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
            rule_id: self.rule_id.clone(),
        }
    }

    /// Pointwise power `f^e`.
    pub fn powf(&self, e: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v.powf(e)).collect(),
            rule_id: self.rule_id.clone(),
        }
    }

    /// `sup |self − other| / sup |other|`.
    pub fn rel_sup_diff(&self, other: &Field) -> f64 {
        let num = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        num / other.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn check_rule(&self, rule: &QuadratureRule) -> Result<()> {
        if self.rule_id != rule.id || self.values.len() != rule.len() {
            return range(format!(
                "field bound to rule {} used with rule {}",
                self.rule_id, rule.id
            ));
        }
        Ok(())
    }

    /// CSV with columns `index, value, rule_id`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "value", "rule_id"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), fmt17(*v), self.rule_id.clone()])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Reads the format written by [`Field::to_csv`]; rows must be in index
    /// order and carry `rule`'s id.
    pub fn from_csv(data: &[u8], rule: &QuadratureRule) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            index: usize,
            value: f64,
            rule_id: String,
        }
        let mut values = Vec::with_capacity(rule.len());
        for (k, row) in csv::Reader::from_reader(data).deserialize::<Row>().enumerate() {
            let row = row?;
            if row.index != k {
                return range(format!("row {k} has index {}", row.index));
            }
            if row.rule_id != rule.id {
                return range(format!("field written for rule {}, expected {}", row.rule_id, rule.id));
            }
            values.push(row.value);
        }
        Self::new(values, rule)
    }
}

/// `(∫ f^p)^{1/p}` for `p ∈ (0, 1)`.
pub fn quasi_norm(f: &Field, p: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return range(format!("quasi-norm exponent p = {p} outside (0, 1)"));
    }
    f.check_rule(rule)?;
    Ok(integrate_indexed(|i| f.values[i].powf(p), rule)?.powf(1.0 / p))
}

/// `(∫ h^{p′})^{1/p′}` for a negative exponent `p′`.
pub fn quasi_norm_negative(h: &Field, p_conj: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(p_conj < 0.0) {
        return range(format!("negative quasi-norm needs p' < 0, got {p_conj}"));
    }
    h.check_rule(rule)?;
    Ok(integrate_indexed(|i| h.values[i].powf(p_conj), rule)?.powf(1.0 / p_conj))
}

/// Kernel matrices up to this many nodes are cached (`N² · 8` bytes).
pub const KERNEL_CACHE_NODES: usize = 4096;

/// The ball operator `T` for fixed `(α, β, λ)` on one rule.
#[derive(Debug)]
pub struct BallOperator<'a> {
    rule: &'a QuadratureRule,
    lambda: f64,
    alpha: f64,
    beta: f64,
    w_alpha: Vec<f64>,
    w_beta: Vec<f64>,
    kernel: Option<Vec<f64>>,
}

#[inline]
pub(crate) fn kernel_from_dist_sq(d2: f64, lambda: f64) -> f64 {
    if lambda == -2.0 {
        d2
    } else {
        d2.powf(-0.5 * lambda)
    }
}

impl<'a> BallOperator<'a> {
    pub fn new(set: &ExponentSet, rule: &'a QuadratureRule) -> Result<Self> {
        if rule.dim != set.space_dim() {
            return range(format!(
                "rule dimension {} does not match n + 1 = {}",
                rule.dim,
                set.space_dim()
            ));
        }
        let n = rule.len();
        let w: Vec<f64> = (0..n).map(|i| 0.5 * (1.0 - radius_sq(rule.node(i)))).collect();
        let w_alpha = w.iter().map(|v| v.powf(set.alpha)).collect();
        let w_beta = w.iter().map(|v| v.powf(set.beta)).collect();
        let lambda = set.lambda;
        let kernel = (n <= KERNEL_CACHE_NODES).then(|| {
            let mut k = vec![0.0; n * n];
            k.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let zi = rule.node(i);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = kernel_from_dist_sq(geometry::dist_sq(zi, rule.node(j)), lambda);
                }
            });
            k
        });
        Ok(Self {
            rule,
            lambda,
            alpha: set.alpha,
            beta: set.beta,
            w_alpha,
            w_beta,
            kernel,
        })
    }

    pub fn rule(&self) -> &QuadratureRule {
        self.rule
    }

    pub fn w_alpha(&self) -> &[f64] {
        &self.w_alpha
    }

    pub fn w_beta(&self) -> &[f64] {
        &self.w_beta
    }

    fn check_set(&self, set: &ExponentSet) -> Result<()> {
        if set.alpha != self.alpha || set.beta != self.beta || set.lambda != self.lambda {
            return range("exponent set does not match the operator's (alpha, beta, lambda)");
        }
        Ok(())
    }

    /// `|ζᵢ − ζⱼ|^{−λ}`.
    #[inline]
    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        match &self.kernel {
            Some(k) => k[i * self.rule.len() + j],
            None => kernel_from_dist_sq(geometry::dist_sq(self.rule.node(i), self.rule.node(j)), self.lambda),
        }
    }

    /// `(K b)_i = Σⱼ |ζᵢ−ζⱼ|^{−λ} bⱼ`, rows in parallel, compensated rows.
    fn matvec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rule.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = Neumaier::new();
                match &self.kernel {
                    Some(k) => {
                        for (kij, bj) in k[i * n..(i + 1) * n].iter().zip(b) {
                            acc.add(kij * bj);
                        }
                    }
                    None => {
                        let zi = self.rule.node(i);
                        for (j, bj) in b.iter().enumerate() {
                            let d2 = geometry::dist_sq(zi, self.rule.node(j));
                            acc.add(kernel_from_dist_sq(d2, self.lambda) * bj);
                        }
                    }
                }
                acc.value()
            })
            .collect()
    }

    fn apply_weighted(&self, g: &Field, inner: &[f64], outer: &[f64]) -> Result<Field> {
        g.check_rule(self.rule)?;
        let b: Vec<f64> = (0..g.len())
            .map(|j| self.rule.weights[j] * inner[j] * g.values[j])
            .collect();
        let values: Vec<f64> = self
            .matvec(&b)
            .into_iter()
            .zip(outer)
            .map(|(s, w)| w * s)
            .collect();
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("operator value {v}")));
        }
        Field::new(values, self.rule)
    }

    /// `(T g)(ζᵢ) = w(ζᵢ)^α Σⱼ Wⱼ w(ζⱼ)^β |ζᵢ−ζⱼ|^{−λ} gⱼ`.
    pub fn apply_t(&self, g: &Field) -> Result<Field> {
        self.apply_weighted(g, &self.w_beta, &self.w_alpha)
    }

    /// `(Tᵗ f)(ζⱼ) = w(ζⱼ)^β Σᵢ Wᵢ w(ζᵢ)^α |ζᵢ−ζⱼ|^{−λ} fᵢ`.
    pub fn apply_t_transpose(&self, f: &Field) -> Result<Field> {
        self.apply_weighted(f, &self.w_alpha, &self.w_beta)
    }

    /// `∬ w^α(ζ) w^β(η) |ζ−η|^{−λ} f(ζ) g(η)`.
    pub fn bilinear(&self, f: &Field, g: &Field) -> Result<f64> {
        f.check_rule(self.rule)?;
        let u = self.apply_t(g)?;
        integrate_indexed(|i| f.values[i] * u.values[i], self.rule)
    }

    /// Bilinear form over `‖f‖_p ‖g‖_q` with `p, q` from `set`.
    pub fn quotient(&self, f: &Field, g: &Field, set: &ExponentSet) -> Result<f64> {
        self.check_set(set)?;
        let num = self.bilinear(f, g)?;
        Ok(num / (quasi_norm(f, set.p, self.rule)? * quasi_norm(g, set.q, self.rule)?))
    }
}

/// Which half-space operator to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfSpaceMode {
    /// `I_{α,β} f(Y) = z^β ∫ t^α f(X) |X−Y|^{−λ} dX`
    IAlphaBeta,
    /// `E_λ f(Y) = ∫ f(X) |X−Y|^{−λ} dX`
    ELambda,
}

/// Half-space operator applied to `f`, evaluated through the ball chart:
/// `X = T(ζ)` with `dX = J(ζ)^{2(n+1)} dζ`.
pub fn halfspace_operator<F>(
    f: F,
    set: &ExponentSet,
    rule: &QuadratureRule,
    mode: HalfSpaceMode,
) -> Result<impl Fn(&HalfSpacePoint) -> Result<f64>>
where
    F: Fn(&HalfSpacePoint) -> f64,
{
    if rule.dim != set.space_dim() {
        return range("rule dimension does not match n + 1");
    }
    let (inner, outer) = match mode {
        HalfSpaceMode::IAlphaBeta => (set.alpha, set.beta),
        HalfSpaceMode::ELambda => (0.0, 0.0),
    };
    let pot = NystromPotential::from_density(|x| f(&HalfSpacePoint::from_coords(x)), inner, outer, set.lambda, rule)?;
    Ok(move |y: &HalfSpacePoint| {
        if !(y.t > 0.0) {
            return Err(Error::Domain(format!("evaluation point needs t > 0, got {}", y.t)));
        }
        Ok(pot.eval(&y.coords()))
    })
}
