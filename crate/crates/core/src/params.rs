//! Exponent sets: validation, duals, conformal exponents and the Pohozaev balance.
//!
//! Every exponent used elsewhere in the crate comes from an [`ExponentSet`].
//! Two constructors exist: [`validate_exponents`] enforces the scaling balance
//! `1/p + 1/q + (λ − α − β)/(n+m) = 2`, while [`ExponentSet::unbalanced`]
//! checks ranges only and is used for subcritical solves and trial exponents.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{range, Error, Result};

/// Absolute tolerance on the scaling balance.
pub const BALANCE_TOL: f64 = 1e-12;

/// Raw user input. Either `p` or `q` (not both) may be omitted and is then
/// solved from the balance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExponents {
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
}

fn default_m() -> usize {
    1
}

/// A validated exponent system with its derived duals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    /// p' = p/(p−1) < 0
    pub p_conj: f64,
    /// r = q' = q/(q−1) < 0
    pub q_conj: f64,
    /// θ = 1/(1−p)
    pub theta: f64,
    /// κ = 1/(1−q)
    pub kappa: f64,
}

impl ExponentSet {
    /// Builds a set without the balance requirement. All range conditions of
    /// the balanced case still apply.
    pub fn unbalanced(
        n: usize,
        m: usize,
        lambda: f64,
        alpha: f64,
        beta: f64,
        p: f64,
        q: f64,
    ) -> Result<Self> {
        check_common(n, m, lambda, alpha, beta)?;
        for (name, v) in [("p", p), ("q", q)] {
            if !v.is_finite() {
                return range(format!("{name} must be finite"));
            }
            if !(v > 0.0 && v < 1.0) {
                return range(format!("{name} = {v} outside (0, 1)"));
            }
        }
        let set = Self::derive(n, m, lambda, alpha, beta, p, q);
        let mf = m as f64;
        if alpha >= -mf / set.p_conj {
            return range(format!(
                "alpha = {alpha} violates alpha < -m/p' = {}",
                -mf / set.p_conj
            ));
        }
        if beta >= -mf / set.q_conj {
            return range(format!(
                "beta = {beta} violates beta < -m/q' = {}",
                -mf / set.q_conj
            ));
        }
        Ok(set)
    }

    /// Builds a set from θ = 1/(1−p) and κ = 1/(1−q) without the balance.
    pub fn from_theta_kappa(
        n: usize,
        m: usize,
        lambda: f64,
        alpha: f64,
        beta: f64,
        theta: f64,
        kappa: f64,
    ) -> Result<Self> {
        if !(theta > 1.0 && kappa > 1.0) {
            return range(format!("theta = {theta}, kappa = {kappa} must both exceed 1"));
        }
        Self::unbalanced(n, m, lambda, alpha, beta, 1.0 - 1.0 / theta, 1.0 - 1.0 / kappa)
    }

    /// The balanced set at the conformal exponents `(p_α, q_β)`.
    pub fn conformal(n: usize, m: usize, lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        let (p, q) = conformal_exponents(n, m, lambda, alpha, beta)?;
        validate_exponents(&RawExponents {
            n,
            m,
            lambda,
            alpha,
            beta,
            p: Some(p),
            q: Some(q),
        })
    }

    /// Same weights and kernel, new `(p, q)`, balance not required.
    pub fn with_pq(&self, p: f64, q: f64) -> Result<Self> {
        Self::unbalanced(self.n, self.m, self.lambda, self.alpha, self.beta, p, q)
    }

    fn derive(n: usize, m: usize, lambda: f64, alpha: f64, beta: f64, p: f64, q: f64) -> Self {
        Self {
            n,
            m,
            lambda,
            alpha,
            beta,
            p,
            q,
            p_conj: p / (p - 1.0),
            q_conj: q / (q - 1.0),
            theta: 1.0 / (1.0 - p),
            kappa: 1.0 / (1.0 - q),
        }
    }

    /// `1/p + 1/q + (λ − α − β)/(n+m) − 2`.
    pub fn balance_residual(&self) -> f64 {
        1.0 / self.p + 1.0 / self.q + (self.lambda - self.alpha - self.beta) / self.dim_nm()
            - 2.0
    }

    pub fn is_balanced(&self) -> bool {
        self.balance_residual().abs() <= BALANCE_TOL
    }

    /// `n + m` as a float.
    pub fn dim_nm(&self) -> f64 {
        (self.n + self.m) as f64
    }

    /// Dimension of the half space `R^{n+1}_+` (requires `m = 1`).
    pub fn space_dim(&self) -> usize {
        self.n + 1
    }

    /// Conformal exponents for this set's `(n, m, λ, α, β)`.
    pub fn conformal_pair(&self) -> (f64, f64) {
        let nm = self.dim_nm();
        (
            2.0 * nm / (2.0 * nm + 2.0 * self.alpha - self.lambda),
            2.0 * nm / (2.0 * nm + 2.0 * self.beta - self.lambda),
        )
    }

    pub(crate) fn require_m1(&self, what: &str) -> Result<()> {
        if self.m != 1 {
            return range(format!("{what} is implemented for m = 1 only (got m = {})", self.m));
        }
        Ok(())
    }
}

fn check_common(n: usize, m: usize, lambda: f64, alpha: f64, beta: f64) -> Result<()> {
    if n == 0 || m == 0 {
        return range("n and m must be positive");
    }
    for (name, v) in [("lambda", lambda), ("alpha", alpha), ("beta", beta)] {
        if !v.is_finite() {
            return range(format!("{name} must be finite"));
        }
    }
    let nm = (n + m) as f64;
    if !(lambda >= -nm && lambda < 0.0) {
        return range(format!("lambda = {lambda} outside [-(n+m), 0) = [{}, 0)", -nm));
    }
    if alpha < 0.0 {
        return range(format!("alpha = {alpha} must be >= 0"));
    }
    if beta < 0.0 {
        return range(format!("beta = {beta} must be >= 0"));
    }
    Ok(())
}

/// Validates a raw tuple, solving the missing one of `p`, `q` from the balance.
pub fn validate_exponents(raw: &RawExponents) -> Result<ExponentSet> {
    let RawExponents {
        n,
        m,
        lambda,
        alpha,
        beta,
        p,
        q,
    } = *raw;
    check_common(n, m, lambda, alpha, beta)?;
    let nm = (n + m) as f64;
    let target = 2.0 - (lambda - alpha - beta) / nm;
    let solve = |other: f64, name: &str| -> Result<f64> {
        if !other.is_finite() || !(other > 0.0 && other < 1.0) {
            return range(format!("{name} = {other} outside (0, 1)"));
        }
        let inv = target - 1.0 / other;
        if !(inv > 1.0) {
            return range(format!(
                "balance gives 1/{} = {inv}, outside (1, inf)",
                if name == "p" { "q" } else { "p" }
            ));
        }
        Ok(1.0 / inv)
    };
    let (p, q) = match (p, q) {
        (Some(p), Some(q)) => (p, q),
        (Some(p), None) => (p, solve(p, "p")?),
        (None, Some(q)) => (solve(q, "q")?, q),
        (None, None) => return range("at least one of p, q must be supplied"),
    };
    let set = ExponentSet::unbalanced(n, m, lambda, alpha, beta, p, q)?;
    let residual = set.balance_residual();
    if residual.abs() > BALANCE_TOL {
        return Err(Error::Balance { residual });
    }
    Ok(set)
}

/// `p_α = 2(n+m)/(2(n+m)+2α−λ)` and `q_β` likewise.
pub fn conformal_exponents(
    n: usize,
    m: usize,
    lambda: f64,
    alpha: f64,
    beta: f64,
) -> Result<(f64, f64)> {
    check_common(n, m, lambda, alpha, beta)?;
    let nm = (n + m) as f64;
    let p = 2.0 * nm / (2.0 * nm + 2.0 * alpha - lambda);
    let q = 2.0 * nm / (2.0 * nm + 2.0 * beta - lambda);
    Ok((p, q))
}

/// `(n+m)/(θ−1) + (n+m)/(κ−1) − (α+β−λ)`.
///
/// When every input is recognisably a small-denominator rational the value
/// is computed exactly, so conformal sets give exactly zero.
pub fn pohozaev_defect(set: &ExponentSet) -> f64 {
    if let Some(v) = exact::pohozaev_defect(set) {
        return v;
    }
    let nm = set.dim_nm();
    nm / (set.theta - 1.0) + nm / (set.kappa - 1.0) - (set.alpha + set.beta - set.lambda)
}

/// Exact rational fast paths for quantities whose exact value matters.
pub(crate) mod exact {
    use super::*;

    const MAX_DEN: i64 = 1_000_000;

    /// Best rational approximation with denominator ≤ 10⁶, accepted only if
    /// it reproduces `x` to a few ulps.
    pub fn to_ratio(x: f64) -> Option<BigRational> {
        if !x.is_finite() {
            return None;
        }
        let tol = 4.0 * f64::EPSILON * x.abs().max(1.0);
        let (mut h0, mut h1) = (0i128, 1i128);
        let (mut k0, mut k1) = (1i128, 0i128);
        let mut y = x;
        for _ in 0..40 {
            let a = y.floor();
            if a.abs() > 1e15 {
                return None;
            }
            let ai = a as i128;
            let h2 = ai * h1 + h0;
            let k2 = ai * k1 + k0;
            if k2 > MAX_DEN as i128 {
                return None;
            }
            h0 = h1;
            h1 = h2;
            k0 = k1;
            k1 = k2;
            if ((h1 as f64) / (k1 as f64) - x).abs() <= tol {
                return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
            }
            let frac = y - a;
            if frac == 0.0 {
                break;
            }
            y = 1.0 / frac;
        }
        None
    }

    pub fn pohozaev_defect(set: &ExponentSet) -> Option<f64> {
        let p = to_ratio(set.p)?;
        let q = to_ratio(set.q)?;
        let a = to_ratio(set.alpha)?;
        let b = to_ratio(set.beta)?;
        let l = to_ratio(set.lambda)?;
        let nm = BigRational::from_integer(BigInt::from(set.n + set.m));
        let one = BigRational::one();
        // (n+m)/(θ−1) = (n+m)(1−p)/p
        let v = &nm * (&one - &p) / &p + &nm * (&one - &q) / &q - (a + b - l);
        if v.is_zero() {
            Some(0.0)
        } else {
            v.to_f64()
        }
    }

    /// `b^e` for rational `b > 0` and rational `e`, exact when `e` is an integer.
    pub fn pow_exact(b: &BigRational, e: &BigRational) -> Option<BigRational> {
        if !e.is_integer() || !b.is_positive() {
            return None;
        }
        let k = e.to_integer().to_i32()?;
        if k.unsigned_abs() > 64 {
            return None;
        }
        let mut acc = BigRational::one();
        for _ in 0..k.unsigned_abs() {
            acc *= b;
        }
        if k < 0 {
            acc = acc.recip();
        }
        Some(acc)
    }
}
