use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::error::{range, Error, Result};
use crate::functional::{quasi_norm, quasi_norm_negative, Field};
use crate::params::ExponentSet;
use crate::quad::{gauss_legendre_interval, integrate_indexed, QuadratureRule};
use crate::special::{angular_constant, constant_band, lower_factor_dual};

/// `∫ f h ≥ ‖f‖_p ‖h‖_{p′}` for positive fields and `p ∈ (0, 1)`.
pub fn check_reversed_holder(f: &Field, h: &Field, p: f64, rule: &QuadratureRule) -> Result<CheckReport> {
    if !(p > 0.0 && p < 1.0) {
        return range(format!("p = {p} outside (0, 1)"));
    }
    let p_conj = p / (p - 1.0);
    let lhs = integrate_indexed(|i| f.values[i] * h.values[i], rule)?;
    let rhs = quasi_norm(f, p, rule)? * quasi_norm_negative(h, p_conj, rule)?;
    Ok(CheckReport::at_least("reversed_holder", lhs, rhs, 1e-10).with_f64("p", p))
}

/// Which reversed Hardy inequality to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardyMode {
    /// `(∫ W (∫_{B⁺_{|X|}} f)^r)^{1/r} ≥ C (∫ f^p U)^{1/p}`
    Inner,
    /// Same with the complement of `B⁺_{|X|}`.
    Outer,
}

/// Power weights `W = z^{w_z} |X|^{w_rho}` and `U = t^{u_t} |X|^{u_rho}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyWeights {
    pub w_z: f64,
    pub w_rho: f64,
    pub u_t: f64,
    pub u_rho: f64,
}

impl HardyWeights {
    /// The choices made for the two halves of the constant band:
    /// `W = z^{βr}|·|^{−λr}`, `U = t^{−αp}` (inner) and
    /// `W = z^{βr}`, `U = t^{−αp}|·|^{λp}` (outer).
    pub fn for_band(set: &ExponentSet, mode: HardyMode) -> Self {
        let r = set.q_conj;
        match mode {
            HardyMode::Inner => Self {
                w_z: set.beta * r,
                w_rho: -set.lambda * r,
                u_t: -set.alpha * set.p,
                u_rho: 0.0,
            },
            HardyMode::Outer => Self {
                w_z: set.beta * r,
                w_rho: 0.0,
                u_t: -set.alpha * set.p,
                u_rho: set.lambda * set.p,
            },
        }
    }
}

const LOG_MIN: f64 = -14.0;
const LOG_MAX: f64 = 14.0;
const PANEL: f64 = 1.0;
const PANEL_ORDER: usize = 16;
const TAIL_LIMIT: f64 = 0.1;

/// Integral over `s = ln ρ ∈ [a, b]` of `h(s)` with panels of width ≤ 1.
fn log_integral<H: Fn(f64) -> f64>(h: &H, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / PANEL).ceil().max(1.0) as usize;
    let w = (b - a) / panels as f64;
    let mut acc = crate::sum::Neumaier::new();
    for k in 0..panels {
        let (x, wt) = gauss_legendre_interval(PANEL_ORDER, a + w * k as f64, a + w * (k + 1) as f64);
        for (s, ws) in x.iter().zip(&wt) {
            acc.add(ws * h(*s));
        }
    }
    acc.value()
}

/// Tail of `∫ h(s) ds` beyond an endpoint, assuming `h ≈ h(s₀) e^{k(s−s₀)}`.
/// `outward` is `−1` for the tail toward `−∞`, `+1` toward `+∞`.
fn tail<H: Fn(f64) -> f64>(h: &H, s0: f64, outward: f64) -> f64 {
    let h0 = h(s0);
    if h0 == 0.0 {
        return 0.0;
    }
    if !h0.is_finite() {
        return f64::INFINITY;
    }
    let h1 = h(s0 - 0.5 * outward);
    let decay = (h1.ln() - h0.ln()) / 0.5;
    if !(decay > 1e-3) {
        return f64::INFINITY;
    }
    h0 / decay
}

/// Integral with tails; `Err` when a finite tail is too large.
fn full_integral<H: Fn(f64) -> f64>(h: &H, what: &str) -> Result<(f64, bool)> {
    let core = log_integral(h, LOG_MIN, LOG_MAX);
    if !core.is_finite() {
        return Ok((f64::INFINITY, true));
    }
    let t = tail(h, LOG_MIN, -1.0) + tail(h, LOG_MAX, 1.0);
    if t.is_infinite() {
        return Ok((f64::INFINITY, true));
    }
    if t > TAIL_LIMIT * core.abs() && t > 0.0 {
        return Err(Error::Truncation(format!(
            "{what}: tail bound {t:e} exceeds 10% of the estimate {core:e}"
        )));
    }
    Ok((core + t, false))
}

/// Reversed weighted Hardy inequality for a radial profile `f(ρ)`.
///
/// Both sides are reduced to one-dimensional radial integrals in `ln ρ` with
/// the half-sphere angular constants `J(n, ·)`. Tails outside
/// `[e^{-14}, e^{14}]` are extrapolated from the local power law. A divergent
/// left integral makes the left side `(+∞)^{1/r} = 0`.
pub fn check_reversed_hardy<F>(f: F, set: &ExponentSet, mode: HardyMode, weights: &HardyWeights) -> Result<CheckReport>
where
    F: Fn(f64) -> f64,
{
    let n = set.n;
    let nf = n as f64;
    let (p, r) = (set.p, set.q_conj);
    let area = angular_constant(n, 0.0)?;
    let ang_w = angular_constant(n, weights.w_z)?;
    let ang_u = angular_constant(n, weights.u_t)?;
    let radial_f = |s: f64| {
        let rho = s.exp();
        f(rho) * rho.powf(nf + 1.0)
    };
    // F(ρ) = area · ∫ f s^n ds over (0, ρ) or (ρ, ∞)
    let (f_below, f_below_div) = match tail(&radial_f, LOG_MIN, -1.0) {
        t if t.is_infinite() => (f64::INFINITY, true),
        t => (t, false),
    };
    let (f_above, f_above_div) = match tail(&radial_f, LOG_MAX, 1.0) {
        t if t.is_infinite() => (f64::INFINITY, true),
        t => (t, false),
    };
    let inner_mass = |s: f64| -> f64 {
        let v = match mode {
            HardyMode::Inner => f_below + log_integral(&radial_f, LOG_MIN, s.min(LOG_MAX)),
            HardyMode::Outer => f_above + log_integral(&radial_f, s.max(LOG_MIN), LOG_MAX),
        };
        area * v
    };
    let lhs_integrand = |s: f64| {
        let rho = s.exp();
        let m = inner_mass(s);
        let pw = if m == 0.0 { f64::INFINITY } else { m.powf(r) };
        ang_w * rho.powf(weights.w_z + weights.w_rho + nf + 1.0) * pw
    };
    let rhs_integrand = |s: f64| {
        let rho = s.exp();
        ang_u * rho.powf(weights.u_t + weights.u_rho + nf + 1.0) * f(rho).powf(p)
    };
    let (lhs_int, lhs_div) = full_integral(&lhs_integrand, "left side")?;
    let (rhs_int, rhs_div) = full_integral(&rhs_integrand, "right side")?;
    let lhs = if lhs_int.is_infinite() { 0.0 } else { lhs_int.powf(1.0 / r) };
    let rhs_norm = rhs_int.powf(1.0 / p);
    let band = constant_band(set)?;
    let d = match mode {
        HardyMode::Inner => band.d1,
        HardyMode::Outer => band.d2,
    };
    let c = lower_factor_dual(set) * d;
    let rhs = c * rhs_norm;
    let name = match mode {
        HardyMode::Inner => "reversed_hardy_inner",
        HardyMode::Outer => "reversed_hardy_outer",
    };
    let tol = 1e-12 * lhs.abs().max(1.0);
    Ok(CheckReport::at_least(name, lhs, rhs, tol)
        .with_f64("constant", c)
        .with_f64("lhs_integral", lhs_int)
        .with_f64("rhs_integral", rhs_int)
        .with("lhs_divergent", lhs_div)
        .with("rhs_divergent", rhs_div)
        .with("mass_tail_divergent", f_below_div || f_above_div))
}
