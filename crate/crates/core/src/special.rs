//! Gamma function, the half-sphere angular constant and the constant band.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{range, Error, Result};
use crate::params::{exact, ExponentSet};

const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Γ(x) for real `x` that is not a nonpositive integer.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("gamma argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx)
        let s = sin_pi(x);
        return Ok(PI / (s * gamma(1.0 - x)?));
    }
    if x == x.floor() && x <= 171.0 {
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return Ok(acc);
    }
    let mut ser = LANCZOS_C0;
    for (j, c) in LANCZOS.iter().enumerate() {
        ser += c / (x + (j + 1) as f64);
    }
    let t = x + LANCZOS_G;
    if x < 140.0 {
        Ok(t.powf(x + 0.5) * (-t).exp() * SQRT_2PI * ser / x)
    } else {
        let half = t.powf(0.5 * (x + 0.5));
        Ok(half * ((-t).exp() * half) * SQRT_2PI * ser / x)
    }
}

/// sin(πx) with exact zeros at integers and argument reduction mod 2.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).floor();
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r < 0.5 {
        (PI * r).sin()
    } else if r < 1.5 {
        (PI * (1.0 - r)).sin()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

/// `J(n, s) = π^{n/2} Γ((s+1)/2) / Γ((n+s+1)/2)`, the integral of `ω_{n+1}^s`
/// over the upper unit half sphere `S^n_+`.
pub fn angular_constant(n: usize, s: f64) -> Result<f64> {
    if n == 0 {
        return range("angular_constant needs n >= 1");
    }
    if !(s > -1.0) {
        return range(format!("angular_constant: s = {s} must exceed -1"));
    }
    let nf = n as f64;
    Ok(PI.powf(0.5 * nf) * gamma(0.5 * (s + 1.0))? / gamma(0.5 * (nf + s + 1.0))?)
}

/// Bracket for the sharp constant: `n_lower ≤ N ≤ n_upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantBand {
    pub d1: f64,
    pub d2: f64,
    pub lower_factor: f64,
    pub n_lower: f64,
    pub n_upper: f64,
}

impl ConstantBand {
    fn from_parts(d1: f64, d2: f64, lower_factor: f64) -> Result<Self> {
        let n_upper = d1.min(d2);
        let band = Self {
            d1,
            d2,
            lower_factor,
            n_lower: lower_factor * n_upper,
            n_upper,
        };
        for v in [band.d1, band.d2, band.lower_factor, band.n_lower] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonFinite(format!("constant band component {v}")));
            }
        }
        Ok(band)
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.n_lower && value <= self.n_upper
    }
}

/// The radial exponents whose signs make the four radial integrals converge.
struct RadialExponents {
    e3: f64,
    e4: f64,
    e5: f64,
    e6: f64,
}

fn radial_exponents(set: &ExponentSet) -> Result<RadialExponents> {
    let nm = set.dim_nm();
    let (pc, r) = (set.p_conj, set.q_conj);
    let e = RadialExponents {
        e3: nm + (set.beta - set.lambda) * r,
        e4: nm + set.alpha * pc,
        e5: nm + (set.alpha - set.lambda) * pc,
        e6: nm + set.beta * r,
    };
    if !(e.e4 > 0.0) {
        return range(format!("n+m+alpha*p' = {} must be > 0", e.e4));
    }
    if !(e.e6 > 0.0) {
        return range(format!("n+m+beta*r = {} must be > 0", e.e6));
    }
    if !(e.e3 < 0.0) {
        return range(format!("n+m+(beta-lambda)*r = {} must be < 0", e.e3));
    }
    if !(e.e5 < 0.0) {
        return range(format!("n+m+(alpha-lambda)*p' = {} must be < 0", e.e5));
    }
    let m = set.m as f64;
    if !(set.alpha * pc > -m) {
        return range(format!("alpha*p' = {} must exceed -m (alpha < -m/p')", set.alpha * pc));
    }
    if !(set.beta * r > -m) {
        return range(format!("beta*r = {} must exceed -m (beta < -m/q')", set.beta * r));
    }
    Ok(e)
}

/// D1, D2 and the lower factor for `m = 1`.
///
/// The radial integrals `∫_a^∞ ρ^{s−1} dρ = a^s/|s|` enter with absolute
/// values, so C₃ and C₅ use `|n+1+(β−λ)r|` and `|n+1+(α−λ)p′|`.
pub fn constant_band(set: &ExponentSet) -> Result<ConstantBand> {
    set.require_m1("constant_band")?;
    let e = radial_exponents(set)?;
    let j_alpha = angular_constant(set.n, set.alpha * set.p_conj)?;
    let j_beta = angular_constant(set.n, set.beta * set.q_conj)?;
    let c3 = j_beta / e.e3.abs();
    let c4 = j_alpha / e.e4;
    let c5 = j_alpha / e.e5.abs();
    let c6 = j_beta / e.e6;
    let (ip, ir) = (1.0 / set.p_conj, 1.0 / set.q_conj);
    let d1 = c3.powf(ir) * c4.powf(ip);
    let d2 = c5.powf(ip) * c6.powf(ir);
    ConstantBand::from_parts(d1, d2, lower_factor(set))
}

/// `((pq−p)/(2pq−p−q))^{(1−q)/q} · ((pq−q)/(2pq−p−q))^{(1−p)/p}`.
///
/// Exact when `p`, `q` are small-denominator rationals and the powers combine
/// to integer exponents.
pub fn lower_factor(set: &ExponentSet) -> f64 {
    if let Some(v) = lower_factor_exact(set.p, set.q) {
        return v;
    }
    let (p, q) = (set.p, set.q);
    let den = 2.0 * p * q - p - q;
    ((p * q - p) / den).powf((1.0 - q) / q) * ((p * q - q) / den).powf((1.0 - p) / p)
}

fn lower_factor_exact(p: f64, q: f64) -> Option<f64> {
    let p = exact::to_ratio(p)?;
    let q = exact::to_ratio(q)?;
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let den = &two * &p * &q - &p - &q;
    let b1 = (&p * &q - &p) / &den;
    let b2 = (&p * &q - &q) / &den;
    let e1 = (&one - &q) / &q;
    let e2 = (&one - &p) / &p;
    let v = if b1 == b2 {
        exact::pow_exact(&b1, &(e1 + e2))?
    } else {
        exact::pow_exact(&b1, &e1)? * exact::pow_exact(&b2, &e2)?
    };
    v.to_f64()
}

/// The same factor written with the duals: `(p′/(p′+r))^{−1/r} (r/(p′+r))^{−1/p′}`.
pub fn lower_factor_dual(set: &ExponentSet) -> f64 {
    let (pc, r) = (set.p_conj, set.q_conj);
    (pc / (pc + r)).powf(-1.0 / r) * (r / (pc + r)).powf(-1.0 / pc)
}

/// D1, D2 for a weight depending on `m ≥ 1` of the variables.
///
/// Each bracket carries the full-sphere normalization `2π^{(n+m)/2}/Γ(m/2)`;
/// at `m = 1` every bracket is twice the corresponding `m = 1` bracket, so
/// `D1 = 2^{1/p′+1/r} · constant_band(set).d1` (same for D2).
pub fn constant_band_general_m(set: &ExponentSet) -> Result<ConstantBand> {
    let e = radial_exponents(set)?;
    let nm = set.dim_nm();
    let m = set.m as f64;
    let (p, q) = (set.p, set.q);
    let norm = 2.0 * PI.powf(0.5 * nm) / gamma(0.5 * m)?;
    // Γ arguments exactly as displayed: ((a+m)p−m)/(2(p−1)) and ((n+m+a)p−n−m)/(2(p−1)).
    let gamma_ratio = |a: f64, s: f64| -> Result<f64> {
        let num = ((a + m) * s - m) / (2.0 * (s - 1.0));
        let den = ((nm + a) * s - nm) / (2.0 * (s - 1.0));
        Ok(gamma(num)? / gamma(den)?)
    };
    let ga = gamma_ratio(set.alpha, p)?;
    let gb = gamma_ratio(set.beta, q)?;
    let (ip, ir) = ((p - 1.0) / p, (q - 1.0) / q);
    let br = |den_exp: f64, g: f64| norm * g / den_exp.abs();
    let d1 = br(e.e4, ga).powf(ip) * br(e.e3, gb).powf(ir);
    let d2 = br(e.e5, ga).powf(ip) * br(e.e6, gb).powf(ir);
    ConstantBand::from_parts(d1, d2, lower_factor(set))
}

/// Relative gap between the two forms of the lower factor.
pub fn lower_factor_mismatch(set: &ExponentSet) -> f64 {
    let a = lower_factor(set);
    let b = lower_factor_dual(set);
    (a - b).abs() / a.abs().max(b.abs())
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return range(format!("ln_gamma needs x > 0, got {x}"));
    }
    if x < 140.0 {
        return Ok(gamma(x)?.ln());
    }
    let mut ser = LANCZOS_C0;
    for (j, c) in LANCZOS.iter().enumerate() {
        ser += c / (x + (j + 1) as f64);
    }
    let t = x + LANCZOS_G;
    Ok((x + 0.5) * t.ln() - t + (SQRT_2PI * ser / x).ln())
}
