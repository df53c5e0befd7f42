#![allow(dead_code)]

use std::sync::OnceLock;

use rhls::functional::BallOperator;
use rhls::pair::HalfSpacePair;
use rhls::params::{conformal_exponents, ExponentSet};
use rhls::quad::{build_ball_rule, QuadratureRule};
use rhls::solver::{solve_subcritical, SolveOptions, SolveReport};

/// Double-exponential quadrature on `(a, b)`, refined until two levels agree.
/// Independent of every rule in the crate; endpoint singularities are fine.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let hpi = std::f64::consts::FRAC_PI_2;
    let eval = |h: f64| -> f64 {
        let mut s = 0.0;
        let kmax = (6.0 / h).ceil() as i64;
        for k in -kmax..=kmax {
            let t = k as f64 * h;
            let u = hpi * t.sinh();
            let w = hpi * t.cosh() / u.cosh().powi(2);
            // distances to the endpoints without cancellation
            let node = if u > 0.0 {
                b - half * (-u).exp() / u.cosh()
            } else {
                a + half * u.exp() / u.cosh()
            };
            if !(node > a && node < b) || w == 0.0 {
                continue;
            }
            let v = f(node);
            if v.is_finite() {
                s += w * v;
            }
        }
        s * h * half
    };
    let mut h = 0.5;
    let mut prev = eval(h);
    for _ in 0..8 {
        h *= 0.5;
        let cur = eval(h);
        if (cur - prev).abs() <= 1e-15 * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

pub fn rule64() -> &'static QuadratureRule {
    static R: OnceLock<QuadratureRule> = OnceLock::new();
    R.get_or_init(|| build_ball_rule(2, 64, 64).unwrap())
}

pub fn rule_small() -> &'static QuadratureRule {
    static R: OnceLock<QuadratureRule> = OnceLock::new();
    R.get_or_init(|| build_ball_rule(2, 24, 24).unwrap())
}

/// `n = 1, λ = −2, α = β = 0.2`.
pub fn base_exponents() -> (f64, f64) {
    conformal_exponents(1, 1, -2.0, 0.2, 0.2).unwrap()
}

pub fn subcritical_set(frac: f64) -> ExponentSet {
    let (pa, qb) = base_exponents();
    ExponentSet::unbalanced(1, 1, -2.0, 0.2, 0.2, pa * frac, qb * frac).unwrap()
}

/// Converged solve at `p = 0.95 p_α`, `q = 0.95 q_β` on the 64×64 rule.
pub fn subcritical_solution() -> &'static SolveReport {
    static S: OnceLock<SolveReport> = OnceLock::new();
    S.get_or_init(|| {
        let set = subcritical_set(0.95);
        let op = BallOperator::new(&set, rule64()).unwrap();
        solve_subcritical(&set, &op, &SolveOptions::default()).unwrap()
    })
}

/// Converged solve at `1 − 10⁻⁶` of the conformal exponents, transported.
pub fn near_conformal() -> &'static (SolveReport, HalfSpacePair) {
    static S: OnceLock<(SolveReport, HalfSpacePair)> = OnceLock::new();
    S.get_or_init(|| {
        let set = subcritical_set(1.0 - 1e-6);
        let op = BallOperator::new(&set, rule64()).unwrap();
        let opts = SolveOptions {
            delta_min: 0.0,
            ..Default::default()
        };
        let rep = solve_subcritical(&set, &op, &opts).unwrap();
        assert!(rep.converged);
        let pair = HalfSpacePair::from_solution(&rep.f, &rep.g, rep.c_star, &set, rule64()).unwrap();
        (rep, pair)
    })
}
