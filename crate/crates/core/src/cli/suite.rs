use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::Resolved;
use crate::error::{range, Result};
use crate::functional::{BallOperator, Field};
use crate::pair::HalfSpacePair;
use crate::params::{validate_exponents, ExponentSet, RawExponents};
use crate::quad::QuadratureRule;
use crate::solver::{solve_subcritical, SolveOptions};
use crate::verify::{self, CheckReport, HardyMode, HardyWeights, PohozaevOptions, ProfileWhich};

pub const SUITES: [&str; 9] = [
    "holder",
    "hardy",
    "kelvin",
    "fubini",
    "pohozaev",
    "asymptotics",
    "profile",
    "spheres",
    "identities",
];

/// Relative gap below the conformal exponents for the solution used by the
/// pair-based checks.
pub const NEAR_CONFORMAL: f64 = 1e-6;

fn conformal_set(r: &Resolved) -> Result<ExponentSet> {
    let (pa, _) = r.conformal()?;
    validate_exponents(&RawExponents {
        n: r.n,
        m: r.m,
        lambda: r.lambda,
        alpha: r.alpha,
        beta: r.beta,
        p: Some(pa),
        q: None,
    })
}

/// Solution at `p = p_α(1−10⁻⁶)`, `q = q_β(1−10⁻⁶)`, transported to the half space.
pub fn near_conformal_pair(r: &Resolved, rule: &QuadratureRule) -> Result<HalfSpacePair> {
    let (pa, qb) = r.conformal()?;
    let f = 1.0 - NEAR_CONFORMAL;
    let set = ExponentSet::unbalanced(r.n, r.m, r.lambda, r.alpha, r.beta, pa * f, qb * f)?;
    let op = BallOperator::new(&set, rule)?;
    let opts = SolveOptions {
        max_iter: r.max_iter,
        tol: r.tol,
        delta_min: 0.0,
        damping: r.damping,
    };
    let rep = solve_subcritical(&set, &op, &opts)?.require_converged()?;
    HalfSpacePair::from_solution(&rep.f, &rep.g, rep.c_star, &set, rule)
}

fn holder_checks(set: &ExponentSet, rule: &QuadratureRule, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<CheckReport> = None;
    for _ in 0..20 {
        let f = Field::new((0..rule.len()).map(|_| rng.random_range(0.1..10.0)).collect(), rule)?;
        let h = Field::new((0..rule.len()).map(|_| rng.random_range(0.1..10.0)).collect(), rule)?;
        let c = verify::check_reversed_holder(&f, &h, set.p, rule)?;
        if worst.as_ref().is_none_or(|w| c.meta_f64("gap") < w.meta_f64("gap")) {
            worst = Some(c);
        }
    }
    let f = Field::from_fn(rule, |z| 1.0 + 0.5 * z[0] * z[0])?;
    let h = f.powf(set.p - 1.0).scaled(3.0);
    let mut eq = verify::check_reversed_holder(&f, &h, set.p, rule)?;
    eq.name = "reversed_holder_equality".into();
    let gap = eq.lhs - eq.rhs;
    let eq = CheckReport::new(eq.name, eq.lhs, eq.rhs, gap / eq.rhs.abs(), 1e-9);
    let mut w = worst.expect("twenty samples");
    w.name = "reversed_holder_random".into();
    Ok(vec![w, eq])
}

fn hardy_checks(r: &Resolved) -> Result<Vec<CheckReport>> {
    let set = conformal_set(r)?;
    let mut out = Vec::new();
    for mode in [HardyMode::Inner, HardyMode::Outer] {
        let w = HardyWeights::for_band(&set, mode);
        let mut zero = verify::check_reversed_hardy(|_| 0.0, &set, mode, &w)?;
        zero.name.push_str("_zero");
        out.push(zero);
        let mut bump = verify::check_reversed_hardy(|rho: f64| (-rho.ln().powi(2)).exp(), &set, mode, &w)?;
        bump.name.push_str("_bump");
        out.push(bump);
    }
    Ok(out)
}

fn kelvin_checks(r: &Resolved, set: &ExponentSet, rule: &QuadratureRule, seed: u64) -> Result<Vec<CheckReport>> {
    let mut xi = vec![0.0; r.n];
    xi[0] = 0.3;
    let v = verify::conformal_profile_v(set);
    let tp = verify::random_half_ball_points(&vec![0.0; r.n], 2.0, 20, seed);
    Ok(vec![
        verify::kelvin_identity_residual(&v, &xi, 0.8, &tp, set, rule, 48)?,
        verify::kernel_positivity(&xi, 0.8, set.lambda, 1000, seed)?,
    ])
}

fn profile_grid(n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        (0..=400).map(|k| vec![-20.0 + 0.1 * k as f64]).collect()
    } else {
        let mut g = Vec::new();
        for i in 0..=40 {
            for j in 0..=40 {
                let mut x = vec![0.0; n];
                x[0] = -20.0 + i as f64;
                x[1] = -20.0 + j as f64;
                g.push(x);
            }
        }
        g
    }
}

fn sphere_grids(n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let radii = (1..=60).map(|k| 0.05 * k as f64).collect();
    let mut pts = Vec::new();
    for i in 0..60 {
        for j in 1..60 {
            let mut x = vec![0.0; n + 1];
            x[0] = -3.0 + 0.1 * i as f64;
            x[n] = 0.05 * j as f64;
            pts.push(x);
        }
    }
    (radii, pts)
}

/// Runs the named checks (`all` expands to every suite) in a fixed order.
pub fn run_suite(r: &Resolved, rule: &QuadratureRule) -> Result<Vec<CheckReport>> {
    let mut names: Vec<&str> = Vec::new();
    for s in &r.suite {
        if s == "all" {
            names.extend(SUITES);
        } else if let Some(k) = SUITES.iter().find(|k| **k == s.as_str()) {
            names.push(k);
        } else {
            return range(format!("unknown suite '{s}'; expected one of {} or all", SUITES.join(", ")));
        }
    }
    let needs_pair = names
        .iter()
        .any(|n| matches!(*n, "fubini" | "pohozaev" | "asymptotics" | "profile" | "spheres"));
    let pair = if needs_pair { Some(near_conformal_pair(r, rule)?) } else { None };
    let (pa, qb) = r.conformal()?;
    let near = ExponentSet::unbalanced(
        r.n,
        r.m,
        r.lambda,
        r.alpha,
        r.beta,
        pa * (1.0 - NEAR_CONFORMAL),
        qb * (1.0 - NEAR_CONFORMAL),
    )?;
    let mut out = Vec::new();
    for name in SUITES.iter().filter(|s| names.contains(s)) {
        match *name {
            "holder" => out.extend(holder_checks(&near, rule, r.seed)?),
            "hardy" => out.extend(hardy_checks(r)?),
            "kelvin" => out.extend(kelvin_checks(r, &near, rule, r.seed)?),
            "identities" => {
                out.extend(verify::geometry_identities(r.n + 1, 1000, r.seed)?);
                let xi = vec![0.0; r.n];
                out.push(verify::kernel_positivity(&xi, 1.0, r.lambda, 1000, r.seed)?);
            }
            other => {
                let p = pair.as_ref().expect("pair built for pair-based suites");
                let u = |x: &[f64]| p.u(x);
                let v = |y: &[f64]| p.v(y);
                match other {
                    "fubini" => out.push(verify::fubini_check(u, v, &p.set, rule)?.1),
                    "pohozaev" => {
                        let trial = match (r.theta, r.kappa) {
                            (None, None) => None,
                            (t, k) => Some((t.unwrap_or(p.set.theta), k.unwrap_or(p.set.kappa))),
                        };
                        let (_, c) = verify::pohozaev_ladder(
                            u,
                            v,
                            &p.set,
                            rule,
                            &[0.1, 0.05],
                            &[5.0, 10.0],
                            trial,
                            &PohozaevOptions::default(),
                        )?;
                        out.push(c);
                    }
                    "asymptotics" => out.push(verify::asymptotic_constants(u, v, &p.set, rule)?.1),
                    "profile" => {
                        let samples = verify::trace_samples(p, ProfileWhich::FProfile, &profile_grid(r.n));
                        let (_, c) = verify::boundary_profile_fit(&samples, &p.set, ProfileWhich::FProfile)?;
                        let decay = verify::trace_decay_exponent(&p.set, ProfileWhich::FProfile);
                        let (free, res) = verify::boundary_profile_fit_free(&samples, decay)?;
                        out.push(c.with_f64("free_exponent", free.exponent).with_f64("free_residual", res));
                    }
                    "spheres" => {
                        let (radii, pts) = sphere_grids(r.n);
                        let xi = vec![0.0; r.n];
                        let (_, c) = verify::moving_sphere_scan(u, p.set.lambda - 2.0 * p.set.alpha, &xi, &radii, &pts);
                        out.push(c);
                    }
                    _ => unreachable!("suite names are validated above"),
                }
            }
        }
    }
    Ok(out)
}
