//! Alternating best-response minimization of the ball quotient, the
//! subcritical-to-critical sweep and the blow-up rescaling diagnostic.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{range, Error, Result};
use crate::functional::{quasi_norm, BallOperator, Field};
use crate::geometry::{self, ball_to_half, BallPoint, HalfSpacePoint, TraceMode};
use crate::pair::HalfSpacePair;
use crate::params::ExponentSet;
use crate::quad::{integrate_indexed, QuadratureRule};
use crate::special::{constant_band, ConstantBand};

/// Stopping and safety parameters of [`solve_subcritical`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Required gap below the conformal exponents.
    pub delta_min: f64,
    /// Geometric damping weight on the previous iterate, in `[0, 1)`.
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-10,
            delta_min: 1e-3,
            damping: 0.0,
        }
    }
}

/// Outcome of an alternating minimization.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub set: ExponentSet,
    #[serde(skip)]
    pub f: Field,
    #[serde(skip)]
    pub g: Field,
    pub rule_id: String,
    pub c_star: f64,
    /// Quotient at the start and after every half-step.
    pub quotient_history: Vec<f64>,
    pub el_residual: f64,
    pub el_residual_f: f64,
    pub el_residual_g: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_change: f64,
    pub min_f: f64,
    pub min_g: f64,
    pub max_f: f64,
    pub max_g: f64,
    /// `max |f(ζ)−f(η)|/|ζ−η|^{1/2}` over node pairs.
    pub holder_bound: f64,
}

impl SolveReport {
    /// Largest increase between consecutive history entries (negative when
    /// strictly decreasing).
    pub fn max_increase(&self) -> f64 {
        self.quotient_history
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                iterations: self.iterations,
                change: self.final_change,
            })
        }
    }
}

fn normalize(f: Field, p: f64, rule: &QuadratureRule) -> Result<Field> {
    let s = quasi_norm(&f, p, rule)?;
    Ok(f.scaled(1.0 / s))
}

/// `f ∝ (T g)^{1/(p−1)}` with `‖f‖_p = 1`: the exact minimizer of the quotient
/// in `f` by the equality case of the reversed Hölder inequality.
pub fn best_response_f(g: &Field, set: &ExponentSet, op: &BallOperator) -> Result<Field> {
    let u = op.apply_t(g)?;
    normalize(u.powf(1.0 / (set.p - 1.0)), set.p, op.rule())
}

/// `g ∝ (Tᵗ f)^{1/(q−1)}` with `‖g‖_q = 1`.
pub fn best_response_g(f: &Field, set: &ExponentSet, op: &BallOperator) -> Result<Field> {
    let v = op.apply_t_transpose(f)?;
    normalize(v.powf(1.0 / (set.q - 1.0)), set.q, op.rule())
}

fn check_subcritical(set: &ExponentSet, delta_min: f64) -> Result<()> {
    let (pa, qb) = set.conformal_pair();
    if set.p > pa - delta_min || set.q > qb - delta_min {
        return range(format!(
            "not subcritical: need p <= {} and q <= {} (delta_min = {delta_min}), got p = {}, q = {}",
            pa - delta_min,
            qb - delta_min,
            set.p,
            set.q
        ));
    }
    Ok(())
}

fn damp(new: Field, old: &Field, d: f64, p: f64, rule: &QuadratureRule) -> Result<Field> {
    if d == 0.0 {
        return Ok(new);
    }
    let values = new
        .values
        .iter()
        .zip(&old.values)
        .map(|(a, b)| a.powf(1.0 - d) * b.powf(d))
        .collect();
    normalize(Field::new(values, rule)?, p, rule)
}

/// Alternating minimization from `f = g ≡ const`.
pub fn solve_subcritical(set: &ExponentSet, op: &BallOperator, opts: &SolveOptions) -> Result<SolveReport> {
    solve_subcritical_from(set, op, opts, None)
}

/// As [`solve_subcritical`], optionally warm-started from a previous pair.
pub fn solve_subcritical_from(
    set: &ExponentSet,
    op: &BallOperator,
    opts: &SolveOptions,
    start: Option<(&Field, &Field)>,
) -> Result<SolveReport> {
    check_subcritical(set, opts.delta_min)?;
    if !(0.0..1.0).contains(&opts.damping) {
        return range(format!("damping {} outside [0, 1)", opts.damping));
    }
    let rule = op.rule();
    let (mut f, mut g) = match start {
        Some((f0, g0)) => (normalize(f0.clone(), set.p, rule)?, normalize(g0.clone(), set.q, rule)?),
        None => (
            normalize(Field::constant(rule, 1.0)?, set.p, rule)?,
            normalize(Field::constant(rule, 1.0)?, set.q, rule)?,
        ),
    };
    let mut history = vec![op.quotient(&f, &g, set)?];
    let mut converged = false;
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let u = op.apply_t(&g)?;
        let f_new = normalize(u.powf(1.0 / (set.p - 1.0)), set.p, rule)?;
        let f_new = damp(f_new, &f, opts.damping, set.p, rule)?;
        let q1 = integrate_indexed(|i| f_new.values[i] * u.values[i], rule)?
            / (quasi_norm(&f_new, set.p, rule)? * quasi_norm(&g, set.q, rule)?);
        history.push(q1);
        let v = op.apply_t_transpose(&f_new)?;
        let g_new = normalize(v.powf(1.0 / (set.q - 1.0)), set.q, rule)?;
        let g_new = damp(g_new, &g, opts.damping, set.q, rule)?;
        let q2 = integrate_indexed(|i| g_new.values[i] * v.values[i], rule)?
            / (quasi_norm(&f_new, set.p, rule)? * quasi_norm(&g_new, set.q, rule)?);
        let q_prev = history[history.len() - 2];
        history.push(q2);
        change = f_new
            .rel_sup_diff(&f)
            .max(g_new.rel_sup_diff(&g))
            .max((q2 - q_prev).abs() / q2.abs());
        f = f_new;
        g = g_new;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let c_star = *history.last().expect("nonempty history");
    let (el_f, el_g) = el_residuals(&f, &g, c_star, set, op)?;
    Ok(SolveReport {
        set: set.clone(),
        rule_id: rule.id.clone(),
        c_star,
        quotient_history: history,
        el_residual: el_f.max(el_g),
        el_residual_f: el_f,
        el_residual_g: el_g,
        iterations,
        converged,
        final_change: change,
        min_f: f.min(),
        min_g: g.min(),
        max_f: f.max(),
        max_g: g.max(),
        holder_bound: holder_bound(&f, rule, 0.5),
        f,
        g,
    })
}

/// `sup|c f^{p−1} − T g|/sup|T g|` and the analogue for `g`.
pub fn el_residuals(f: &Field, g: &Field, c: f64, set: &ExponentSet, op: &BallOperator) -> Result<(f64, f64)> {
    let u = op.apply_t(g)?;
    let v = op.apply_t_transpose(f)?;
    let res = |x: &Field, e: f64, w: &Field| {
        let lhs = x.powf(e).scaled(c);
        lhs.rel_sup_diff(w)
    };
    Ok((res(f, set.p - 1.0, &u), res(g, set.q - 1.0, &v)))
}

/// `max |f(ζᵢ)−f(ζⱼ)| / |ζᵢ−ζⱼ|^γ` over distinct node pairs.
pub fn holder_bound(f: &Field, rule: &QuadratureRule, gamma: f64) -> f64 {
    (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let zi = rule.node(i);
            let mut best: f64 = 0.0;
            for j in 0..rule.len() {
                let d2 = geometry::dist_sq(zi, rule.node(j));
                if d2 > 0.0 {
                    best = best.max((f.values[i] - f.values[j]).abs() / d2.powf(0.5 * gamma));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// One level of a critical sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub p: f64,
    pub q: f64,
    pub c_star: f64,
    pub iterations: usize,
    /// Iterations from a cold start, when requested.
    pub cold_iterations: Option<usize>,
    pub el_residual: f64,
    pub converged: bool,
}

/// Sweep table with first-order Richardson extrapolation.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// `R_j` from levels `j, j+1`.
    pub richardson: Vec<f64>,
    pub n_est: f64,
    /// `|R_last − R_prev|`.
    pub stability: f64,
    pub band: Option<ConstantBand>,
    pub in_band: Option<bool>,
}

/// `(δ_j c_{j+1} − δ_{j+1} c_j)/(δ_j − δ_{j+1})`: the limit of the line
/// through `(δ_j, c_j)` and `(δ_{j+1}, c_{j+1})`.
pub fn richardson_first_order(deltas: &[f64], values: &[f64]) -> Vec<f64> {
    deltas
        .windows(2)
        .zip(values.windows(2))
        .map(|(d, c)| (d[0] * c[1] - d[1] * c[0]) / (d[0] - d[1]))
        .collect()
}

/// Solves at `p_j = p_α(1−δ_j)`, `q_j = q_β(1−δ_j)` for a decreasing schedule,
/// warm-starting each level from the previous one, and extrapolates `δ → 0`.
pub fn critical_sweep(
    base: &ExponentSet,
    schedule: &[f64],
    op: &BallOperator,
    opts: &SolveOptions,
    compare_cold: bool,
) -> Result<SweepReport> {
    if schedule.len() < 2 {
        return range("sweep needs at least two levels");
    }
    if schedule.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return range("sweep levels must lie in (0, 1)");
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return range("sweep schedule must be strictly decreasing");
    }
    let (pa, qb) = base.conformal_pair();
    let mut points = Vec::with_capacity(schedule.len());
    let mut prev: Option<(Field, Field)> = None;
    for &delta in schedule {
        let set = base.with_pq(pa * (1.0 - delta), qb * (1.0 - delta))?;
        let start = prev.as_ref().map(|(f, g)| (f, g));
        let rep = solve_subcritical_from(&set, op, opts, start)?.require_converged()?;
        let cold_iterations = if compare_cold && prev.is_some() {
            Some(solve_subcritical(&set, op, opts)?.iterations)
        } else {
            None
        };
        points.push(SweepPoint {
            delta,
            p: set.p,
            q: set.q,
            c_star: rep.c_star,
            iterations: rep.iterations,
            cold_iterations,
            el_residual: rep.el_residual,
            converged: rep.converged,
        });
        prev = Some((rep.f, rep.g));
    }
    let deltas: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let values: Vec<f64> = points.iter().map(|p| p.c_star).collect();
    let richardson = richardson_first_order(&deltas, &values);
    let n_est = *richardson.last().expect("two levels");
    let stability = if richardson.len() >= 2 {
        (richardson[richardson.len() - 1] - richardson[richardson.len() - 2]).abs()
    } else {
        f64::NAN
    };
    let conformal = base.with_pq(pa, qb)?;
    let band = if conformal.m == 1 { constant_band(&conformal).ok() } else { None };
    let in_band = band.as_ref().map(|b| b.contains(n_est));
    Ok(SweepReport {
        points,
        richardson,
        n_est,
        stability,
        band,
        in_band,
    })
}

/// Distance below which a maximum counts as sitting on the boundary sphere.
pub const NEAR_BOUNDARY: f64 = 1e-6;

/// Rescaled pair `U(X) = ρ^a u(ρX + (x_m,0))`, `V(X) = ρ^b v(ρX + (x_m,0))`.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupReport {
    pub rho: f64,
    pub u_max_location: BallPoint,
    pub u_max_node: usize,
    /// `1 − |ζ_max − x¹|`.
    pub boundary_distance: f64,
    pub near_boundary: bool,
    /// Scaling exponents `a`, `b` that leave the half-space system invariant.
    pub exponent_a: f64,
    pub exponent_b: f64,
    pub base_point: Vec<f64>,
    pub normalization_point: HalfSpacePoint,
    pub u_at_normalization: f64,
    /// Smallest `C` with `U/t^α ∈ [1/C, C](1+|X|^{−λ})` on the sample grid.
    pub bound_constant: f64,
    /// Same for `V/z^β`.
    pub bound_constant_v: f64,
    #[serde(skip)]
    pub pair: HalfSpacePair,
}

impl BlowupReport {
    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().map(|v| v * self.rho).collect();
        for (a, b) in y.iter_mut().zip(&self.base_point) {
            *a += b;
        }
        y
    }

    #[allow(non_snake_case)]
    pub fn U(&self, x: &[f64]) -> f64 {
        self.rho.powf(self.exponent_a) * self.pair.u(&self.shifted(x))
    }

    #[allow(non_snake_case)]
    pub fn V(&self, x: &[f64]) -> f64 {
        self.rho.powf(self.exponent_b) * self.pair.v(&self.shifted(x))
    }
}

/// Exponents `(a, b)` with `a = −s(κ−1)/(θκ−1)`, `b = −s(θ−1)/(θκ−1)`,
/// `s = n+1+α+β−λ`.
pub fn blowup_exponents(set: &ExponentSet) -> (f64, f64) {
    let s0 = set.space_dim() as f64 + set.alpha + set.beta - set.lambda;
    let den = set.theta * set.kappa - 1.0;
    (-s0 * (set.kappa - 1.0) / den, -s0 * (set.theta - 1.0) / den)
}

/// Log-spaced radii times interior directions of the upper half space.
pub fn bound_grid(dim: usize) -> Vec<Vec<f64>> {
    let radii: Vec<f64> = (0..=24).map(|k| 10f64.powf(-3.0 + 0.25 * k as f64)).collect();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if dim == 2 {
        for k in 1..=9 {
            let a = std::f64::consts::PI * k as f64 / 10.0;
            dirs.push(vec![a.cos(), a.sin()]);
        }
    } else {
        for k in 1..=4 {
            let pol = std::f64::consts::FRAC_PI_2 * k as f64 / 5.0;
            for j in 0..4 {
                let az = std::f64::consts::FRAC_PI_2 * j as f64;
                let mut d = vec![0.0; dim];
                d[0] = pol.cos() * az.cos();
                if dim > 2 {
                    d[1] = pol.cos() * az.sin();
                }
                d[dim - 1] = pol.sin();
                dirs.push(d);
            }
        }
        dirs.push({
            let mut d = vec![0.0; dim];
            d[dim - 1] = 1.0;
            d
        });
    }
    let mut pts = Vec::new();
    for r in &radii {
        for d in &dirs {
            pts.push(d.iter().map(|c| c * r).collect());
        }
    }
    pts
}

/// `max(sup q, 1/inf q)` for `q = F/(t^e (1+|X|^{−λ}))` on `grid`.
pub fn growth_bound_constant<F: Fn(&[f64]) -> f64 + Sync>(f: F, e: f64, lambda: f64, grid: &[Vec<f64>]) -> f64 {
    let ratios: Vec<f64> = grid
        .par_iter()
        .map(|x| {
            let t = x[x.len() - 1];
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            f(x) / (t.powf(e) * (1.0 + r.powf(-lambda)))
        })
        .collect();
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    hi.max(1.0 / lo)
}

/// Locates the maximum of `f`, rescales the transported pair so that `U = 1`
/// at the image of that maximum, and measures the two-sided growth bound.
pub fn blowup_renormalize(
    f: &Field,
    g: &Field,
    c_star: f64,
    set: &ExponentSet,
    rule: &QuadratureRule,
) -> Result<BlowupReport> {
    let pair = HalfSpacePair::from_solution(f, g, c_star, set, rule)?;
    blowup_from_pair(pair, f.argmax(), rule)
}

/// Rescaling around the image of ball node `node`.
pub fn blowup_from_pair(pair: HalfSpacePair, node: usize, rule: &QuadratureRule) -> Result<BlowupReport> {
    let set = pair.set.clone();
    let zeta = rule.ball_point(node);
    let boundary_distance = 1.0 - zeta.radius_sq().sqrt();
    if boundary_distance <= 0.0 {
        return Err(Error::Domain("maximum sits on the boundary sphere".into()));
    }
    let near_boundary = boundary_distance < NEAR_BOUNDARY;
    let mode = if near_boundary { TraceMode::Trace } else { TraceMode::Interior };
    let x_max = ball_to_half(&zeta, mode)?;
    let (a, b) = blowup_exponents(&set);
    let u_max = pair.u(&x_max.coords());
    if !(u_max.is_finite() && u_max > 0.0) {
        return Err(Error::NonFinite(format!("u at the maximum point is {u_max}")));
    }
    let rho = u_max.powf(-1.0 / a);
    let mut base_point = x_max.x.clone();
    base_point.push(0.0);
    let normalization_point = HalfSpacePoint::new(vec![0.0; x_max.x.len()], x_max.t / rho);
    let mut rep = BlowupReport {
        rho,
        u_max_location: zeta,
        u_max_node: node,
        boundary_distance,
        near_boundary,
        exponent_a: a,
        exponent_b: b,
        base_point,
        normalization_point,
        u_at_normalization: f64::NAN,
        bound_constant: f64::NAN,
        bound_constant_v: f64::NAN,
        pair,
    };
    rep.u_at_normalization = rep.U(&rep.normalization_point.coords());
    let grid = bound_grid(set.space_dim());
    rep.bound_constant = growth_bound_constant(|x| rep.U(x), set.alpha, set.lambda, &grid);
    rep.bound_constant_v = growth_bound_constant(|x| rep.V(x), set.beta, set.lambda, &grid);
    Ok(rep)
}
