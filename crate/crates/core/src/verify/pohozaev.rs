use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{half_sphere_directions, CheckReport};
use crate::error::{range, Error, Result};
use crate::functional::kernel_from_dist_sq;
use crate::geometry::dist_sq;
use crate::pair::ChartNodes;
use crate::params::{pohozaev_defect, ExponentSet};
use crate::quad::{gauss_legendre_interval, QuadratureRule};
use crate::sum::{dot, sum, Neumaier};

const POHOZAEV_TOL: f64 = 1e-3;

fn h(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn dh(x: f64) -> f64 {
    if x > 0.0 {
        h(x) / (x * x)
    } else {
        0.0
    }
}

/// Smooth step `S(x) = h(x)/(h(x) + h(1−x))` with `h(x) = e^{−1/x}`:
/// zero for `x ≤ 0`, one for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    let (a, b) = (h(x), h(1.0 - x));
    a / (a + b)
}

fn smooth_step_deriv(x: f64) -> f64 {
    let (a, b) = (h(x), h(1.0 - x));
    let den = a + b;
    (dh(x) * b + a * dh(1.0 - x)) / (den * den)
}

/// Radial cutoff `φ_{ε,R}(ρ) = S(ρ/ε − 1)(1 − S(ρ/R − 1))` and `ρ φ′(ρ)`.
/// It vanishes on `[0, ε]` and `[2R, ∞)` and equals one on `[2ε, R]`.
pub fn cutoff(rho: f64, eps: f64, big_r: f64) -> (f64, f64) {
    let (a, b) = (smooth_step(rho / eps - 1.0), 1.0 - smooth_step(rho / big_r - 1.0));
    let da = smooth_step_deriv(rho / eps - 1.0) / eps;
    let db = -smooth_step_deriv(rho / big_r - 1.0) / big_r;
    (a * b, rho * (da * b + a * db))
}

/// Orders of the outer polar quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PohozaevOptions {
    /// Gauss–Legendre points per log-radial panel.
    pub radial_order: usize,
    /// Subpanels across each cutoff transition shell.
    pub shell_panels: usize,
    pub angular_order: usize,
    /// Boundary clustering power of the angle substitution.
    pub cluster: f64,
}

impl Default for PohozaevOptions {
    fn default() -> Self {
        Self {
            radial_order: 20,
            shell_panels: 4,
            angular_order: 48,
            cluster: 3.0,
        }
    }
}

/// Values at the mapped ball nodes, shared across a ladder.
struct InnerData {
    chart: ChartNodes,
    /// `μⱼ zⱼ^β v(Yⱼ)^{−κ}`
    wy: Vec<f64>,
    /// `μᵢ tᵢ^α u(Xᵢ)^{−θ}`
    wx: Vec<f64>,
    a: f64,
}

impl InnerData {
    fn new<U, V>(u: &U, v: &V, set: &ExponentSet, rule: &QuadratureRule) -> Result<Self>
    where
        U: Fn(&[f64]) -> f64 + Sync,
        V: Fn(&[f64]) -> f64 + Sync,
    {
        let chart = ChartNodes::new(rule);
        let vals: Vec<(f64, f64)> = (0..chart.len())
            .into_par_iter()
            .map(|i| (u(chart.point(i)), v(chart.point(i))))
            .collect();
        if let Some(i) = vals.iter().position(|(a, b)| !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite())) {
            return Err(Error::NonFinite(format!("u or v not positive and finite at node {i}")));
        }
        let n = chart.len();
        let wy = (0..n)
            .map(|j| chart.measure[j] * chart.height(j).powf(set.beta) * vals[j].1.powf(-set.kappa))
            .collect();
        let wx = (0..n)
            .map(|i| chart.measure[i] * chart.height(i).powf(set.alpha) * vals[i].0.powf(-set.theta))
            .collect();
        let a = sum((0..n).map(|j| chart.measure[j] * vals[j].1.powf(1.0 - set.kappa)));
        Ok(Self { chart, wy, wx, a })
    }

    /// `Σⱼ wⱼ |X−Yⱼ|^{−λ} (c − λ (X−Yⱼ)·X/|X−Yⱼ|²)`.
    fn dilation_sum(&self, x: &[f64], weights: &[f64], c: f64, lambda: f64) -> f64 {
        let mut acc = Neumaier::new();
        let mut diff = vec![0.0; x.len()];
        for (j, w) in weights.iter().enumerate() {
            let y = self.chart.point(j);
            for k in 0..x.len() {
                diff[k] = x[k] - y[k];
            }
            let d2 = dist_sq(x, y);
            let radial = dot(&diff, x);
            acc.add(w * (c * kernel_from_dist_sq(d2, lambda) - lambda * radial * kernel_from_dist_sq(d2, lambda + 2.0)));
        }
        acc.value()
    }
}

/// Outer polar nodes `(X, weight, ρ)` covering the support of `φ_{ε,R}`.
fn outer_nodes(dim: usize, eps: f64, big_r: f64, opts: &PohozaevOptions) -> Result<Vec<(Vec<f64>, f64, f64)>> {
    let dirs = half_sphere_directions(dim, opts.angular_order, opts.cluster)?;
    let mut panels: Vec<(f64, f64)> = Vec::new();
    let mut split = |a: f64, b: f64, k: usize| {
        let (la, lb) = (a.ln(), b.ln());
        for i in 0..k {
            let s0 = la + (lb - la) * i as f64 / k as f64;
            let s1 = la + (lb - la) * (i + 1) as f64 / k as f64;
            panels.push((s0, s1));
        }
    };
    split(eps, 2.0 * eps, opts.shell_panels);
    split(2.0 * eps, big_r, ((big_r / (2.0 * eps)).ln().ceil() as usize).max(1));
    split(big_r, 2.0 * big_r, opts.shell_panels);
    let mut out = Vec::new();
    for (s0, s1) in panels {
        let (s, ws) = gauss_legendre_interval(opts.radial_order, s0, s1);
        for (si, wi) in s.iter().zip(&ws) {
            let rho = si.exp();
            // dX = ρ^{dim} ds dω
            let wr = wi * rho.powi(dim as i32);
            for (dir, wd) in &dirs {
                let x: Vec<f64> = dir.iter().map(|c| c * rho).collect();
                out.push((x, wr * wd, rho));
            }
        }
    }
    Ok(out)
}

/// Pieces of one rung: `L = Iu/(θ′−1) + Iv/(κ′−1)` and `R`.
#[derive(Clone, Copy, Debug)]
struct RungParts {
    iu: f64,
    iv: f64,
    r: f64,
}

impl RungParts {
    fn lhs(&self, trial: (f64, f64)) -> f64 {
        self.iu / (trial.0 - 1.0) + self.iv / (trial.1 - 1.0)
    }
}

fn rung<U, V>(
    u: &U,
    v: &V,
    inner: &InnerData,
    set: &ExponentSet,
    eps: f64,
    big_r: f64,
    opts: &PohozaevOptions,
) -> Result<RungParts>
where
    U: Fn(&[f64]) -> f64 + Sync,
    V: Fn(&[f64]) -> f64 + Sync,
{
    let dim = set.space_dim();
    let d = dim as f64;
    let nodes = outer_nodes(dim, eps, big_r, opts)?;
    let parts: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|(x, w, rho)| {
            let (phi, rdphi) = cutoff(*rho, eps, big_r);
            if phi == 0.0 && rdphi == 0.0 {
                return (0.0, 0.0, 0.0);
            }
            let t = x[dim - 1];
            let (ux, vx) = (u(x), v(x));
            let div = d * phi + rdphi;
            let r1 = ux.powf(-set.theta) * t.powf(set.alpha) * inner.dilation_sum(x, &inner.wy, set.alpha, set.lambda);
            let r2 = vx.powf(-set.kappa) * t.powf(set.beta) * inner.dilation_sum(x, &inner.wx, set.beta, set.lambda);
            (
                w * div * ux.powf(1.0 - set.theta),
                w * div * vx.powf(1.0 - set.kappa),
                w * phi * (r1 + r2),
            )
        })
        .collect();
    let rp = RungParts {
        iu: sum(parts.iter().map(|p| p.0)),
        iv: sum(parts.iter().map(|p| p.1)),
        r: sum(parts.iter().map(|p| p.2)),
    };
    if !(rp.iu.is_finite() && rp.iv.is_finite() && rp.r.is_finite()) {
        return Err(Error::NonFinite(format!("Pohozaev sides at ε = {eps}, R = {big_r}")));
    }
    Ok(rp)
}

fn check_inputs(set: &ExponentSet, rule: &QuadratureRule, eps: f64, big_r: f64) -> Result<()> {
    if rule.dim != set.space_dim() {
        return range("rule dimension does not match n + 1");
    }
    if !(eps > 0.0 && big_r > 0.0 && eps < 2.0 * big_r) {
        return range(format!("cutoff radii need 0 < ε < 2R, got ε = {eps}, R = {big_r}"));
    }
    if !(2.0 * eps < big_r) {
        return Err(Error::Truncation(format!("plateau [2ε, R] is empty for ε = {eps}, R = {big_r}")));
    }
    Ok(())
}

/// Trial exponents `(θ′, κ′)` for the dilation coefficients, defaulting to the field's own.
fn trial_pair(set: &ExponentSet, trial: Option<(f64, f64)>) -> Result<(f64, f64)> {
    let t = trial.unwrap_or((set.theta, set.kappa));
    if !(t.0 > 1.0 && t.1 > 1.0) {
        return range(format!("trial exponents need θ, κ > 1, got {t:?}"));
    }
    Ok(t)
}

fn trial_defect(set: &ExponentSet, t: (f64, f64)) -> f64 {
    let nm = set.dim_nm();
    nm / (t.0 - 1.0) + nm / (t.1 - 1.0) - (set.alpha + set.beta - set.lambda)
}

/// Weak Pohozaev identity with cutoff `φ_{ε,R}`:
///
/// ```text
/// L = 1/(θ′−1) ∫ u^{1−θ}((n+1)φ + X·∇φ) + 1/(κ′−1) ∫ v^{1−κ}((n+1)φ + Y·∇φ)
/// R = ∬ t^α z^β |X−Y|^{−λ} u^{−θ} v^{−κ} (αφ(X) + βφ(Y) − λ(φ(X)(X−Y)·X + φ(Y)(Y−X)·Y)/|X−Y|²)
/// ```
///
/// The residual is `(L − R)/∫v^{1−κ}`. With `(θ′, κ′) = (θ, κ)` it vanishes
/// for a solution; as `φ → 1` it tends to the trial defect.
#[allow(clippy::too_many_arguments)]
pub fn pohozaev_residual<U, V>(
    u: U,
    v: V,
    set: &ExponentSet,
    rule: &QuadratureRule,
    eps: f64,
    big_r: f64,
    trial: Option<(f64, f64)>,
    opts: &PohozaevOptions,
) -> Result<CheckReport>
where
    U: Fn(&[f64]) -> f64 + Sync,
    V: Fn(&[f64]) -> f64 + Sync,
{
    check_inputs(set, rule, eps, big_r)?;
    let t = trial_pair(set, trial)?;
    let inner = InnerData::new(&u, &v, set, rule)?;
    let parts = rung(&u, &v, &inner, set, eps, big_r, opts)?;
    let (l, r) = (parts.lhs(t), parts.r);
    let res = (l - r) / inner.a;
    Ok(CheckReport::new("pohozaev_rung", l / inner.a, r / inner.a, res, POHOZAEV_TOL)
        .with_f64("epsilon", eps)
        .with_f64("big_r", big_r)
        .with_f64("trial_defect", trial_defect(set, t)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub epsilon: f64,
    pub big_r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub rungs: Vec<LadderRung>,
    /// `r∞` of the fit `r = r∞ + aε + b/R + cε/R`.
    pub extrapolated: f64,
    /// `∫ v^{1−κ}`.
    pub common_integral: f64,
    pub field_defect: f64,
    pub trial_defect: f64,
    pub sign_matches: bool,
}

/// Residuals on the grid `eps_list × r_list` and their extrapolation to
/// `ε → 0`, `R → ∞`. The check passes iff `|r∞| ≤ 10⁻³`.
#[allow(clippy::too_many_arguments)]
pub fn pohozaev_ladder<U, V>(
    u: U,
    v: V,
    set: &ExponentSet,
    rule: &QuadratureRule,
    eps_list: &[f64],
    r_list: &[f64],
    trial: Option<(f64, f64)>,
    opts: &PohozaevOptions,
) -> Result<(LadderReport, CheckReport)>
where
    U: Fn(&[f64]) -> f64 + Sync,
    V: Fn(&[f64]) -> f64 + Sync,
{
    let mut all = pohozaev_ladders(u, v, set, rule, eps_list, r_list, &[trial], opts)?;
    Ok(all.remove(0))
}

/// [`pohozaev_ladder`] for several trial exponent pairs sharing one set of
/// integrals (only the coefficients of `L` depend on the trial).
#[allow(clippy::too_many_arguments)]
pub fn pohozaev_ladders<U, V>(
    u: U,
    v: V,
    set: &ExponentSet,
    rule: &QuadratureRule,
    eps_list: &[f64],
    r_list: &[f64],
    trials: &[Option<(f64, f64)>],
    opts: &PohozaevOptions,
) -> Result<Vec<(LadderReport, CheckReport)>>
where
    U: Fn(&[f64]) -> f64 + Sync,
    V: Fn(&[f64]) -> f64 + Sync,
{
    if eps_list.len() < 2 || r_list.len() < 2 {
        return range("the ladder needs at least two values of ε and of R");
    }
    for e in eps_list {
        for r in r_list {
            check_inputs(set, rule, *e, *r)?;
        }
    }
    let trials: Vec<(f64, f64)> = trials.iter().map(|t| trial_pair(set, *t)).collect::<Result<_>>()?;
    let inner = InnerData::new(&u, &v, set, rule)?;
    let mut grid = Vec::new();
    for &e in eps_list {
        for &r in r_list {
            grid.push((e, r, rung(&u, &v, &inner, set, e, r, opts)?));
        }
    }
    let m = DMatrix::from_fn(grid.len(), 4, |i, k| {
        let (e, ir) = (grid[i].0, 1.0 / grid[i].1);
        [1.0, e, ir, e * ir][k]
    });
    let svd = m.svd(true, true);
    let field_defect = pohozaev_defect(set);
    let mut out = Vec::new();
    for t in trials {
        let rungs: Vec<LadderRung> = grid
            .iter()
            .map(|(e, r, parts)| LadderRung {
                epsilon: *e,
                big_r: *r,
                lhs: parts.lhs(t) / inner.a,
                rhs: parts.r / inner.a,
                residual: (parts.lhs(t) - parts.r) / inner.a,
            })
            .collect();
        let b = DVector::from_iterator(rungs.len(), rungs.iter().map(|r| r.residual));
        let coef = svd
            .solve(&b, 1e-14)
            .map_err(|e| Error::Fit(format!("ladder extrapolation: {e}")))?;
        let extrapolated = coef[0];
        let td = trial_defect(set, t);
        let predicted = td - field_defect;
        let sign_matches = predicted.abs() < POHOZAEV_TOL || extrapolated.signum() == predicted.signum();
        let check = CheckReport::new("pohozaev", extrapolated, 0.0, extrapolated, POHOZAEV_TOL)
            .with_f64("trial_theta", t.0)
            .with_f64("trial_kappa", t.1)
            .with_f64("trial_defect", td)
            .with_f64("field_defect", field_defect)
            .with_f64("common_integral", inner.a)
            .with("sign_matches", sign_matches);
        out.push((
            LadderReport {
                rungs,
                extrapolated,
                common_integral: inner.a,
                field_defect,
                trial_defect: td,
                sign_matches,
            },
            check,
        ));
    }
    Ok(out)
}
