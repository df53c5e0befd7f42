use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::error::{range, Result};
use crate::pair::ChartNodes;
use crate::params::ExponentSet;
use crate::quad::QuadratureRule;
use crate::solver::{bound_grid, growth_bound_constant};
use crate::sum::sum;

const ASYMPTOTIC_TOL: f64 = 1e-2;
const RADII: [f64; 3] = [10.0, 100.0, 1000.0];

/// Ratios `u/(t^α |X|^{−λ})` and `v/(z^β |X|^{−λ})` at one far point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub radius: f64,
    pub direction: Vec<f64>,
    pub u_ratio: f64,
    pub v_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    /// `a = ∫ z^β v^{−κ}`, the predicted limit of `u/(t^α|X|^{−λ})`.
    pub a: f64,
    /// `b = ∫ t^α u^{−θ}`.
    pub b: f64,
    pub samples: Vec<RatioSample>,
    /// Worst relative error at the largest radius.
    pub max_rel_error: f64,
    /// Relative errors shrink with the radius along every ray.
    pub monotone: bool,
    pub bound_constant_u: f64,
    pub bound_constant_v: f64,
}

fn directions(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for k in 1..=3 {
        let a = std::f64::consts::PI * k as f64 / 4.0;
        let mut d = vec![0.0; dim];
        d[0] = a.cos();
        d[dim - 1] = a.sin();
        out.push(d);
    }
    out
}

/// Far-field constants of a pair and the ratios that should approach them.
pub fn asymptotic_constants<U, V>(u: U, v: V, set: &ExponentSet, rule: &QuadratureRule) -> Result<(AsymptoticsReport, CheckReport)>
where
    U: Fn(&[f64]) -> f64 + Sync,
    V: Fn(&[f64]) -> f64 + Sync,
{
    let dim = set.space_dim();
    if rule.dim != dim {
        return range("rule dimension does not match n + 1");
    }
    let chart = ChartNodes::new(rule);
    let parts: Vec<(f64, f64)> = (0..chart.len())
        .into_par_iter()
        .map(|j| {
            let y = chart.point(j);
            let h = chart.height(j);
            (
                chart.measure[j] * h.powf(set.beta) * v(y).powf(-set.kappa),
                chart.measure[j] * h.powf(set.alpha) * u(y).powf(-set.theta),
            )
        })
        .collect();
    let a = sum(parts.iter().map(|p| p.0));
    let b = sum(parts.iter().map(|p| p.1));

    let mut samples = Vec::new();
    let mut monotone = true;
    let mut max_rel_error = 0.0_f64;
    for dir in directions(dim) {
        let mut prev = f64::INFINITY;
        for (k, &r) in RADII.iter().enumerate() {
            let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            let t = x[dim - 1];
            let far = r.powf(-set.lambda);
            let s = RatioSample {
                radius: r,
                direction: dir.clone(),
                u_ratio: u(&x) / (t.powf(set.alpha) * far),
                v_ratio: v(&x) / (t.powf(set.beta) * far),
            };
            let err = ((s.u_ratio - a) / a).abs().max(((s.v_ratio - b) / b).abs());
            if err > prev {
                monotone = false;
            }
            prev = err;
            if k + 1 == RADII.len() {
                max_rel_error = max_rel_error.max(err);
            }
            samples.push(s);
        }
    }
    let grid = bound_grid(dim);
    let bound_constant_u = growth_bound_constant(&u, set.alpha, set.lambda, &grid);
    let bound_constant_v = growth_bound_constant(&v, set.beta, set.lambda, &grid);
    let report = AsymptoticsReport {
        a,
        b,
        samples,
        max_rel_error,
        monotone,
        bound_constant_u,
        bound_constant_v,
    };
    let check = CheckReport::new("asymptotics", a, b, max_rel_error, ASYMPTOTIC_TOL)
        .with("monotone", monotone)
        .with_f64("bound_constant_u", bound_constant_u)
        .with_f64("bound_constant_v", bound_constant_v);
    Ok((report, check))
}
