use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::error::{range, Error, Result};
use crate::functional::kernel_from_dist_sq;
use crate::geometry::dist_sq;
use crate::pair::ChartNodes;
use crate::params::ExponentSet;
use crate::quad::QuadratureRule;
use crate::sum::{sum, Neumaier};

const FUBINI_TOL: f64 = 1e-4;

/// `A = ∫ v^{1−κ}`, `B = ∬ t^α z^β |X−Y|^{−λ} u^{−θ} v^{−κ}`, `C = ∫ u^{1−θ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FubiniIntegrals {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FubiniIntegrals {
    /// Largest pairwise difference relative to the largest integral.
    pub fn spread(&self) -> f64 {
        let hi = self.a.max(self.b).max(self.c);
        let lo = self.a.min(self.b).min(self.c);
        (hi - lo) / hi.abs()
    }
}

/// The three integrals of an Euler–Lagrange pair, all on the mapped ball nodes.
/// For a solution they agree.
pub fn fubini_check<U, V>(u: U, v: V, set: &ExponentSet, rule: &QuadratureRule) -> Result<(FubiniIntegrals, CheckReport)>
where
    U: Fn(&[f64]) -> f64 + Sync,
    V: Fn(&[f64]) -> f64 + Sync,
{
    if rule.dim != set.space_dim() {
        return range("rule dimension does not match n + 1");
    }
    let chart = ChartNodes::new(rule);
    let n = chart.len();
    let uv: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| (u(chart.point(i)), v(chart.point(i))))
        .collect();
    if let Some(i) = uv.iter().position(|(a, b)| !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite())) {
        return Err(Error::NonFinite(format!("u or v not positive and finite at node {i}")));
    }
    let a = sum((0..n).map(|j| chart.measure[j] * uv[j].1.powf(1.0 - set.kappa)));
    let c = sum((0..n).map(|i| chart.measure[i] * uv[i].0.powf(1.0 - set.theta)));
    // row weights μᵢ tᵢ^α uᵢ^{−θ}, column weights μⱼ zⱼ^β vⱼ^{−κ}
    let wx: Vec<f64> = (0..n)
        .map(|i| chart.measure[i] * chart.height(i).powf(set.alpha) * uv[i].0.powf(-set.theta))
        .collect();
    let wy: Vec<f64> = (0..n)
        .map(|j| chart.measure[j] * chart.height(j).powf(set.beta) * uv[j].1.powf(-set.kappa))
        .collect();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = Neumaier::new();
            let xi = chart.point(i);
            for j in 0..n {
                acc.add(wy[j] * kernel_from_dist_sq(dist_sq(xi, chart.point(j)), set.lambda));
            }
            wx[i] * acc.value()
        })
        .collect();
    let b = sum(rows);
    let ints = FubiniIntegrals { a, b, c };
    let report = CheckReport::new("fubini", a, c, ints.spread(), FUBINI_TOL)
        .with_f64("a", a)
        .with_f64("b", b)
        .with_f64("c", c);
    Ok((ints, report))
}
