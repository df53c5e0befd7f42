//! Numerical checks of the identities and inequalities satisfied by the
//! functional and its Euler–Lagrange system.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

mod asymptotics;
mod fubini;
mod hardy;
mod identities;
mod kelvin;
mod pohozaev;
mod profile;
mod spheres;

pub use asymptotics::{asymptotic_constants, AsymptoticsReport, RatioSample};
pub use fubini::{fubini_check, FubiniIntegrals};
pub use hardy::{check_reversed_hardy, check_reversed_holder, HardyMode, HardyWeights};
pub use identities::{geometry_identities, kernel_positivity, random_ball_points, random_half_ball_points};
pub use kelvin::{conformal_profile_v, kelvin_identity_residual, kernel_k, mu_one};
pub use pohozaev::{cutoff, pohozaev_ladder, pohozaev_ladders, pohozaev_residual, smooth_step, LadderReport, LadderRung, PohozaevOptions};
pub use profile::{
    boundary_profile_fit, boundary_profile_fit_free, boundary_profile_fit_with_exponent, profile_exponent, profile_value,
    trace_decay_exponent, trace_samples, ProfileParams, ProfileWhich,
};
pub use spheres::{moving_sphere_scan, SphereScan};

/// Outcome of one check. Two-sided checks pass iff `|residual| ≤ tolerance`;
/// one-sided checks store the violation `min(lhs − rhs, 0)` as the residual,
/// so the same rule applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub metadata: BTreeMap<String, Value>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            residual,
            pass: residual.abs() <= tolerance,
            tolerance,
            metadata: BTreeMap::new(),
        }
    }

    /// `lhs ≥ rhs − tolerance`.
    pub fn at_least(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let gap = lhs - rhs;
        let mut r = Self::new(name, lhs, rhs, gap.min(0.0), tolerance);
        r.metadata.insert("gap".into(), num(gap));
        r
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn with_f64(self, key: &str, value: f64) -> Self {
        self.with(key, num(value))
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(Value::as_f64)
    }
}

/// JSON number, or a string for non-finite values.
pub(crate) fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(v.to_string()))
}

/// Directions on the upper unit half-sphere with surface weights.
///
/// The polar angle measured from the boundary plane uses the substitution
/// `ϑ = a τ^m / (τ^m + (1−τ)^m)`, which clusters nodes at the boundary
/// (`m = 1` is plain Gauss–Legendre in the angle).
pub(crate) fn half_sphere_directions(dim: usize, order: usize, m: f64) -> crate::Result<Vec<(Vec<f64>, f64)>> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let (tau, wt) = crate::quad::gauss_legendre_interval(order, 0.0, 1.0);
    let span = match dim {
        2 => PI,
        3 => FRAC_PI_2,
        _ => return crate::error::range(format!("half-sphere directions need dimension 2 or 3, got {dim}")),
    };
    let angle = |t: f64| {
        let (a, b) = (t.powf(m), (1.0 - t).powf(m));
        let th = span * a / (a + b);
        let dth = span * m * t.powf(m - 1.0) * (1.0 - t).powf(m - 1.0) / (a + b).powi(2);
        (th, dth)
    };
    let mut out = Vec::new();
    for (t, w) in tau.iter().zip(&wt) {
        let (th, dth) = angle(*t);
        if dim == 2 {
            out.push((vec![th.cos(), th.sin()], w * dth));
        } else {
            let az = 2 * order;
            for k in 0..az {
                let psi = 2.0 * PI * k as f64 / az as f64;
                let dir = vec![th.cos() * psi.cos(), th.cos() * psi.sin(), th.sin()];
                out.push((dir, w * dth * th.cos() * 2.0 * PI / az as f64));
            }
        }
    }
    Ok(out)
}
