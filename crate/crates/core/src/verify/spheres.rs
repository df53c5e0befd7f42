use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{num, CheckReport};
use crate::geometry::{dist_sq, kelvin_point, HalfSpacePoint};

const SPHERE_TOL: f64 = 1e-8;

/// `min_{B⁺_r(ξ)} (u − u_{ξ,r})` for each radius of the scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereScan {
    pub radii: Vec<f64>,
    /// `None` when no sample falls inside the half ball.
    pub minima: Vec<Option<f64>>,
    /// Largest radius up to which every minimum is `≥ −10⁻⁸`; `+∞` when the
    /// whole grid qualifies.
    pub r_bar: f64,
}

/// Scan of `u − u_{ξ,r}` with `u_{ξ,r}(X) = (r/|X−ξ|)^s u(X^{ξ,r})`, where
/// `s = λ − 2α` is the homogeneity exponent of the system.
pub fn moving_sphere_scan<U>(u: U, s: f64, xi: &[f64], r_grid: &[f64], sample_grid: &[Vec<f64>]) -> (SphereScan, CheckReport)
where
    U: Fn(&[f64]) -> f64 + Sync,
{
    let mut centre = xi.to_vec();
    centre.push(0.0);
    let mut radii = r_grid.to_vec();
    radii.sort_by(f64::total_cmp);
    let minima: Vec<Option<f64>> = radii
        .par_iter()
        .map(|&r| {
            let mut best: Option<f64> = None;
            for x in sample_grid {
                let d2 = dist_sq(x, &centre);
                let t = x[x.len() - 1];
                if !(t > 0.0 && d2 < r * r && d2 > 0.0) {
                    continue;
                }
                let Ok(img) = kelvin_point(&HalfSpacePoint::from_coords(x), xi, r) else {
                    continue;
                };
                let diff = u(x) - (r * r / d2).powf(s / 2.0) * u(&img.coords());
                if diff.is_finite() {
                    best = Some(best.map_or(diff, |b: f64| b.min(diff)));
                }
            }
            best
        })
        .collect();
    let mut r_bar = f64::INFINITY;
    for (r, m) in radii.iter().zip(&minima) {
        if let Some(m) = m {
            if *m < -SPHERE_TOL {
                r_bar = *r;
                break;
            }
        }
    }
    // r̄ is the last radius before the first violation
    if r_bar.is_finite() {
        let k = radii.iter().position(|r| *r == r_bar).unwrap_or(0);
        r_bar = if k == 0 { 0.0 } else { radii[k - 1] };
    }
    let small = minima.iter().flatten().next().copied().unwrap_or(0.0);
    let report = CheckReport::new("moving_spheres", small, 0.0, small.min(0.0), SPHERE_TOL)
        .with("r_bar", num(r_bar))
        .with("grid_limited", r_bar.is_infinite())
        .with_f64("r_max", radii.last().copied().unwrap_or(0.0));
    (SphereScan { radii, minima, r_bar }, report)
}
