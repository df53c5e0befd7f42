use rayon::prelude::*;

use super::{half_sphere_directions, CheckReport};
use crate::error::{range, Error, Result};
use crate::geometry::{dist_sq, kelvin_point, HalfSpacePoint, X0_LAST};
use crate::pair::NystromPotential;
use crate::params::ExponentSet;
use crate::quad::{gauss_legendre_interval, QuadratureRule};
use crate::sum::Neumaier;

const KELVIN_TOL: f64 = 1e-5;

fn boundary_coords(xi: &[f64]) -> Vec<f64> {
    let mut c = xi.to_vec();
    c.push(0.0);
    c
}

/// `K(ξ, r, Y, X) = (r/|X−ξ|)^λ |X^{ξ,r} − Y|^{−λ} − |X − Y|^{−λ}`.
pub fn kernel_k(xi: &[f64], r: f64, y: &[f64], x: &[f64], lambda: f64) -> Result<f64> {
    let px = HalfSpacePoint::from_coords(x);
    let xs = kelvin_point(&px, xi, r)?.coords();
    let dx2 = dist_sq(x, &boundary_coords(xi));
    let a = (r * r / dx2).powf(lambda / 2.0) * dist_sq(&xs, y).powf(-lambda / 2.0);
    let b = dist_sq(x, y).powf(-lambda / 2.0);
    Ok(a - b)
}

/// `μ₁ = 2(n+1) + 2β − λ + (λ − 2β) κ`.
pub fn mu_one(set: &ExponentSet) -> f64 {
    let d = set.space_dim() as f64;
    2.0 * d + 2.0 * set.beta - set.lambda + (set.lambda - 2.0 * set.beta) * set.kappa
}

/// The conformal extremal `v(Y) = z^{β/κ} (|Y − x⁰|/2)^{(2(n+1)−λ)/κ}`,
/// for which `z^β v^{−κ}` is the pushforward of the ball's flat weight.
pub fn conformal_profile_v(set: &ExponentSet) -> impl Fn(&[f64]) -> f64 + Send + Sync + Clone {
    let d = set.space_dim() as f64;
    let (beta, kappa, lambda) = (set.beta, set.kappa, set.lambda);
    move |y: &[f64]| {
        let k = y.len() - 1;
        let mut s = 0.0;
        for (i, c) in y.iter().enumerate() {
            let shifted = if i == k { c - X0_LAST } else { *c };
            s += shifted * shifted;
        }
        y[k].powf(beta / kappa) * (s.sqrt() / 2.0).powf((2.0 * d - lambda) / kappa)
    }
}

/// Residual of the Kelvin integral identity
///
/// ```text
/// u(X) − u_{ξ,r}(X) = ∫_{B⁺_r(ξ)} t^α z^β K(ξ,r,Y,X) ((r/|Y−ξ|)^{μ₁} v_{ξ,r}(Y)^{−κ} − v(Y)^{−κ}) dY
/// ```
///
/// where `u` is the potential of `v^{−κ}` on the rule's mapped nodes. The
/// half-ball integral uses its own polar Gauss–Legendre rule of the given
/// order. Returns the largest absolute difference over `test_points`.
pub fn kelvin_identity_residual<V>(
    v: V,
    xi: &[f64],
    r: f64,
    test_points: &[Vec<f64>],
    set: &ExponentSet,
    rule: &QuadratureRule,
    half_ball_order: usize,
) -> Result<CheckReport>
where
    V: Fn(&[f64]) -> f64 + Sync,
{
    let dim = set.space_dim();
    if rule.dim != dim || xi.len() + 1 != dim {
        return range("dimension mismatch between rule, exponents and centre");
    }
    if !(r > 0.0) {
        return range(format!("radius r = {r} must be positive"));
    }
    let (alpha, beta, lambda, kappa) = (set.alpha, set.beta, set.lambda, set.kappa);
    let u = NystromPotential::from_density(|y| v(y).powf(-kappa), beta, alpha, lambda, rule)?;
    let centre = boundary_coords(xi);
    let mu1 = mu_one(set);
    let s_v = lambda - 2.0 * beta;
    let s_u = lambda - 2.0 * alpha;

    // half-ball nodes and the bracket (r/ρ)^{μ₁} v_{ξ,r}^{−κ} − v^{−κ}, times z^β
    let dirs = half_sphere_directions(dim, half_ball_order, 1.0)?;
    let (rad, rad_w) = gauss_legendre_interval(half_ball_order, 0.0, r);
    let mut nodes: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dirs.len() * rad.len());
    for (rho, wr) in rad.iter().zip(&rad_w) {
        for (dir, wd) in &dirs {
            let y: Vec<f64> = centre.iter().zip(dir).map(|(c, d)| c + rho * d).collect();
            let z = y[dim - 1];
            if !(z > 0.0) {
                continue;
            }
            let ys = kelvin_point(&HalfSpacePoint::from_coords(&y), xi, r)?.coords();
            let ratio = r / rho;
            let v_kt = ratio.powf(s_v) * v(&ys);
            let bracket = ratio.powf(mu1) * v_kt.powf(-kappa) - v(&y).powf(-kappa);
            let w = wr * rho.powi(dim as i32 - 1) * wd * z.powf(beta) * bracket;
            if !w.is_finite() {
                return Err(Error::NonFinite(format!("half-ball integrand at ρ = {rho}")));
            }
            nodes.push((y, w));
        }
    }

    let rows: Vec<Result<(f64, f64)>> = test_points
        .par_iter()
        .map(|x| {
            let px = HalfSpacePoint::from_coords(x);
            if !(px.t > 0.0) {
                return Err(Error::Domain("test points need t > 0".into()));
            }
            let xs = kelvin_point(&px, xi, r)?.coords();
            let dx = dist_sq(x, &centre).sqrt();
            let lhs = u.eval(x) - (r / dx).powf(s_u) * u.eval(&xs);
            let mut acc = Neumaier::new();
            for (y, w) in &nodes {
                acc.add(w * kernel_k(xi, r, y, x, lambda)?);
            }
            Ok((lhs, px.t.powf(alpha) * acc.value()))
        })
        .collect();
    let mut worst = (0.0_f64, 0.0, 0.0);
    let mut scale = 0.0_f64;
    for row in rows {
        let (l, rh) = row?;
        scale = scale.max(l.abs());
        if (l - rh).abs() >= worst.0 {
            worst = ((l - rh).abs(), l, rh);
        }
    }
    Ok(CheckReport::new("kelvin_identity", worst.1, worst.2, worst.0, KELVIN_TOL)
        .with_f64("xi_radius", r)
        .with_f64("mu_one", mu1)
        .with_f64("lhs_scale", scale)
        .with("test_points", test_points.len())
        .with("half_ball_order", half_ball_order))
}
