//! Half-space and ball points, the conformal map between them, and sphere
//! inversions about boundary points.
//!
//! The ball is `B = B(x¹, 1)` with `x¹ = (0,…,0,−1)`, and the map is the
//! inversion `T(ζ) = 4(ζ−x⁰)/|ζ−x⁰|² + x⁰` about `x⁰ = (0,…,0,−2)`. `T` is an
//! involution of `R^{n+1} \ {x⁰}` that exchanges `B` and the upper half space.
//! The ball centre goes to `(0,…,0,2)`, the top point `(0,…,0,0)` is fixed and
//! `x⁰` corresponds to infinity.
//!
//! Conformal factor `J(ζ) = 2/|ζ−x⁰|`:
//! * `|Tζ−Tη| = |ζ−η| J(ζ) J(η)`
//! * `dX = J^{2(n+1)} dζ`
//! * `t(Tζ) = J(ζ)² (1−|ζ−x¹|²)/2`

use serde::{Deserialize, Serialize};

use crate::error::{range, Error, Result};

/// Last coordinate of `x⁰`.
pub const X0_LAST: f64 = -2.0;
/// Last coordinate of `x¹`, the ball centre.
pub const X1_LAST: f64 = -1.0;

/// Whether boundary points (`t = 0`, `|ζ−x¹| = 1`) are admissible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceMode {
    Interior,
    Trace,
}

/// Point `(x, t)` of the closed upper half space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl HalfSpacePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Self { x, t }
    }

    /// From full coordinates `(x_1, …, x_n, t)`.
    pub fn from_coords(c: &[f64]) -> Self {
        let (t, x) = c.split_last().expect("nonempty coordinates");
        Self { x: x.to_vec(), t: *t }
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.x.clone();
        c.push(self.t);
        c
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.x.len() + 1
    }

    pub fn norm(&self) -> f64 {
        (self.x.iter().map(|v| v * v).sum::<f64>() + self.t * self.t).sqrt()
    }

    /// Boundary point `(ξ, 0)`.
    pub fn boundary(xi: &[f64]) -> Self {
        Self { x: xi.to_vec(), t: 0.0 }
    }
}

/// Point of `R^{n+1}` in the ball picture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    pub zeta: Vec<f64>,
}

impl BallPoint {
    pub fn new(zeta: Vec<f64>) -> Self {
        Self { zeta }
    }

    /// The centre `x¹`.
    pub fn center(dim: usize) -> Self {
        let mut zeta = vec![0.0; dim];
        zeta[dim - 1] = X1_LAST;
        Self { zeta }
    }

    /// `|ζ − x¹|²`.
    pub fn radius_sq(&self) -> f64 {
        radius_sq(&self.zeta)
    }
}

/// `|ζ − x¹|²` for raw coordinates.
#[inline]
pub fn radius_sq(zeta: &[f64]) -> f64 {
    let (last, head) = zeta.split_last().expect("nonempty coordinates");
    head.iter().map(|v| v * v).sum::<f64>() + (last - X1_LAST) * (last - X1_LAST)
}

/// `|ζ − x⁰|²` for raw coordinates.
#[inline]
pub fn pole_dist_sq(zeta: &[f64]) -> f64 {
    let (last, head) = zeta.split_last().expect("nonempty coordinates");
    head.iter().map(|v| v * v).sum::<f64>() + (last - X0_LAST) * (last - X0_LAST)
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `J(ζ) = 2/|ζ − x⁰|`.
#[inline]
pub fn conformal_factor(zeta: &[f64]) -> f64 {
    2.0 / pole_dist_sq(zeta).sqrt()
}

/// `T` on raw coordinates without domain checks. Writes `T(ζ)` into `out`
/// and returns `J(ζ)`. The last coordinate uses `2(1−|ζ−x¹|²)/|ζ−x⁰|²`,
/// which keeps full relative accuracy near the boundary sphere.
#[inline]
pub fn map_coords(zeta: &[f64], out: &mut [f64]) -> f64 {
    let d2 = pole_dist_sq(zeta);
    let k = zeta.len() - 1;
    for i in 0..k {
        out[i] = 4.0 * zeta[i] / d2;
    }
    out[k] = 2.0 * (1.0 - radius_sq(zeta)) / d2;
    2.0 / d2.sqrt()
}

/// `T⁻¹ = T` applied to half-space coordinates. Writes `ζ` into `out` and
/// returns `J(ζ) = |X − x⁰|/2`.
#[inline]
pub fn unmap_coords(x: &[f64], out: &mut [f64]) -> f64 {
    let k = x.len() - 1;
    let d2 = pole_dist_sq(x);
    for i in 0..k {
        out[i] = 4.0 * x[i] / d2;
    }
    out[k] = 4.0 * (x[k] - X0_LAST) / d2 + X0_LAST;
    0.5 * d2.sqrt()
}

/// `T(ζ) = 4(ζ−x⁰)/|ζ−x⁰|² + x⁰`.
pub fn ball_to_half(zeta: &BallPoint, mode: TraceMode) -> Result<HalfSpacePoint> {
    let z = &zeta.zeta;
    if z.len() < 2 {
        return range("ball points need dimension >= 2");
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ball point coordinate".into()));
    }
    let r2 = radius_sq(z);
    match mode {
        TraceMode::Interior if r2 >= 1.0 => {
            return Err(Error::Domain(format!(
                "|zeta - x1|^2 = {r2} is not inside the unit ball"
            )))
        }
        TraceMode::Trace if r2 > 1.0 + 1e-12 => {
            return Err(Error::Domain(format!("|zeta - x1|^2 = {r2} is outside the closed ball")))
        }
        _ => {}
    }
    if pole_dist_sq(z) == 0.0 {
        return Err(Error::Domain("x0 maps to infinity".into()));
    }
    let mut out = vec![0.0; z.len()];
    map_coords(z, &mut out);
    let last = out.len() - 1;
    if out[last] < 0.0 {
        out[last] = 0.0;
    }
    Ok(HalfSpacePoint::from_coords(&out))
}

/// `T⁻¹(X)`; `T` is its own inverse.
pub fn half_to_ball(point: &HalfSpacePoint, mode: TraceMode) -> Result<BallPoint> {
    if point.x.iter().any(|v| !v.is_finite()) || !point.t.is_finite() {
        return Err(Error::NonFinite("half-space point coordinate".into()));
    }
    match mode {
        TraceMode::Interior if point.t <= 0.0 => {
            return Err(Error::Domain(format!("t = {} must be positive", point.t)))
        }
        TraceMode::Trace if point.t < 0.0 => {
            return Err(Error::Domain(format!("t = {} must be nonnegative", point.t)))
        }
        _ => {}
    }
    let c = point.coords();
    let mut out = vec![0.0; c.len()];
    unmap_coords(&c, &mut out);
    Ok(BallPoint::new(out))
}

/// `((1 − |ζ−x¹|²)/2)^s`.
pub fn ball_weight(zeta: &BallPoint, s: f64) -> Result<f64> {
    let w = 0.5 * (1.0 - zeta.radius_sq());
    if w < 0.0 {
        return Err(Error::Domain(format!("point outside the ball (weight base {w})")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    if w == 0.0 && s < 0.0 {
        return Err(Error::Overflow(format!("weight exponent {s} on the boundary sphere")));
    }
    Ok(w.powf(s))
}

/// `X^{ξ,r} = r²(X−ξ)/|X−ξ|² + ξ` for a boundary point `ξ`.
pub fn kelvin_point(point: &HalfSpacePoint, xi: &[f64], r: f64) -> Result<HalfSpacePoint> {
    if !(r > 0.0) {
        return range(format!("inversion radius r = {r} must be positive"));
    }
    if xi.len() != point.x.len() {
        return range("boundary point dimension mismatch");
    }
    let d2 = dist_sq(&point.x, xi) + point.t * point.t;
    if d2 == 0.0 {
        return Err(Error::Singularity("X coincides with the inversion centre".into()));
    }
    let k = r * r / d2;
    let x = point.x.iter().zip(xi).map(|(a, b)| k * (a - b) + b).collect();
    Ok(HalfSpacePoint::new(x, k * point.t))
}

/// Centre, radius and homogeneity of a Kelvin transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KelvinParams {
    pub xi: Vec<f64>,
    pub r: f64,
    pub s: f64,
}

impl KelvinParams {
    pub fn new(xi: Vec<f64>, r: f64, s: f64) -> Result<Self> {
        if !(r > 0.0) {
            return range(format!("inversion radius r = {r} must be positive"));
        }
        Ok(Self { xi, r, s })
    }

    /// `(r/|X−ξ|)^s u(X^{ξ,r})` for a single evaluation.
    pub fn apply<F>(&self, u: &F, point: &HalfSpacePoint) -> Result<f64>
    where
        F: Fn(&HalfSpacePoint) -> Result<f64> + ?Sized,
    {
        let image = kelvin_point(point, &self.xi, self.r)?;
        let d = (dist_sq(&point.x, &self.xi) + point.t * point.t).sqrt();
        Ok((self.r / d).powf(self.s) * u(&image)?)
    }
}

/// `X ↦ (r/|X−ξ|)^s u(X^{ξ,r})`.
pub fn kelvin_function<F>(u: F, params: KelvinParams) -> impl Fn(&HalfSpacePoint) -> Result<f64>
where
    F: Fn(&HalfSpacePoint) -> Result<f64>,
{
    move |point| params.apply(&u, point)
}
