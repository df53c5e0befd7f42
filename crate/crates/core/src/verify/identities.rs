use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kelvin::kernel_k;
use super::CheckReport;
use crate::error::{range, Result};
use crate::geometry::{
    ball_to_half, conformal_factor, dist_sq, half_to_ball, kelvin_point, radius_sq, BallPoint, HalfSpacePoint,
    TraceMode, X1_LAST,
};

const GEOMETRY_TOL: f64 = 1e-12;

/// Uniform points of the ball `B(x¹, 1)` from a seeded stream.
pub fn random_ball_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let mut z: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            if z.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                z[dim - 1] += X1_LAST;
                break z;
            }
        })
        .collect()
}

/// Uniform points of the half ball `B⁺_r((ξ, 0))`.
pub fn random_half_ball_points(xi: &[f64], r: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = xi.len() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let mut z: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            z[dim - 1] = z[dim - 1].abs();
            let s: f64 = z.iter().map(|v| v * v).sum();
            if s < 1.0 && z[dim - 1] > 0.0 {
                for (k, c) in xi.iter().enumerate() {
                    z[k] = c + r * z[k];
                }
                z[dim - 1] *= r;
                break z;
            }
        })
        .collect()
}

fn worst<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

/// The conformal-map identities on random ball points:
/// distance scaling, height formula, `T∘T⁻¹`, Kelvin involution and the
/// image of the ball centre.
pub fn geometry_identities(dim: usize, count: usize, seed: u64) -> Result<Vec<CheckReport>> {
    if !(2..=3).contains(&dim) {
        return range(format!("geometry identities need dimension 2 or 3, got {dim}"));
    }
    let pts = random_ball_points(dim, count + 1, seed);
    let maps: Vec<(HalfSpacePoint, f64)> = pts
        .iter()
        .map(|z| Ok((ball_to_half(&BallPoint::new(z.clone()), TraceMode::Interior)?, conformal_factor(z))))
        .collect::<Result<_>>()?;

    let distance = worst((0..count).map(|i| {
        let (a, ja) = &maps[i];
        let (b, jb) = &maps[i + 1];
        let lhs = dist_sq(&a.coords(), &b.coords()).sqrt();
        let rhs = dist_sq(&pts[i], &pts[i + 1]).sqrt() * ja * jb;
        ((lhs - rhs) / rhs).abs()
    }));
    let height = worst((0..count).map(|i| {
        let (x, j) = &maps[i];
        let rhs = j * j * (1.0 - radius_sq(&pts[i])) / 2.0;
        ((x.t - rhs) / rhs).abs()
    }));
    let round_trip = worst(
        (0..count)
            .map(|i| {
                let back = half_to_ball(&maps[i].0, TraceMode::Interior)?;
                Ok(dist_sq(&back.zeta, &pts[i]).sqrt())
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let involution = worst(
        (0..count)
            .map(|i| {
                let x = &maps[i].0;
                let xi: Vec<f64> = (0..dim - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
                let r = rng.random_range(0.2..3.0);
                let twice = kelvin_point(&kelvin_point(x, &xi, r)?, &xi, r)?;
                Ok(dist_sq(&twice.coords(), &x.coords()).sqrt() / x.norm().max(1.0))
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let centre = ball_to_half(&BallPoint::center(dim), TraceMode::Interior)?;
    let centre_ok = centre.x.iter().all(|v| *v == 0.0) && centre.t == 2.0;

    Ok(vec![
        CheckReport::new("conformal_distance", distance, 0.0, distance, GEOMETRY_TOL).with("points", count),
        CheckReport::new("height_identity", height, 0.0, height, GEOMETRY_TOL).with("points", count),
        CheckReport::new("round_trip", round_trip, 0.0, round_trip, GEOMETRY_TOL).with("points", count),
        CheckReport::new("kelvin_involution", involution, 0.0, involution, GEOMETRY_TOL).with("points", count),
        CheckReport::new("centre_image", centre.t, 2.0, if centre_ok { 0.0 } else { 1.0 }, 0.0),
    ])
}

/// Smallest `K(ξ, r, Y, X)` over random pairs inside `B⁺_r(ξ)`.
pub fn kernel_positivity(xi: &[f64], r: f64, lambda: f64, count: usize, seed: u64) -> Result<CheckReport> {
    let xs = random_half_ball_points(xi, r, count, seed);
    let ys = random_half_ball_points(xi, r, count, seed.wrapping_add(1));
    let mut min_k = f64::INFINITY;
    for (x, y) in xs.iter().zip(&ys) {
        min_k = min_k.min(kernel_k(xi, r, y, x, lambda)?);
    }
    let residual = if min_k > 0.0 { 0.0 } else { min_k.min(-f64::MIN_POSITIVE) };
    Ok(CheckReport::new("kernel_positivity", min_k, 0.0, residual, 0.0).with("pairs", count))
}
