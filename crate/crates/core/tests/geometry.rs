use proptest::prelude::*;

use rhls::geometry::{
    ball_to_half, ball_weight, conformal_factor, dist_sq, half_to_ball, kelvin_function, kelvin_point, BallPoint,
    HalfSpacePoint, KelvinParams, TraceMode,
};
use rhls::Error;

/// A point of `B(x¹, 1)` from direction angles and a radius fraction.
fn ball_point(dim: usize, a: f64, b: f64, rho: f64) -> BallPoint {
    let dir = if dim == 2 {
        vec![a.cos(), a.sin()]
    } else {
        vec![b.sin() * a.cos(), b.sin() * a.sin(), b.cos()]
    };
    let mut z: Vec<f64> = dir.iter().map(|d| rho * d).collect();
    z[dim - 1] -= 1.0;
    BallPoint::new(z)
}

fn pole_dist(z: &[f64]) -> f64 {
    let mut w = z.to_vec();
    *w.last_mut().unwrap() += 2.0;
    w.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn centre_and_pole() {
    let c = ball_to_half(&BallPoint::center(2), TraceMode::Interior).unwrap();
    assert_eq!(c.x, vec![0.0]);
    assert!((c.t - 2.0).abs() < 1e-15);
    let c3 = ball_to_half(&BallPoint::center(3), TraceMode::Interior).unwrap();
    assert!((c3.t - 2.0).abs() < 1e-15);
    assert!(matches!(
        ball_to_half(&BallPoint::new(vec![0.0, -2.0]), TraceMode::Trace),
        Err(Error::Domain(_))
    ));
}

#[test]
fn domain_checks() {
    assert!(ball_to_half(&BallPoint::new(vec![0.0, 0.0]), TraceMode::Interior).is_err());
    assert!(ball_to_half(&BallPoint::new(vec![0.0, 0.0]), TraceMode::Trace).is_ok());
    assert!(half_to_ball(&HalfSpacePoint::new(vec![1.0], 0.0), TraceMode::Interior).is_err());
    assert!(half_to_ball(&HalfSpacePoint::new(vec![1.0], -0.1), TraceMode::Trace).is_err());
    assert!(matches!(
        ball_to_half(&BallPoint::new(vec![f64::NAN, -1.0]), TraceMode::Interior),
        Err(Error::NonFinite(_))
    ));
    assert!(matches!(
        ball_weight(&BallPoint::new(vec![0.0, 0.0]), -0.5),
        Err(Error::Overflow(_))
    ));
    assert!(kelvin_point(&HalfSpacePoint::new(vec![0.0], 1.0), &[0.0], 0.0).is_err());
    assert!(matches!(
        kelvin_point(&HalfSpacePoint::new(vec![0.5], 0.0), &[0.5], 1.0),
        Err(Error::Singularity(_))
    ));
}

#[test]
fn kelvin_fixes_the_sphere() {
    let p = HalfSpacePoint::new(vec![0.3 + 0.6], 0.8);
    let q = kelvin_point(&p, &[0.3], 1.0).unwrap();
    assert!((q.x[0] - p.x[0]).abs() < 1e-15 && (q.t - p.t).abs() < 1e-15);
}

#[test]
fn kelvin_function_homogeneity() {
    let u = |p: &HalfSpacePoint| -> rhls::Result<f64> { Ok(1.0 + p.t) };
    let k = kelvin_function(u, KelvinParams::new(vec![0.0], 2.0, 1.5).unwrap());
    let p = HalfSpacePoint::new(vec![0.0], 1.0);
    // image (0, 4), factor 2^{1.5}
    assert!((k(&p).unwrap() - 2f64.powf(1.5) * 5.0).abs() < 1e-13);
}

proptest! {
    #[test]
    fn round_trip(dim in 2usize..=3, a in 0.0f64..6.28, b in 0.01f64..3.13, rho in 0.0f64..0.999) {
        let z = ball_point(dim, a, b, rho);
        let h = ball_to_half(&z, TraceMode::Interior).unwrap();
        prop_assert!(h.t > 0.0);
        let back = half_to_ball(&h, TraceMode::Interior).unwrap();
        prop_assert!(dist_sq(&back.zeta, &z.zeta).sqrt() <= 1e-12 * (1.0 + h.norm()));
    }

    #[test]
    fn height_identity(dim in 2usize..=3, a in 0.0f64..6.28, b in 0.01f64..3.13, rho in 0.0f64..0.999) {
        let z = ball_point(dim, a, b, rho);
        let h = ball_to_half(&z, TraceMode::Interior).unwrap();
        let d = pole_dist(&z.zeta);
        let want = 2.0 * (1.0 - rho * rho) / (d * d);
        prop_assert!((h.t - want).abs() <= 1e-12 * want.max(1e-300) + 1e-300);
        prop_assert!((conformal_factor(&z.zeta) - 2.0 / d).abs() <= 1e-14 * (2.0 / d));
    }

    #[test]
    fn distance_identity(
        dim in 2usize..=3,
        a1 in 0.0f64..6.28, b1 in 0.01f64..3.13, r1 in 0.0f64..0.99,
        a2 in 0.0f64..6.28, b2 in 0.01f64..3.13, r2 in 0.0f64..0.99,
    ) {
        let (z1, z2) = (ball_point(dim, a1, b1, r1), ball_point(dim, a2, b2, r2));
        let (h1, h2) = (ball_to_half(&z1, TraceMode::Interior).unwrap(), ball_to_half(&z2, TraceMode::Interior).unwrap());
        let lhs = dist_sq(&h1.coords(), &h2.coords()).sqrt();
        let rhs = 4.0 * dist_sq(&z1.zeta, &z2.zeta).sqrt() / (pole_dist(&z1.zeta) * pole_dist(&z2.zeta));
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + rhs));
    }

    #[test]
    fn kelvin_is_an_involution(xi in -2.0f64..2.0, r in 0.1f64..3.0, x in -5.0f64..5.0, t in 0.01f64..5.0) {
        let p = HalfSpacePoint::new(vec![x], t);
        let q = kelvin_point(&p, &[xi], r).unwrap();
        let back = kelvin_point(&q, &[xi], r).unwrap();
        let scale = 1.0 + p.norm();
        prop_assert!((back.x[0] - x).abs() <= 1e-12 * scale && (back.t - t).abs() <= 1e-12 * scale);
        // |X−ξ| |X*−ξ| = r²
        let d = ((x - xi).powi(2) + t * t).sqrt();
        let dq = ((q.x[0] - xi).powi(2) + q.t * q.t).sqrt();
        prop_assert!((d * dq - r * r).abs() <= 1e-12 * r * r);
    }

    #[test]
    fn weight_matches_height(a in 0.0f64..6.28, rho in 0.0f64..0.999, s in -0.9f64..2.0) {
        let z = ball_point(2, a, 0.0, rho);
        let w = ball_weight(&z, s).unwrap();
        let want = (0.5 * (1.0 - rho * rho)).powf(s);
        prop_assert!((w - want).abs() <= 1e-12 * want);
    }
}
