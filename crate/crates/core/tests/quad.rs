use proptest::prelude::*;

use rhls::quad::{
    ball_volume, build_ball_rule, double_integral, gauss_legendre, gauss_legendre_interval, integrate,
    integrate_values, mc_integrate,
};
use rhls::Error;

#[test]
fn gauss_legendre_exactness() {
    for n in [1usize, 2, 5, 16, 64] {
        let (x, w) = gauss_legendre(n);
        for k in 0..2 * n {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((got - want).abs() < 1e-13, "n={n} k={k}: {got} vs {want}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }
    let (x, w) = gauss_legendre_interval(8, 1.0, 3.0);
    let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
    assert!((got - 20.0).abs() < 1e-12);
}

#[test]
fn rule_volume_and_moments() {
    let pi = std::f64::consts::PI;
    let r2 = build_ball_rule(2, 16, 16).unwrap();
    assert!((r2.weights.iter().sum::<f64>() - pi).abs() < 1e-13);
    // ∫ ζ₁² over the unit disc = π/4, ∫ (ζ₂+1)⁴ = π/8
    assert!((integrate(|z| z[0] * z[0], &r2).unwrap() - pi / 4.0).abs() < 1e-13);
    assert!((integrate(|z| (z[1] + 1.0).powi(4), &r2).unwrap() - pi / 8.0).abs() < 1e-13);
    let r3 = build_ball_rule(3, 12, 12).unwrap();
    assert!((r3.weights.iter().sum::<f64>() - 4.0 * pi / 3.0).abs() < 1e-13);
    assert!((integrate(|z| z[0] * z[0], &r3).unwrap() - 4.0 * pi / 15.0).abs() < 1e-13);
    assert!(r2.weights.iter().all(|w| *w > 0.0));
    assert!((ball_volume(2) - pi).abs() < 1e-15);
}

#[test]
fn rule_degree_bound() {
    let pi = std::f64::consts::PI;
    let r = build_ball_rule(2, 8, 8).unwrap();
    let d = r.exact_degree();
    // ∫ x^k over the unit disc in polar form
    let moment = |k: i32| -> f64 {
        let ang = (0..2000).map(|j| ((j as f64 + 0.5) * 2.0 * pi / 2000.0).cos().powi(k)).sum::<f64>() * 2.0 * pi / 2000.0;
        ang / (k as f64 + 2.0)
    };
    for k in (0..=d as i32).step_by(2) {
        let got = integrate(|z| z[0].powi(k), &r).unwrap();
        assert!((got - moment(k)).abs() < 1e-12, "degree {k}");
    }
}

#[test]
fn rule_is_deterministic_and_serializes() {
    let a = build_ball_rule(2, 10, 12).unwrap();
    let b = build_ball_rule(2, 10, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.id, build_ball_rule(2, 10, 14).unwrap().id);
    let csv = String::from_utf8(a.to_csv().unwrap()).unwrap();
    assert!(csv.starts_with("index,zeta_1,zeta_2,weight\n"));
    assert_eq!(csv.lines().count(), a.len() + 1);
}

#[test]
fn rule_errors() {
    assert!(matches!(build_ball_rule(4, 8, 8), Err(Error::Range(_))));
    assert!(matches!(build_ball_rule(2, 1, 8), Err(Error::Range(_))));
    let r = build_ball_rule(2, 4, 4).unwrap();
    assert!(integrate_values(&[1.0], &r).is_err());
    assert!(matches!(integrate(|_| f64::NAN, &r), Err(Error::NonFinite(_))));
    assert!(mc_integrate(|_| 1.0, 1, 10, 0).is_err());
}

#[test]
fn double_integral_factorizes() {
    let r = build_ball_rule(2, 12, 12).unwrap();
    let single = integrate(|z| 1.0 + z[0] * z[0], &r).unwrap();
    let both = double_integral(|a, b| (1.0 + a[0] * a[0]) * (1.0 + b[0] * b[0]), &r).unwrap();
    assert!((both - single * single).abs() < 1e-12 * both);
}

#[test]
fn monte_carlo_is_reproducible() {
    let f = |z: &[f64]| z[0] * z[0] + (z[1] + 1.0).abs();
    let a = mc_integrate(f, 2, 50_000, 9).unwrap();
    let b = mc_integrate(f, 2, 50_000, 9).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    assert_eq!(pool.install(|| mc_integrate(f, 2, 50_000, 9).unwrap()), a);
    assert_ne!(mc_integrate(f, 2, 50_000, 10).unwrap().value, a.value);
    // π/4 + 4/3
    let want = std::f64::consts::PI / 4.0 + 4.0 / 3.0;
    assert!((a.value - want).abs() < 5.0 * a.stderr);
}

proptest! {
    #[test]
    fn polynomials_integrate_exactly(c in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let r = build_ball_rule(2, 12, 16).unwrap();
        // quadratic in both coordinates, oracle from moments of the unit disc
        let f = |z: &[f64]| {
            let (x, y) = (z[0], z[1] + 1.0);
            c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
        };
        let pi = std::f64::consts::PI;
        let want = c[0] * pi + (c[3] + c[5]) * pi / 4.0;
        prop_assert!((integrate(f, &r).unwrap() - want).abs() <= 1e-12);
    }
}
