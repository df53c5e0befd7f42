mod common;

use proptest::prelude::*;

use rhls::functional::Field;
use rhls::solver::blowup_from_pair;
use rhls::verify::{
    boundary_profile_fit_free, boundary_profile_fit_with_exponent, check_reversed_hardy, check_reversed_holder,
    cutoff, geometry_identities, kernel_k, moving_sphere_scan, mu_one, pohozaev_ladder, profile_exponent,
    profile_value, random_ball_points, random_half_ball_points, smooth_step, trace_decay_exponent, trace_samples,
    CheckReport, HardyMode, HardyWeights, PohozaevOptions, ProfileParams, ProfileWhich,
};
use rhls::ExponentSet;

use common::{near_conformal, rule64, rule_small};

fn conformal() -> ExponentSet {
    ExponentSet::conformal(1, 1, -2.0, 0.2, 0.2).unwrap()
}

#[test]
fn check_report_conventions() {
    let c = CheckReport::new("x", 1.0, 1.0 + 1e-9, 1e-9, 1e-8);
    assert!(c.pass);
    let lo = CheckReport::at_least("y", 1.0, 2.0, 0.5);
    assert_eq!(lo.residual, -1.0);
    assert!(!lo.pass);
    assert_eq!(lo.meta_f64("gap"), Some(-1.0));
    let hi = CheckReport::at_least("z", 3.0, 2.0, 0.0);
    assert!(hi.pass && hi.residual == 0.0);
}

#[test]
fn identities_hold_in_both_dimensions() {
    for dim in [2, 3] {
        for c in geometry_identities(dim, 500, 11).unwrap() {
            assert!(c.pass, "{} in dim {dim}: {}", c.name, c.residual);
        }
    }
}

#[test]
fn random_points_are_seeded() {
    assert_eq!(random_ball_points(3, 10, 4), random_ball_points(3, 10, 4));
    assert_ne!(random_ball_points(3, 10, 4), random_ball_points(3, 10, 5));
    for p in random_half_ball_points(&[0.5], 2.0, 200, 1) {
        let d2 = (p[0] - 0.5).powi(2) + p[1] * p[1];
        assert!(p[1] > 0.0 && d2 < 4.0);
    }
}

#[test]
fn mu_one_vanishes_at_conformal() {
    assert!(mu_one(&conformal()).abs() < 1e-14);
}

#[test]
fn kernel_vanishes_on_the_sphere() {
    // X on ∂B_r(ξ) is fixed by the inversion
    let x = [0.3 + 0.8 * 0.6, 0.8 * 0.8];
    let k = kernel_k(&[0.3], 0.8, &[0.1, 0.2], &x, -2.0).unwrap();
    assert!(k.abs() < 1e-14);
}

#[test]
fn cutoff_shape() {
    assert_eq!(smooth_step(-0.5), 0.0);
    assert_eq!(smooth_step(1.5), 1.0);
    assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    for (rho, want) in [(0.05, 0.0), (0.3, 1.0), (4.0, 1.0), (25.0, 0.0)] {
        assert_eq!(cutoff(rho, 0.1, 10.0).0, want, "rho = {rho}");
    }
    // ρφ′ against a central difference
    let (rho, h) = (0.15, 1e-6);
    let fd = rho * (cutoff(rho + h, 0.1, 10.0).0 - cutoff(rho - h, 0.1, 10.0).0) / (2.0 * h);
    assert!((cutoff(rho, 0.1, 10.0).1 - fd).abs() < 1e-6);
}

#[test]
fn holder_equality_case() {
    let rule = rule_small();
    let p = 0.6;
    let f = Field::from_fn(rule, |z| 1.0 + z[0] * z[0]).unwrap();
    let h = f.powf(p - 1.0).scaled(2.5);
    let c = check_reversed_holder(&f, &h, p, rule).unwrap();
    assert!(c.pass);
    assert!(((c.lhs - c.rhs) / c.rhs).abs() < 1e-12);
    assert!(check_reversed_holder(&f, &h, 1.5, rule).is_err());
}

#[test]
fn hardy_zero_profile_and_degenerate_bump() {
    let set = conformal();
    for mode in [HardyMode::Inner, HardyMode::Outer] {
        let w = HardyWeights::for_band(&set, mode);
        assert!(check_reversed_hardy(|_| 0.0, &set, mode, &w).unwrap().pass);
        // the mass function vanishes at one end, so F^r diverges and the left side is 0
        let bump = check_reversed_hardy(|rho: f64| (-rho.ln().powi(2)).exp(), &set, mode, &w).unwrap();
        assert_eq!(bump.lhs, 0.0);
        assert!(!bump.pass);
    }
}

#[test]
fn synthetic_profile_recovery() {
    let truth = ProfileParams {
        c: 0.8,
        d: 1.9,
        xi0: vec![-1.2],
        exponent: 2.5,
    };
    let grid: Vec<Vec<f64>> = (0..=200).map(|k| vec![-10.0 + 0.1 * k as f64]).collect();
    let s: Vec<(Vec<f64>, f64)> = grid.iter().map(|x| (x.clone(), profile_value(&truth, x))).collect();
    let (got, rep) = boundary_profile_fit_with_exponent(&s, 2.5).unwrap();
    assert!(rep.pass && rep.residual < 1e-10);
    assert!((got.c - 0.8).abs() < 1e-8 && (got.d - 1.9).abs() < 1e-8 && (got.xi0[0] + 1.2).abs() < 1e-8);
    let (free, res) = boundary_profile_fit_free(&s, 2.0).unwrap();
    assert!(res < 1e-8 && (free.exponent - 2.5).abs() < 1e-6);
}

#[test]
fn profile_exponents() {
    let s = conformal();
    assert!((profile_exponent(&s, ProfileWhich::FProfile) - 3.2).abs() < 1e-14);
    assert!((trace_decay_exponent(&s, ProfileWhich::GProfile) - 8.0 / 3.0).abs() < 1e-14);
}

#[test]
fn solver_trace_decays_with_the_predicted_power() {
    let (_, pair) = near_conformal();
    let grid: Vec<Vec<f64>> = (0..=400).map(|k| vec![-20.0 + 0.1 * k as f64]).collect();
    let s = trace_samples(pair, ProfileWhich::FProfile, &grid);
    let (free, res) = boundary_profile_fit_free(&s, 3.0).unwrap();
    assert!(res < 1e-2);
    assert!((free.exponent - 8.0 / 3.0).abs() < 1e-2, "{}", free.exponent);
}

#[test]
fn balanced_pohozaev_on_small_orders() {
    let (_, pair) = near_conformal();
    let opts = PohozaevOptions {
        radial_order: 12,
        shell_panels: 3,
        angular_order: 32,
        cluster: 3.0,
    };
    let (rep, check) = pohozaev_ladder(
        |x: &[f64]| pair.u(x),
        |y: &[f64]| pair.v(y),
        &pair.set,
        rule64(),
        &[0.1, 0.05],
        &[5.0, 10.0],
        None,
        &opts,
    )
    .unwrap();
    assert_eq!(rep.rungs.len(), 4);
    assert!(check.pass, "{}", rep.extrapolated);
}

#[test]
fn sphere_scan_on_solution() {
    let (_, pair) = near_conformal();
    let radii: Vec<f64> = (1..=30).map(|k| 0.1 * k as f64).collect();
    let mut pts = Vec::new();
    for i in 0..30 {
        for j in 1..30 {
            pts.push(vec![-3.0 + 0.2 * i as f64, 0.1 * j as f64]);
        }
    }
    let s = pair.set.lambda - 2.0 * pair.set.alpha;
    let (scan, check) = moving_sphere_scan(|x: &[f64]| pair.u(x), s, &[0.0], &radii, &pts);
    assert!(check.pass);
    assert_eq!(scan.minima.len(), radii.len());
    assert!(scan.r_bar.is_finite() && (scan.r_bar - 2.0).abs() <= 0.1, "{}", scan.r_bar);
}

#[test]
fn blowup_of_solution() {
    let (rep, pair) = near_conformal();
    let b = blowup_from_pair(pair.clone(), rep.f.argmax(), rule64()).unwrap();
    assert!(b.rho > 0.0 && b.rho.is_finite());
    let x = b.normalization_point.coords();
    assert!((b.U(&x) - 1.0).abs() < 1e-10);
    assert!(b.bound_constant.is_finite() && b.bound_constant >= 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `K > 0` for `X, Y` inside the half ball.
    #[test]
    fn kernel_positive(xi in -1.0f64..1.0, r in 0.2f64..2.0, a in 0.01f64..3.13, b in 0.01f64..3.13,
                       s in 0.05f64..0.95, u in 0.05f64..0.95, lf in 0.05f64..1.0) {
        let x = [xi + r * s * a.cos(), r * s * a.sin()];
        let y = [xi + r * u * b.cos(), r * u * b.sin()];
        prop_assert!(kernel_k(&[xi], r, &y, &x, -2.0 * lf).unwrap() > 0.0);
    }
}
