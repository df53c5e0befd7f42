//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criterion 6 is a known failure: the extrapolated critical constant is
//! stable but sits below the lower end of the explicit band. The run checks
//! that it fails in exactly that way and treats any other failure as fatal.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rhls::functional::{BallOperator, Field};
use rhls::params::{pohozaev_defect, validate_exponents, ExponentSet, RawExponents};
use rhls::quad::mc_integrate;
use rhls::solver::{critical_sweep, solve_subcritical, SolveOptions};
use rhls::special::{angular_constant, constant_band, gamma, lower_factor};
use rhls::verify::{
    asymptotic_constants, boundary_profile_fit, boundary_profile_fit_with_exponent, conformal_profile_v, fubini_check,
    geometry_identities, kelvin_identity_residual, kernel_positivity, pohozaev_ladders, profile_value,
    random_half_ball_points, trace_samples, PohozaevOptions, ProfileParams, ProfileWhich,
};

use common::{near_conformal, rule64, rule_small, subcritical_set, subcritical_solution, tanh_sinh};

struct Outcome {
    pass: bool,
    detail: String,
    /// For known failures: the failure matches its documented signature.
    expected_failure: bool,
}

fn ok(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        detail,
        expected_failure: false,
    }
}

fn balanced(n: usize, lambda: f64, alpha: f64, beta: f64, p: f64) -> rhls::Result<ExponentSet> {
    validate_exponents(&RawExponents {
        n,
        m: 1,
        lambda,
        alpha,
        beta,
        p: Some(p),
        q: None,
    })
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [1usize, 2] {
        let sphere = if n == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
        for s in [0.0, 0.3, 0.9] {
            let oracle = sphere
                * tanh_sinh(
                    |phi: f64| phi.sin().powf(s) * phi.cos().powi(n as i32 - 1),
                    0.0,
                    std::f64::consts::FRAC_PI_2,
                );
            let v = angular_constant(n, s).unwrap();
            worst = worst.max((v - oracle).abs());
        }
    }
    let sp = std::f64::consts::PI.sqrt();
    let g = [
        (gamma(0.5).unwrap(), sp),
        (gamma(1.0).unwrap(), 1.0),
        (gamma(2.5).unwrap(), 0.75 * sp),
    ];
    let gworst = g.iter().map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
    ok(
        worst <= 1e-10 && gworst <= 1e-13,
        format!("angular constants max error {worst:.2e}, Gamma spot values max relative error {gworst:.2e}"),
    )
}

/// `J(n, s) (∫ radial)` with both factors by independent quadrature.
fn oracle_c(n: usize, s: f64, e: f64) -> f64 {
    let sphere = if n == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
    let ang = sphere
        * tanh_sinh(
            |phi: f64| phi.sin().powf(s) * phi.cos().powi(n as i32 - 1),
            0.0,
            std::f64::consts::FRAC_PI_2,
        );
    // e > 0: ∫₀¹ ρ^{e−1}; e < 0: ∫₁^∞ ρ^{e−1} = ∫₀¹ w^{−e−1}
    let rad = if e > 0.0 {
        tanh_sinh(|r: f64| r.powf(e - 1.0), 0.0, 1.0)
    } else {
        tanh_sinh(|w: f64| w.powf(-e - 1.0), 0.0, 1.0)
    };
    ang * rad
}

fn criterion_2() -> Outcome {
    let set = balanced(1, -2.0, 0.0, 0.0, 2.0 / 3.0).unwrap();
    let band = constant_band(&set).unwrap();
    let nf = set.n as f64 + 1.0;
    let (pc, r) = (set.p_conj, set.q_conj);
    let c3 = oracle_c(1, set.beta * r, nf + (set.beta - set.lambda) * r);
    let c4 = oracle_c(1, set.alpha * pc, nf + set.alpha * pc);
    let c5 = oracle_c(1, set.alpha * pc, nf + (set.alpha - set.lambda) * pc);
    let c6 = oracle_c(1, set.beta * r, nf + set.beta * r);
    let d1 = c3.powf(1.0 / r) * c4.powf(1.0 / pc);
    let d2 = c5.powf(1.0 / pc) * c6.powf(1.0 / r);
    let err = (band.d1 - d1).abs().max((band.d2 - d2).abs());
    let sym = (band.d1 - band.d2).abs();
    let lf = lower_factor(&set);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut valid, mut positive, mut tries) = (0, 0, 0);
    while valid < 100 && tries < 100_000 {
        tries += 1;
        let n = rng.random_range(1..=2usize);
        let lambda = -rng.random_range(0.05..(n as f64 + 1.0));
        let alpha = rng.random_range(0.0..0.6);
        let beta = rng.random_range(0.0..0.6);
        let p = rng.random_range(0.05..0.95);
        let Ok(s) = balanced(n, lambda, alpha, beta, p) else { continue };
        let Ok(b) = constant_band(&s) else { continue };
        valid += 1;
        if b.n_lower > 0.0 && b.n_upper >= b.n_lower && b.n_lower.is_finite() {
            positive += 1;
        }
    }
    ok(
        err <= 1e-10 && sym <= 1e-10 && lf == 0.5 && valid == 100 && positive == 100,
        format!(
            "D1 = {:.15}, |D1-D2| = {sym:.1e}, oracle error {err:.1e}, lower factor {lf}, positive bands {positive}/{valid}",
            band.d1
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut failed = Vec::new();
    let mut worst: f64 = 0.0;
    for dim in [2usize, 3] {
        for c in geometry_identities(dim, 1000, 3).unwrap() {
            worst = worst.max(c.residual.abs());
            if !c.pass {
                failed.push(format!("{}(dim {dim})", c.name));
            }
        }
    }
    ok(
        failed.is_empty(),
        format!("1000 points in dims 2 and 3, worst residual {worst:.2e}; failing: {failed:?}"),
    )
}

/// Standard normal by Box–Muller.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn criterion_4() -> Outcome {
    let (pa, _) = common::base_exponents();
    let set = balanced(1, -2.0, 0.2, 0.2, pa).unwrap();
    let rule = rule64();
    let op = BallOperator::new(&set, rule).unwrap();
    let band = constant_band(&set).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut min_q = f64::INFINITY;
    for _ in 0..100 {
        let f = Field::new((0..rule.len()).map(|_| normal(&mut rng).exp()).collect(), rule).unwrap();
        let g = Field::new((0..rule.len()).map(|_| normal(&mut rng).exp()).collect(), rule).unwrap();
        min_q = min_q.min(op.quotient(&f, &g, &set).unwrap());
    }
    ok(
        min_q >= band.n_lower - 1e-6,
        format!("smallest quotient over 100 log-normal pairs {min_q:.6} vs lower bound {:.6}", band.n_lower),
    )
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let rep = subcritical_solution();
    let secs = t0.elapsed().as_secs_f64();
    let inc = rep.max_increase();
    let sym = rep.f.rel_sup_diff(&rep.g);
    ok(
        rep.converged && rep.iterations <= 500 && inc <= 1e-12 && rep.el_residual < 1e-8 && sym <= 1e-8 && secs < 60.0,
        format!(
            "{} iterations in {secs:.1} s, max quotient increase {inc:.1e}, EL residual {:.1e}, |f-g| {sym:.1e}",
            rep.iterations, rep.el_residual
        ),
    )
}

fn criterion_6() -> Outcome {
    let (pa, qb) = common::base_exponents();
    let base = ExponentSet::unbalanced(1, 1, -2.0, 0.2, 0.2, pa, qb).unwrap();
    let op = BallOperator::new(&base, rule64()).unwrap();
    let sweep = critical_sweep(&base, &[0.08, 0.04, 0.02, 0.01], &op, &SolveOptions::default(), false).unwrap();
    let band = sweep.band.clone().unwrap();
    let stable = sweep.stability <= 1e-3;
    let inside = band.contains(sweep.n_est);
    Outcome {
        pass: stable && inside,
        detail: format!(
            "N_est {:.6}, stability {:.1e}, band [{:.6}, {:.6}]",
            sweep.n_est, sweep.stability, band.n_lower, band.n_upper
        ),
        expected_failure: stable && sweep.n_est < band.n_lower,
    }
}

fn criterion_7() -> Outcome {
    let set = subcritical_set(1.0 - 1e-6);
    let v = conformal_profile_v(&set);
    let pts = random_half_ball_points(&[0.0], 2.0, 20, 7);
    let k = kelvin_identity_residual(&v, &[0.3], 0.8, &pts, &set, rule64(), 48).unwrap();
    let pos = kernel_positivity(&[0.3], 0.8, set.lambda, 1000, 7).unwrap();
    ok(
        k.pass && pos.pass,
        format!("identity residual {:.2e} at 20 points, smallest K over 1000 pairs {:.3e}", k.residual, pos.lhs),
    )
}

fn criterion_8() -> Outcome {
    let (_, pair) = near_conformal();
    let rule = rule64();
    let u = |x: &[f64]| pair.u(x);
    let v = |y: &[f64]| pair.v(y);
    let (ints, fc) = fubini_check(u, v, &pair.set, rule).unwrap();
    let (t, k) = (pair.set.theta, pair.set.kappa);
    let trials = [None, Some((1.1 * t, 1.1 * k)), Some((0.9 * t, 0.9 * k))];
    let ladders = pohozaev_ladders(u, v, &pair.set, rule, &[0.1, 0.05], &[5.0, 10.0], &trials, &PohozaevOptions::default())
        .unwrap();
    let balanced_ok = ladders[0].1.pass;
    let mut signs = true;
    let mut parts = Vec::new();
    for ((rep, _), trial) in ladders[1..].iter().zip(&trials[1..]) {
        let (tt, tk) = trial.unwrap();
        let d = pohozaev_defect(&ExponentSet::from_theta_kappa(1, 1, -2.0, 0.2, 0.2, tt, tk).unwrap());
        signs &= rep.extrapolated.signum() == d.signum() && rep.sign_matches;
        parts.push(format!("{:+.4} (defect {:+.4})", rep.extrapolated, d));
    }
    ok(
        fc.pass && balanced_ok && signs,
        format!(
            "Fubini spread {:.1e}; Pohozaev balanced {:.1e}; unbalanced {}",
            ints.spread(),
            ladders[0].0.extrapolated,
            parts.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let (_, pair) = near_conformal();
    let (rep, check) = asymptotic_constants(|x: &[f64]| pair.u(x), |y: &[f64]| pair.v(y), &pair.set, rule64()).unwrap();
    let finite = rep.bound_constant_u.is_finite() && rep.bound_constant_v.is_finite();
    ok(
        check.pass && finite,
        format!(
            "a = {:.8}, b = {:.8}, worst ratio error at radius 1000 {:.2e}, bound constants {:.3}/{:.3}",
            rep.a, rep.b, rep.max_rel_error, rep.bound_constant_u, rep.bound_constant_v
        ),
    )
}

fn criterion_10() -> Outcome {
    let (_, pair) = near_conformal();
    let grid: Vec<Vec<f64>> = (0..=400).map(|k| vec![-20.0 + 0.1 * k as f64]).collect();
    let samples = trace_samples(pair, ProfileWhich::FProfile, &grid);
    let (_, fit) = boundary_profile_fit(&samples, &pair.set, ProfileWhich::FProfile).unwrap();

    let truth = ProfileParams {
        c: 1.7,
        d: 0.6,
        xi0: vec![0.4],
        exponent: 3.2,
    };
    let synth: Vec<(Vec<f64>, f64)> = grid.iter().map(|x| (x.clone(), profile_value(&truth, x))).collect();
    let (got, self_fit) = boundary_profile_fit_with_exponent(&synth, 3.2).unwrap();
    let perr = ((got.c - truth.c) / truth.c)
        .abs()
        .max(((got.d - truth.d) / truth.d).abs())
        .max((got.xi0[0] - truth.xi0[0]).abs());
    ok(
        fit.pass && self_fit.residual < 1e-10 && perr <= 1e-8,
        format!(
            "solver trace residual {:.2e}; synthetic residual {:.1e}, parameter error {perr:.1e}",
            fit.residual, self_fit.residual
        ),
    )
}

/// Serialized results of a small end-to-end run.
fn fingerprint() -> Vec<u8> {
    let rule = rule_small();
    let set = subcritical_set(0.95);
    let op = BallOperator::new(&set, rule).unwrap();
    let rep = solve_subcritical(&set, &op, &SolveOptions::default()).unwrap();
    let mut out = serde_json::to_vec(&rep).unwrap();
    out.extend(rep.f.to_csv().unwrap());
    out.extend(rep.g.to_csv().unwrap());
    let mc = mc_integrate(|z| z[0] * z[0] + z[1].exp(), 2, 100_000, 11).unwrap();
    out.extend(serde_json::to_vec(&mc).unwrap());
    let pair = rhls::pair::HalfSpacePair::from_solution(&rep.f, &rep.g, rep.c_star, &set, rule).unwrap();
    let (_, fc) = fubini_check(|x: &[f64]| pair.u(x), |y: &[f64]| pair.v(y), &set, rule).unwrap();
    out.extend(serde_json::to_vec(&fc).unwrap());
    out
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_rhls"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap_or(-1)
}

fn criterion_11() -> Outcome {
    let pool = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
    let a = pool(1).install(fingerprint);
    let b = pool(8).install(fingerprint);
    let c = pool(8).install(fingerprint);
    let lib_same = a == b && b == c;

    let tmp = tempfile::tempdir().unwrap();
    let (d1, d2) = (tmp.path().join("one"), tmp.path().join("eight"));
    let solve = ["solve", "--radial-order", "24", "--angular-order", "24"];
    let verify = ["verify", "--suite", "identities,kelvin,holder", "--radial-order", "24", "--angular-order", "24"];
    let codes = [
        run_cli(&d1, "1", &solve),
        run_cli(&d2, "8", &solve),
        run_cli(&d1, "1", &verify),
        run_cli(&d2, "8", &verify),
    ];
    let mut files_same = true;
    for name in ["solve.json", "f.csv", "g.csv", "verify.json"] {
        let x = std::fs::read(d1.join(name)).unwrap_or_default();
        let y = std::fs::read(d2.join(name)).unwrap_or_default();
        files_same &= !x.is_empty() && x == y;
    }
    ok(
        lib_same && files_same && codes == [0, 0, 0, 0],
        format!(
            "library output identical across 1/8/8 threads: {lib_same}; CLI files identical across runs: {files_same}; exit codes {codes:?}"
        ),
    )
}

fn main() {
    let known_failures = [6];
    let criteria: [(usize, &str, fn() -> Outcome); 11] = [
        (1, "special functions", criterion_1),
        (2, "constant band", criterion_2),
        (3, "geometry identities", criterion_3),
        (4, "inequality on random fields", criterion_4),
        (5, "solver contract", criterion_5),
        (6, "critical sweep", criterion_6),
        (7, "Kelvin identity", criterion_7),
        (8, "Fubini and Pohozaev", criterion_8),
        (9, "asymptotics", criterion_9),
        (10, "boundary profile", criterion_10),
        (11, "determinism", criterion_11),
    ];
    let mut fatal = Vec::new();
    for (id, name, run) in criteria {
        let t0 = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && known_failures.contains(&id) && o.expected_failure {
            " [known failure: stable limit below the stated lower bound]"
        } else {
            ""
        };
        println!(
            "criterion {id:>2} {tag}  {name}: {} ({:.1} s){note}",
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        if !o.pass && !(known_failures.contains(&id) && o.expected_failure) {
            fatal.push(id);
        }
    }
    if !fatal.is_empty() {
        eprintln!("unexpected failures: {fatal:?}");
        std::process::exit(1);
    }
}
