use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::error::{range, Error, Result};
use crate::pair::HalfSpacePair;
use crate::params::ExponentSet;

const PROFILE_TOL: f64 = 1e-2;

/// `c (d/(1 + d²|x−ξ₀|²))^e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub c: f64,
    pub d: f64,
    pub xi0: Vec<f64>,
    pub exponent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileWhich {
    FProfile,
    GProfile,
}

/// `(2(n+1) + 2α − λ)/2`, or the `β` version for the second trace.
pub fn profile_exponent(set: &ExponentSet, which: ProfileWhich) -> f64 {
    let w = match which {
        ProfileWhich::FProfile => set.alpha,
        ProfileWhich::GProfile => set.beta,
    };
    (2.0 * set.space_dim() as f64 + 2.0 * w - set.lambda) / 2.0
}

/// Decay power of the sampled traces `ũ^{−θ}`, `ṽ^{−κ}`: `−θλ/2` or `−κλ/2`.
pub fn trace_decay_exponent(set: &ExponentSet, which: ProfileWhich) -> f64 {
    match which {
        ProfileWhich::FProfile => -set.theta * set.lambda / 2.0,
        ProfileWhich::GProfile => -set.kappa * set.lambda / 2.0,
    }
}

pub fn profile_value(params: &ProfileParams, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().zip(&params.xi0).map(|(a, b)| (a - b) * (a - b)).sum();
    params.c * (params.d / (1.0 + params.d * params.d * r2)).powf(params.exponent)
}

/// Boundary traces `ũ(x)^{−θ}` (or `ṽ(x)^{−κ}`) of a pair, where
/// `ũ = lim_{t→0} u/t^α`.
pub fn trace_samples(pair: &HalfSpacePair, which: ProfileWhich, grid: &[Vec<f64>]) -> Vec<(Vec<f64>, f64)> {
    grid.par_iter()
        .map(|x| {
            let y = match which {
                ProfileWhich::FProfile => pair.u_trace(x).powf(-pair.set.theta),
                ProfileWhich::GProfile => pair.v_trace(x).powf(-pair.set.kappa),
            };
            (x.clone(), y)
        })
        .collect()
}

struct Model<'a> {
    samples: &'a [(Vec<f64>, f64)],
    scale: f64,
    free_exponent: bool,
}

impl Model<'_> {
    fn unpack(&self, p: &[f64], fixed_e: f64) -> ProfileParams {
        let k = self.samples[0].0.len();
        ProfileParams {
            c: p[0].exp(),
            d: p[1].exp(),
            xi0: p[2..2 + k].to_vec(),
            exponent: if self.free_exponent { p[2 + k].exp() } else { fixed_e },
        }
    }

    /// Scaled residuals and their Jacobian in `(ln c, ln d, ξ₀, [ln e])`.
    fn eval(&self, p: &[f64], fixed_e: f64) -> (DVector<f64>, DMatrix<f64>) {
        let pp = self.unpack(p, fixed_e);
        let (n, k) = (self.samples.len(), p.len());
        let mut r = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, k);
        let dd = pp.d * pp.d;
        for (i, (x, y)) in self.samples.iter().enumerate() {
            let r2: f64 = x.iter().zip(&pp.xi0).map(|(a, b)| (a - b) * (a - b)).sum();
            let base = pp.d / (1.0 + dd * r2);
            let m = pp.c * base.powf(pp.exponent);
            r[i] = (m - y) / self.scale;
            let ms = m / self.scale;
            jac[(i, 0)] = ms;
            jac[(i, 1)] = ms * pp.exponent * (1.0 - 2.0 * dd * r2 / (1.0 + dd * r2));
            for (c, (a, b)) in x.iter().zip(&pp.xi0).enumerate() {
                jac[(i, 2 + c)] = ms * pp.exponent * 2.0 * dd * (a - b) / (1.0 + dd * r2);
            }
            if self.free_exponent {
                jac[(i, k - 1)] = ms * pp.exponent * base.ln();
            }
        }
        (r, jac)
    }
}

fn sup_residual(samples: &[(Vec<f64>, f64)], params: &ProfileParams, scale: f64) -> f64 {
    samples
        .iter()
        .map(|(x, y)| (profile_value(params, x) - y).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Best `(d, ξ₀)` on a coarse grid, with `c` solved in closed form.
fn coarse_start(samples: &[(Vec<f64>, f64)], exponent: f64) -> ProfileParams {
    let k = samples[0].0.len();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for (x, _) in samples {
        for c in 0..k {
            lo[c] = lo[c].min(x[c]);
            hi[c] = hi[c].max(x[c]);
        }
    }
    let steps: usize = if k == 1 { 41 } else { 11 };
    let centres: Vec<Vec<f64>> = (0..steps.pow(k as u32))
        .map(|mut idx| {
            (0..k)
                .map(|c| {
                    let s = idx % steps;
                    idx /= steps;
                    lo[c] + (hi[c] - lo[c]) * s as f64 / (steps - 1) as f64
                })
                .collect()
        })
        .collect();
    let mut best = (f64::INFINITY, None);
    for xi0 in &centres {
        for j in 0..=40 {
            let d = 10f64.powf(-2.0 + 0.1 * j as f64);
            let shape: Vec<f64> = samples
                .iter()
                .map(|(x, _)| {
                    let r2: f64 = x.iter().zip(xi0).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d / (1.0 + d * d * r2)).powf(exponent)
                })
                .collect();
            let num: f64 = shape.iter().zip(samples).map(|(s, (_, y))| s * y).sum();
            let den: f64 = shape.iter().map(|s| s * s).sum();
            if !(den > 0.0 && num > 0.0) {
                continue;
            }
            let c = num / den;
            let sse: f64 = shape.iter().zip(samples).map(|(s, (_, y))| (c * s - y).powi(2)).sum();
            if sse < best.0 {
                best = (
                    sse,
                    Some(ProfileParams {
                        c,
                        d,
                        xi0: xi0.clone(),
                        exponent,
                    }),
                );
            }
        }
    }
    best.1.unwrap_or(ProfileParams {
        c: 1.0,
        d: 1.0,
        xi0: vec![0.0; k],
        exponent,
    })
}

fn fit(samples: &[(Vec<f64>, f64)], exponent: f64, free_exponent: bool) -> Result<(ProfileParams, f64, usize)> {
    if samples.len() < 4 {
        return range("profile fit needs at least four samples");
    }
    if samples.iter().any(|(_, y)| !(y.is_finite() && *y > 0.0)) {
        return Err(Error::Fit("trace samples must be positive and finite".into()));
    }
    let scale = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let model = Model {
        samples,
        scale,
        free_exponent,
    };
    let start = coarse_start(samples, exponent);
    let mut p: Vec<f64> = vec![start.c.ln(), start.d.ln()];
    p.extend(&start.xi0);
    if free_exponent {
        p.push(exponent.ln());
    }
    let (r0, _) = model.eval(&p, exponent);
    let sse0 = r0.norm_squared();
    let mut sse = sse0;
    let mut mu = 1e-3;
    let mut accepted = 0;
    for _ in 0..500 {
        let (r, j) = model.eval(&p, exponent);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let mut a = jtj.clone();
        for i in 0..p.len() {
            a[(i, i)] += mu * jtj[(i, i)].max(1e-300);
        }
        let step = match a.lu().solve(&(-g)) {
            Some(s) => s,
            None => {
                mu *= 10.0;
                continue;
            }
        };
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let (rt, _) = model.eval(&trial, exponent);
        let st = rt.norm_squared();
        if st.is_finite() && st < sse {
            let rel = (sse - st) / sse.max(1e-300);
            p = trial;
            sse = st;
            accepted += 1;
            mu = (mu / 3.0).max(1e-15);
            if rel < 1e-15 || sse < 1e-32 {
                break;
            }
        } else {
            mu *= 4.0;
            if mu > 1e16 {
                break;
            }
        }
    }
    if accepted == 0 && sse0 > 1e-28 {
        return Err(Error::Fit(format!("optimizer made no progress from residual {sse0:e}")));
    }
    let params = model.unpack(&p, exponent);
    if !(params.c.is_finite() && params.d.is_finite() && params.xi0.iter().all(|v| v.is_finite())) {
        return Err(Error::Fit("non-finite fitted parameters".into()));
    }
    let sup = sup_residual(samples, &params, scale);
    Ok((params, sup, accepted))
}

/// Least-squares fit of `c (d/(1+d²|x−ξ₀|²))^e` with `e` from
/// [`profile_exponent`]; the check uses the sup-norm residual relative to
/// the largest sample.
pub fn boundary_profile_fit(
    samples: &[(Vec<f64>, f64)],
    set: &ExponentSet,
    which: ProfileWhich,
) -> Result<(ProfileParams, CheckReport)> {
    boundary_profile_fit_with_exponent(samples, profile_exponent(set, which))
}

/// As [`boundary_profile_fit`] with an explicit fixed exponent.
pub fn boundary_profile_fit_with_exponent(samples: &[(Vec<f64>, f64)], exponent: f64) -> Result<(ProfileParams, CheckReport)> {
    let (params, sup, steps) = fit(samples, exponent, false)?;
    let report = CheckReport::new("boundary_profile", sup, 0.0, sup, PROFILE_TOL)
        .with_f64("c", params.c)
        .with_f64("d", params.d)
        .with_f64("exponent", params.exponent)
        .with("xi0", params.xi0.clone())
        .with("lm_steps", steps);
    Ok((params, report))
}

/// Fit with the exponent as a further free parameter, started at `exponent`.
pub fn boundary_profile_fit_free(samples: &[(Vec<f64>, f64)], exponent: f64) -> Result<(ProfileParams, f64)> {
    let (params, sup, _) = fit(samples, exponent, true)?;
    Ok((params, sup))
}
