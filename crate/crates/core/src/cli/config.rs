use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{range, Error, Result};
use crate::params::conformal_exponents;

/// Exponent block of a config file; every field may be overridden by a flag.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsBlock {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleBlock {
    pub dim: Option<usize>,
    pub radial_order: Option<usize>,
    pub angular_order: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub delta_min: Option<f64>,
    pub damping: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub schedule: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub suite: Option<Vec<String>>,
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
}

/// Contents of a `--config` JSON file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub exponents: ExponentsBlock,
    #[serde(default)]
    pub rule: RuleBlock,
    #[serde(default)]
    pub solve: SolveBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings. Its JSON form is hashed into every output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub dim: usize,
    pub radial_order: usize,
    pub angular_order: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub delta_min: f64,
    pub damping: f64,
    pub schedule: Vec<f64>,
    pub suite: Vec<String>,
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
    pub seed: u64,
}

pub const DEFAULT_SCHEDULE: [f64; 4] = [0.08, 0.04, 0.02, 0.01];

impl Resolved {
    /// Merges a file config with flag overrides (`flags` wins) and fills defaults.
    pub fn merge(file: RunConfig, flags: RunConfig) -> Result<Self> {
        let e = (&flags.exponents, &file.exponents);
        let n = e.0.n.or(e.1.n).unwrap_or(1);
        let r = (&flags.rule, &file.rule);
        let s = (&flags.solve, &file.solve);
        let v = (&flags.verify, &file.verify);
        let res = Self {
            n,
            m: e.0.m.or(e.1.m).unwrap_or(1),
            lambda: e.0.lambda.or(e.1.lambda).unwrap_or(-2.0),
            alpha: e.0.alpha.or(e.1.alpha).unwrap_or(0.2),
            beta: e.0.beta.or(e.1.beta).unwrap_or(0.2),
            p: e.0.p.or(e.1.p),
            q: e.0.q.or(e.1.q),
            dim: r.0.dim.or(r.1.dim).unwrap_or(n + 1),
            radial_order: r.0.radial_order.or(r.1.radial_order).unwrap_or(64),
            angular_order: r.0.angular_order.or(r.1.angular_order).unwrap_or(64),
            tol: s.0.tol.or(s.1.tol).unwrap_or(1e-10),
            max_iter: s.0.max_iter.or(s.1.max_iter).unwrap_or(500),
            delta_min: s.0.delta_min.or(s.1.delta_min).unwrap_or(1e-3),
            damping: s.0.damping.or(s.1.damping).unwrap_or(0.0),
            schedule: flags
                .sweep
                .schedule
                .clone()
                .or(file.sweep.schedule.clone())
                .unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec()),
            suite: v.0.suite.clone().or(v.1.suite.clone()).unwrap_or_else(|| vec!["all".into()]),
            theta: v.0.theta.or(v.1.theta),
            kappa: v.0.kappa.or(v.1.kappa),
            seed: flags.seed.or(file.seed).unwrap_or(0),
        };
        if res.dim != res.n + 1 {
            return range(format!("dim = {} must equal n + 1 = {}", res.dim, res.n + 1));
        }
        if res.radial_order == 0 || res.angular_order == 0 {
            return range("quadrature orders must be positive");
        }
        Ok(res)
    }

    /// First 16 bytes of the SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("resolved config serializes");
        hex::encode(&Sha256::digest(&bytes)[..16])
    }

    pub fn conformal(&self) -> Result<(f64, f64)> {
        conformal_exponents(self.n, self.m, self.lambda, self.alpha, self.beta)
    }
}
