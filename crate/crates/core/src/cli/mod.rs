//! Command-line front end: `constants`, `solve`, `sweep` and `verify`.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
//! 3 solver failure, 4 verification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::params::{validate_exponents, ExponentSet, RawExponents};
use crate::quad::{build_ball_rule, fmt17, QuadratureRule};

mod config;
mod suite;

pub use config::{ExponentsBlock, Resolved, RunConfig, RuleBlock, SolveBlock, SweepBlock, VerifyBlock};
pub use suite::{run_suite, SUITES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "rhls", version, about = "Reversed weighted HLS functional on the upper half space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explicit bounds on the sharp constant.
    Constants(CommonArgs),
    /// Alternating minimization at subcritical exponents.
    Solve(CommonArgs),
    /// Subcritical-to-critical sweep with Richardson extrapolation.
    Sweep(SweepArgs),
    /// Identity and inequality checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub radial_order: Option<usize>,
    #[arg(long)]
    pub angular_order: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; nothing is written without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Decreasing relative gaps below the conformal exponents.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated checks, or `all`.
    #[arg(long, value_delimiter = ',')]
    pub suite: Option<Vec<String>>,
    /// Trial θ for the Pohozaev check.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Trial κ for the Pohozaev check.
    #[arg(long)]
    pub kappa: Option<f64>,
}

impl CommonArgs {
    fn as_config(&self) -> RunConfig {
        RunConfig {
            exponents: ExponentsBlock {
                n: self.n,
                m: self.m,
                lambda: self.lambda,
                alpha: self.alpha,
                beta: self.beta,
                p: self.p,
                q: self.q,
            },
            rule: RuleBlock {
                dim: self.dim,
                radial_order: self.radial_order,
                angular_order: self.angular_order,
            },
            solve: SolveBlock {
                tol: self.tol,
                max_iter: self.max_iter,
                ..Default::default()
            },
            seed: self.seed,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            ..Default::default()
        }
    }
}

/// Settings shared by every command.
pub struct Context {
    pub resolved: Resolved,
    pub hash: String,
    pub out: Option<PathBuf>,
}

impl Context {
    fn new(common: &CommonArgs, mut flags: RunConfig) -> Result<Self> {
        let file = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let out = flags
            .out
            .take()
            .or(file.out.clone())
            .map(PathBuf::from);
        let resolved = Resolved::merge(file, flags)?;
        let hash = resolved.hash();
        Ok(Self { resolved, hash, out })
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        build_ball_rule(self.resolved.dim, self.resolved.radial_order, self.resolved.angular_order)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = &self.out {
            write_atomic(dir, name, bytes)?;
        }
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<String> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())?;
        Ok(text)
    }
}

/// Writes `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Maps a library error to the documented exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Range(_) | Error::Balance { .. } | Error::Config(_) => EXIT_CONFIG,
        Error::NoConvergence { .. } => EXIT_SOLVER,
        _ => EXIT_OTHER,
    }
}

/// Largest balance residual of a supplied `(p, q)` that is treated as
/// decimal rounding: `q` is then re-solved from `p` and the change reported.
pub const ROUNDING_BALANCE: f64 = 1e-3;

/// Balanced set for `constants`, plus the supplied `q` when it was re-solved.
fn balanced_set(r: &Resolved) -> Result<(ExponentSet, Option<f64>)> {
    let raw = |p: Option<f64>, q: Option<f64>| RawExponents {
        n: r.n,
        m: r.m,
        lambda: r.lambda,
        alpha: r.alpha,
        beta: r.beta,
        p,
        q,
    };
    match (r.p, r.q) {
        (None, None) => Ok((validate_exponents(&raw(Some(r.conformal()?.0), None))?, None)),
        (Some(p), Some(q)) => match validate_exponents(&raw(Some(p), Some(q))) {
            Err(Error::Balance { residual }) if residual.abs() <= ROUNDING_BALANCE => {
                Ok((validate_exponents(&raw(Some(p), None))?, Some(q)))
            }
            other => Ok((other?, None)),
        },
        (p, q) => Ok((validate_exponents(&raw(p, q))?, None)),
    }
}

/// Missing exponents default to `0.95` times the conformal ones.
fn subcritical_set(r: &Resolved) -> Result<ExponentSet> {
    let (pa, qb) = r.conformal()?;
    ExponentSet::unbalanced(
        r.n,
        r.m,
        r.lambda,
        r.alpha,
        r.beta,
        r.p.unwrap_or(0.95 * pa),
        r.q.unwrap_or(0.95 * qb),
    )
}

fn solve_options(r: &Resolved) -> crate::solver::SolveOptions {
    crate::solver::SolveOptions {
        max_iter: r.max_iter,
        tol: r.tol,
        delta_min: r.delta_min,
        damping: r.damping,
    }
}

fn cmd_constants(ctx: &Context) -> Result<i32> {
    let (set, q_supplied) = balanced_set(&ctx.resolved)?;
    if let Some(q) = q_supplied {
        eprintln!("note: q = {q} is off the balance; using q = {} solved from p", set.q);
    }
    let band = if set.m == 1 {
        crate::special::constant_band(&set)?
    } else {
        crate::special::constant_band_general_m(&set)?
    };
    let rule = ctx.rule()?;
    let doc = json!({
        "command": "constants",
        "config_hash": ctx.hash,
        "rule_id": rule.id,
        "exponents": set,
        "band": band,
        "lower_factor_dual": crate::special::lower_factor_dual(&set),
        "q_supplied": q_supplied,
    });
    print!("{}", ctx.write_json("constants.json", &doc)?);
    Ok(EXIT_OK)
}

fn cmd_solve(ctx: &Context) -> Result<i32> {
    let set = subcritical_set(&ctx.resolved)?;
    let rule = ctx.rule()?;
    let op = crate::functional::BallOperator::new(&set, &rule)?;
    let rep = crate::solver::solve_subcritical(&set, &op, &solve_options(&ctx.resolved))?;
    ctx.write("f.csv", &rep.f.to_csv()?)?;
    ctx.write("g.csv", &rep.g.to_csv()?)?;
    let doc = json!({
        "command": "solve",
        "config_hash": ctx.hash,
        "rule_id": rule.id,
        "report": rep,
    });
    print!("{}", ctx.write_json("solve.json", &doc)?);
    if rep.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "no convergence after {} iterations (last relative change {:e})",
            rep.iterations, rep.final_change
        );
        Ok(EXIT_SOLVER)
    }
}

fn cmd_sweep(ctx: &Context) -> Result<i32> {
    let r = &ctx.resolved;
    let (pa, qb) = r.conformal()?;
    let base = ExponentSet::unbalanced(r.n, r.m, r.lambda, r.alpha, r.beta, pa, qb)?;
    let rule = ctx.rule()?;
    let op = crate::functional::BallOperator::new(&base, &rule)?;
    let sweep = crate::solver::critical_sweep(&base, &r.schedule, &op, &solve_options(r), false)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["delta", "p", "q", "c_star", "iterations", "config_hash", "rule_id"])?;
    for pt in &sweep.points {
        w.write_record([
            fmt17(pt.delta),
            fmt17(pt.p),
            fmt17(pt.q),
            fmt17(pt.c_star),
            pt.iterations.to_string(),
            ctx.hash.clone(),
            rule.id.clone(),
        ])?;
    }
    let table = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    ctx.write("sweep.csv", &table)?;
    let doc = json!({
        "command": "sweep",
        "config_hash": ctx.hash,
        "rule_id": rule.id,
        "sweep": sweep,
    });
    print!("{}", ctx.write_json("sweep.json", &doc)?);
    Ok(EXIT_OK)
}

fn cmd_verify(ctx: &Context) -> Result<i32> {
    let rule = ctx.rule()?;
    let reports = run_suite(&ctx.resolved, &rule)?;
    for r in &reports {
        println!(
            "{} {:<24} residual {:>12.4e}  tolerance {:.1e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.residual,
            r.tolerance
        );
    }
    let doc = json!({
        "command": "verify",
        "config_hash": ctx.hash,
        "rule_id": rule.id,
        "reports": reports,
    });
    ctx.write_json("verify.json", &doc)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("failing checks: {}", failed.join(", "));
        Ok(EXIT_VERIFY)
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Constants(a) => cmd_constants(&Context::new(&a, a.as_config())?),
        Command::Solve(a) => cmd_solve(&Context::new(&a, a.as_config())?),
        Command::Sweep(a) => {
            let mut flags = a.common.as_config();
            flags.sweep.schedule = a.schedule.clone();
            cmd_sweep(&Context::new(&a.common, flags)?)
        }
        Command::Verify(a) => {
            let mut flags = a.common.as_config();
            flags.verify = VerifyBlock {
                suite: a.suite.clone(),
                theta: a.theta,
                kappa: a.kappa,
            };
            cmd_verify(&Context::new(&a.common, flags)?)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
