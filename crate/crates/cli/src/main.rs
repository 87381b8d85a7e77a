//! `qkzlab`: runs one family of checks and writes one JSON object per line on
//! stdout, followed by a summary object. A short human summary goes to
//! stderr. Exit status: 0 all pass, 1 some check failed, 2 usage or config
//! error, 3 infeasible parameters, 4 numerical failure.

mod json;

use clap::{Parser, Subcommand, ValueEnum};
use qkzlab_core::contour::{plan_contour, QuadratureGrid, RadiusPolicy};
use qkzlab_core::oracles::{self, random_points, IdentityReport};
use qkzlab_core::rmatrix::{closed_form, normalization_error, r_hat, solve, ybe_residual};
use qkzlab_core::solution::{psi, qkz_residual, EllipticW, IntegralSettings};
use qkzlab_core::weight::{theorem_f, weight_w, Mode, WeightIndex};
use qkzlab_core::{Config, Convention, Error, ModelParams, TruncationPolicy, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const SEED_ENV: &str = "QKZLAB_SEED";

#[derive(Parser, Debug)]
#[command(name = "qkzlab", version, about = "Numerical checks for integral solutions of qKZ equations", allow_negative_numbers = true)]
struct Cli {
    /// Flat `key = value` config file (q, k, L, spins, N, max_terms, tail_tol, quad_points, seed).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 1 is the serial reference mode. Output order does not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
    /// Quadrature points per circle (power of two, at least 64); overrides the config.
    #[arg(long, global = true)]
    quad_points: Option<usize>,
    /// geometric-mean, auto, or manual:<r>.
    #[arg(long, global = true, default_value = "auto")]
    radius_policy: RadiusPolicy,
    /// Comma-separated spins; overrides the config.
    #[arg(long, global = true, value_delimiter = ',')]
    spins: Option<Vec<u32>>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Null-space R-matrix against the explicit matrices and the v0 (x) v0 normalization.
    CheckR {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Also write the dressed matrix R-hat of each sample.
        #[arg(long)]
        dump: bool,
    },
    /// Yang-Baxter residuals for every spin triple up to --max-spin.
    CheckYbe {
        #[arg(long, default_value_t = 2)]
        max_spin: u32,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Brute-force identity checks at random q, t and z.
    VerifyLemmas {
        /// Largest size for the enumeration checks.
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        /// Number of independent random draws.
        #[arg(long, default_value_t = 30)]
        q_samples: usize,
        /// Skip the checks that involve the integrand structure.
        #[arg(long)]
        finite_only: bool,
    },
    /// The weight function w at a weight-mode index.
    EvalWeight {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        nu: Vec<u32>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Vec<C64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<C64>,
    },
    /// The closed form F at a component-mode index.
    EvalTheoremF {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        nu: Vec<u32>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Vec<C64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<C64>,
    },
    /// Measured shift ratios of the built W against the declared ones.
    CheckFell {
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
    /// qKZ residuals of Psi_W at every site.
    CheckQkz {
        /// Defaults to z_j = 0.7^j.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<C64>>,
        #[arg(long, value_enum, default_value_t = ConvArg::Consistent)]
        convention: ConvArg,
    },
    /// Psi_W on a ladder of quadrature sizes.
    Convergence {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024")]
        q_ladder: Vec<usize>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<C64>>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConvArg {
    Literal,
    Consistent,
}

impl From<ConvArg> for Convention {
    fn from(c: ConvArg) -> Self {
        match c {
            ConvArg::Literal => Convention::Literal,
            ConvArg::Consistent => Convention::Consistent,
        }
    }
}

/// Everything a subcommand needs besides its own flags.
struct Ctx {
    config: Config,
    seed: u64,
    trunc: TruncationPolicy,
    grid: QuadratureGrid,
    policy: RadiusPolicy,
    parallel: usize,
}

impl Ctx {
    fn model(&self) -> Result<ModelParams, Error> {
        self.config.model()
    }

    fn settings(&self) -> IntegralSettings {
        IntegralSettings { grid: self.grid, policy: self.policy }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Map in order, on a pool of `parallel` threads when above one.
    fn map<T: Sync, U: Send>(&self, items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
        if self.parallel <= 1 {
            return items.iter().map(f).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.parallel).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
            Err(_) => items.iter().map(f).collect(),
        }
    }
}

/// Collected records plus the overall verdict.
#[derive(Default)]
struct Records {
    lines: Vec<Value>,
    failures: usize,
}

impl Records {
    fn push(&mut self, pass: bool, v: Value) {
        if !pass {
            self.failures += 1;
        }
        self.lines.push(v);
    }

    fn identity(&mut self, r: &IdentityReport) {
        let mut v = serde_json::to_value(r).unwrap_or(Value::Null);
        if let Value::Object(m) = &mut v {
            m.insert("check".into(), json!("identity"));
        }
        self.push(r.pass, v);
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::ParameterDomain(_) | Error::Index(_) | Error::Shape(_) => 2,
        Error::Infeasible(_) | Error::Unsupported(_) => 3,
        _ => 4,
    }
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &qkzlab_core::CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| cjson(m[(i, j)])).collect())).collect())
}

fn check_r(ctx: &Ctx, samples: usize, dump: bool, explicit: bool) -> Result<Records, Error> {
    let q = C64::new(ctx.config.q, 0.0);
    let pairs: Vec<(u32, u32)> = if explicit {
        match ctx.config.spins.as_slice() {
            [a, b] => vec![(*a, *b)],
            s => return Err(Error::Config(format!("check-r needs two spins, got {s:?}"))),
        }
    } else {
        vec![(1, 1), (1, 2), (2, 1), (1, 3)]
    };
    let mut jobs = Vec::new();
    for (i, &(l1, l2)) in pairs.iter().enumerate() {
        let mut rng = ctx.rng(i as u64);
        for z in random_points(&mut rng, samples) {
            jobs.push((l1, l2, z));
        }
    }
    let rows = ctx.map(&jobs, |&(l1, l2, z)| -> Result<(bool, Value), Error> {
        let r = solve(l1, l2, z, q)?;
        let closed = if l1 == 1 || l2 == 1 {
            let c = closed_form(l1, l2, z, q)?;
            Some((&r.matrix - &c.matrix).iter().map(|x| x.norm()).fold(0.0, f64::max))
        } else {
            None
        };
        let norm = normalization_error(&r);
        let pass = closed.is_none_or(|e| e < 1e-11) && norm < 1e-12;
        let mut v = json!({
            "check": "r-matrix",
            "spins": [l1, l2],
            "z": cjson(z),
            "closed_form_error": closed,
            "normalization_error": norm,
            "tolerance": 1e-11,
            "pass": pass,
        });
        if dump {
            v["r_hat"] = matrix_json(&r_hat(l1, l2, z, q, &ctx.trunc)?);
        }
        Ok((pass, v))
    });
    collect(rows)
}

fn collect(rows: Vec<Result<(bool, Value), Error>>) -> Result<Records, Error> {
    let mut out = Records::default();
    for r in rows {
        let (pass, v) = r?;
        out.push(pass, v);
    }
    Ok(out)
}

fn check_ybe(ctx: &Ctx, max_spin: u32, samples: usize) -> Result<Records, Error> {
    let q = C64::new(ctx.config.q, 0.0);
    let mut jobs = Vec::new();
    let mut rng = ctx.rng(0);
    for a in 1..=max_spin {
        for b in 1..=max_spin {
            for c in 1..=max_spin {
                for _ in 0..samples {
                    let z = random_points(&mut rng, 3);
                    jobs.push(([a, b, c], [z[0], z[1], z[2]]));
                }
            }
        }
    }
    let rows = ctx.map(&jobs, |&(spins, z)| -> Result<(bool, Value), Error> {
        let res = ybe_residual(spins, z, q)?;
        let pass = res < 1e-10;
        Ok((pass, json!({"check": "yang-baxter", "spins": spins, "z": z.iter().map(|&x| cjson(x)).collect::<Vec<_>>(), "residual": res, "tolerance": 1e-10, "pass": pass})))
    });
    collect(rows)
}

fn verify_lemmas(ctx: &Ctx, max_n: usize, q_samples: usize, finite_only: bool) -> Result<Records, Error> {
    let draws: Vec<u64> = (0..q_samples as u64).collect();
    let rows = ctx.map(&draws, |&i| -> Result<Vec<IdentityReport>, Error> {
        let mut rng = ctx.rng(i);
        let mut reps = oracles::run_suite(&mut rng, max_n)?;
        if !finite_only {
            reps.extend(oracles::run_structure_suite(&mut rng, &ctx.grid, &ctx.trunc)?);
        }
        Ok(reps)
    });
    let mut out = Records::default();
    for r in rows {
        for rep in r? {
            out.identity(&rep);
        }
    }
    Ok(out)
}

fn eval_weight(ctx: &Ctx, nu: &[u32], t: &[C64], z: &[C64]) -> Result<Records, Error> {
    let idx = WeightIndex::new(nu, &ctx.config.spins, Mode::Weight)?;
    let w = weight_w(&idx, t, z, C64::new(ctx.config.q, 0.0))?;
    let mut out = Records::default();
    out.push(true, json!({"check": "weight", "nu": nu, "t": t.iter().map(|&x| cjson(x)).collect::<Vec<_>>(), "z": z.iter().map(|&x| cjson(x)).collect::<Vec<_>>(), "value": cjson(w), "pass": true}));
    Ok(out)
}

fn eval_theorem_f(ctx: &Ctx, nu: &[u32], t: &[C64], z: &[C64]) -> Result<Records, Error> {
    let idx = WeightIndex::new(nu, &ctx.config.spins, Mode::Component)?;
    let params = ctx.model()?.with_n_vars(idx.n_vars())?;
    let f = theorem_f(&idx, t, z, &params, &ctx.trunc)?;
    let mut out = Records::default();
    out.push(true, json!({"check": "closed-form-f", "nu": nu, "t": t.iter().map(|&x| cjson(x)).collect::<Vec<_>>(), "z": z.iter().map(|&x| cjson(x)).collect::<Vec<_>>(), "value": cjson(f.value), "tail_bound": f.tail_bound, "pass": true}));
    Ok(out)
}

fn check_fell(ctx: &Ctx, samples: usize) -> Result<Records, Error> {
    let params = ctx.model()?;
    let w = EllipticW::build(&params)?;
    let mut rng = ctx.rng(0);
    let mut out = Records::default();
    for _ in 0..samples {
        let t = random_points(&mut rng, params.n_vars);
        let z = random_points(&mut rng, params.n_sites());
        let mut emit = |kind: &str, index: usize, declared: C64, measured: C64| {
            let rel = (declared - measured).norm() / declared.norm().max(1e-300);
            let pass = rel < 1e-10;
            out.push(pass, json!({"check": "shift-ratio", "variable": kind, "index": index, "declared": cjson(declared), "measured": cjson(measured), "residual": rel, "tolerance": 1e-10, "pass": pass}));
        };
        for a in 0..params.n_vars {
            emit("t", a, w.declared_t_ratio(a), w.measured_t_ratio(a, &t, &z, &ctx.trunc)?);
        }
        for j in 0..params.n_sites() {
            emit("z", j, w.declared_z_ratio(j), w.measured_z_ratio(j, &t, &z, &ctx.trunc)?);
        }
    }
    Ok(out)
}

fn default_z(n: usize) -> Vec<C64> {
    (0..n).map(|j| C64::new(0.7f64.powi(j as i32), 0.0)).collect()
}

fn check_qkz(ctx: &Ctx, z: Option<Vec<C64>>, conv: Convention) -> Result<Records, Error> {
    let params = ctx.model()?;
    let z = z.unwrap_or_else(|| default_z(params.n_sites()));
    let w = EllipticW::build(&params)?;
    let settings = ctx.settings();
    let sites: Vec<usize> = (0..params.n_sites()).collect();
    let rows = ctx.map(&sites, |&j| -> Result<(bool, Value), Error> {
        let rep = qkz_residual(j, &params, &z, &w, &settings, conv, &ctx.trunc)?;
        let pass = rep.residual < 1e-6;
        let mut v = serde_json::to_value(&rep).unwrap_or(Value::Null);
        v["check"] = json!("qkz");
        v["convention"] = json!(conv);
        v["tolerance"] = json!(1e-6);
        v["pass"] = json!(pass);
        Ok((pass, v))
    });
    collect(rows)
}

fn convergence(ctx: &Ctx, ladder: &[usize], z: Option<Vec<C64>>) -> Result<Records, Error> {
    let params = ctx.model()?;
    let z = z.unwrap_or_else(|| default_z(params.n_sites()));
    let w = EllipticW::build(&params)?;
    let plan = plan_contour(&params, &z, ctx.policy).ok();
    let mut out = Records::default();
    let mut prev: Option<Vec<C64>> = None;
    for &n in ladder {
        let settings = IntegralSettings { grid: QuadratureGrid::new(n)?, policy: ctx.policy };
        let res = psi(&params, &z, &w, &settings, &ctx.trunc)?;
        let diff = prev.as_ref().map(|p| p.iter().zip(&res.psi.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        out.push(true, json!({
            "check": "convergence",
            "points": n,
            "psi": res.psi.coeffs.iter().map(|&x| cjson(x)).collect::<Vec<_>>(),
            "diff": diff,
            "radii": res.radii,
            "window_radius": plan.as_ref().map(|s| s.radius),
            "pass": true,
        }));
        prev = Some(res.psi.coeffs);
    }
    Ok(out)
}

fn load_config(cli: &Cli) -> Result<Ctx, Error> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    if let Some(n) = cli.quad_points {
        config.quad_points = n;
    }
    if let Some(s) = &cli.spins {
        config.spins = s.clone();
    }
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?,
        Err(_) => config.seed,
    };
    config.seed = seed;
    let trunc = config.truncation()?;
    let grid = QuadratureGrid::new(config.quad_points).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Ctx {
        config,
        seed,
        trunc,
        grid,
        policy: cli.radius_policy,
        parallel: cli.parallel.max(1),
    })
}

fn subcommand_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::CheckR { .. } => "check-r",
        Cmd::CheckYbe { .. } => "check-ybe",
        Cmd::VerifyLemmas { .. } => "verify-lemmas",
        Cmd::EvalWeight { .. } => "eval-weight",
        Cmd::EvalTheoremF { .. } => "eval-theorem-f",
        Cmd::CheckFell { .. } => "check-fell",
        Cmd::CheckQkz { .. } => "check-qkz",
        Cmd::Convergence { .. } => "convergence",
    }
}

fn run(cli: &Cli, ctx: &Ctx) -> Result<Records, Error> {
    match &cli.cmd {
        Cmd::CheckR { samples, dump } => check_r(ctx, *samples, *dump, cli.spins.is_some()),
        Cmd::CheckYbe { max_spin, samples } => check_ybe(ctx, *max_spin, *samples),
        Cmd::VerifyLemmas { max_n, q_samples, finite_only } => verify_lemmas(ctx, *max_n, *q_samples, *finite_only),
        Cmd::EvalWeight { nu, t, z } => eval_weight(ctx, nu, t, z),
        Cmd::EvalTheoremF { nu, t, z } => eval_theorem_f(ctx, nu, t, z),
        Cmd::CheckFell { samples } => check_fell(ctx, *samples),
        Cmd::CheckQkz { z, convention } => check_qkz(ctx, z.clone(), (*convention).into()),
        Cmd::Convergence { q_ladder, z } => convergence(ctx, q_ladder, z.clone()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = subcommand_name(&cli.cmd);
    let ctx = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qkzlab: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let start = Instant::now();
    let records = match run(&cli, &ctx) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("qkzlab {name}: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let pass = records.failures == 0;
    let summary = json!({
        "summary": {
            "subcommand": name,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": ctx.seed,
            "config": ctx.config,
            "truncation": ctx.trunc,
            "quadrature": ctx.grid,
            "radius_policy": ctx.policy,
            "records": records.lines.len(),
            "failures": records.failures,
            "pass": pass,
        }
    });
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for v in records.lines.iter().chain(std::iter::once(&summary)) {
        if writeln!(lock, "{}", json::to_line(v)).is_err() {
            return ExitCode::from(4);
        }
    }
    eprintln!(
        "qkzlab {name}: {} records, {} failed, {:.3} s",
        records.lines.len(),
        records.failures,
        start.elapsed().as_secs_f64()
    );
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
