//! Global model parameters and their derived constants.
//!
//! `ModelParams` is the single source of truth for q, the level k, the
//! elliptic nome p = q^(2(k+2)), the highest-weight label L, the spins, the
//! number N of integration variables, kappa and the exponents a_i.
//! All complex powers use the principal branch.

use crate::error::{Error, Result};
use crate::C64;
use serde::Serialize;

/// Truncation rule for every infinite product in the crate.
///
/// A product stops after `max_terms` factors, or earlier once the running
/// factor differs from 1 by less than `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationPolicy {
    pub max_terms: usize,
    pub tail_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            max_terms: 400,
            tail_tol: 1e-18,
        }
    }
}

impl TruncationPolicy {
    pub fn new(max_terms: usize, tail_tol: f64) -> Result<Self> {
        if max_terms == 0 {
            return Err(Error::ParameterDomain("max_terms must be positive".into()));
        }
        if !(tail_tol > 0.0) {
            return Err(Error::ParameterDomain("tail_tol must be positive".into()));
        }
        Ok(Self {
            max_terms,
            tail_tol,
        })
    }
}

/// Principal-branch power `base^exp`.
pub fn cpow(base: C64, exp: C64) -> C64 {
    if base == C64::new(0.0, 0.0) {
        return if exp == C64::new(0.0, 0.0) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
    }
    (exp * base.ln()).exp()
}

/// Integer power by repeated squaring (exact branch-free for integer exponents).
pub fn ipow(base: C64, exp: i64) -> C64 {
    if exp < 0 {
        return C64::new(1.0, 0.0) / ipow(base, -exp);
    }
    let mut acc = C64::new(1.0, 0.0);
    let mut b = base;
    let mut e = exp as u64;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

/// All global parameters plus derived constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    pub q: C64,
    pub k: C64,
    pub p: C64,
    #[serde(rename = "L")]
    pub l_label: C64,
    pub spins: Vec<u32>,
    #[serde(rename = "N")]
    pub n_vars: usize,
    pub kappa: C64,
    pub a_exponents: Vec<C64>,
    pub contour_feasible: bool,
}

impl ModelParams {
    /// Build and validate a parameter set.
    pub fn derive(q: C64, k: C64, l_label: C64, spins: &[u32], n_vars: usize) -> Result<Self> {
        if !(q.norm() < 1.0) {
            return Err(Error::ParameterDomain(format!("|q| = {} must be < 1", q.norm())));
        }
        if q.norm() == 0.0 {
            return Err(Error::ParameterDomain("q must be nonzero".into()));
        }
        if spins.is_empty() {
            return Err(Error::ParameterDomain("spins must be nonempty".into()));
        }
        let two = C64::new(2.0, 0.0);
        if (k + two).norm() == 0.0 {
            return Err(Error::ParameterDomain("k = -2 is excluded".into()));
        }
        let p = cpow(q, two * (k + two));
        if !(p.norm() < 1.0) {
            return Err(Error::ParameterDomain(format!("|p| = {} must be < 1", p.norm())));
        }
        let sum_l: f64 = spins.iter().map(|&l| l as f64).sum();
        let nn = n_vars as f64;
        let kappa = cpow(q, -two * (l_label + sum_l / 2.0 - nn + 1.0));
        let a_exponents = spins
            .iter()
            .map(|&l| {
                let l = l as f64;
                (l / (two * (k + two))) * (l_label + sum_l - l / 2.0 - nn + 1.0)
            })
            .collect();
        let lmax = spins.iter().copied().max().unwrap_or(0) as f64;
        let contour_feasible = k.im.abs() < 1e-14 && k.re + 2.0 > lmax;
        Ok(Self {
            q,
            k,
            p,
            l_label,
            spins: spins.to_vec(),
            n_vars,
            kappa,
            a_exponents,
            contour_feasible,
        })
    }

    /// Convenience constructor for real parameters.
    pub fn real(q: f64, k: f64, l_label: f64, spins: &[u32], n_vars: usize) -> Result<Self> {
        Self::derive(
            C64::new(q, 0.0),
            C64::new(k, 0.0),
            C64::new(l_label, 0.0),
            spins,
            n_vars,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    /// Same parameters with a different number of integration variables.
    pub fn with_n_vars(&self, n_vars: usize) -> Result<Self> {
        Self::derive(self.q, self.k, self.l_label, &self.spins, n_vars)
    }

    /// Same parameters with different spins.
    pub fn with_spins(&self, spins: &[u32]) -> Result<Self> {
        Self::derive(self.q, self.k, self.l_label, spins, self.n_vars)
    }

    /// q raised to a real power (principal branch).
    pub fn qpow(&self, e: f64) -> C64 {
        cpow(self.q, C64::new(e, 0.0))
    }

    /// Fails unless contour-based operations are allowed for these parameters.
    pub fn require_contour_feasible(&self) -> Result<()> {
        if self.contour_feasible {
            Ok(())
        } else {
            Err(Error::Infeasible(format!(
                "need real k with k + 2 > max spin (k = {}, spins = {:?})",
                self.k, self.spins
            )))
        }
    }
}

/// Conformal weight j(j+2)/(4(k+2)).
pub fn delta_weight(j: C64, k: C64) -> Result<C64> {
    let d = 4.0 * (k + 2.0);
    if d.norm() == 0.0 {
        return Err(Error::ParameterDomain("delta_weight: k = -2".into()));
    }
    Ok(j * (j + 2.0) / d)
}

/// Settings read from a flat `key = value` config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub q: f64,
    pub k: f64,
    #[serde(rename = "L")]
    pub l_label: f64,
    pub spins: Vec<u32>,
    #[serde(rename = "N")]
    pub n_vars: usize,
    pub max_terms: usize,
    pub tail_tol: f64,
    pub quad_points: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            q: 0.6,
            k: 1.0,
            l_label: 0.3,
            spins: vec![1, 1],
            n_vars: 1,
            max_terms: 400,
            tail_tol: 1e-18,
            quad_points: 512,
            seed: 20240601,
        }
    }
}

impl Config {
    /// Parse the flat format: one `key = value` per line, `#` starts a comment.
    /// Unknown keys are rejected; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::Config(format!("line {}: bad {} value {:?}", lineno + 1, what, value));
            match key {
                "q" => cfg.q = value.parse().map_err(|_| bad("q"))?,
                "k" => cfg.k = value.parse().map_err(|_| bad("k"))?,
                "L" => cfg.l_label = value.parse().map_err(|_| bad("L"))?,
                "spins" => {
                    cfg.spins = value
                        .split(',')
                        .map(|s| s.trim().parse::<u32>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("spins"))?
                }
                "N" => cfg.n_vars = value.parse().map_err(|_| bad("N"))?,
                "max_terms" => cfg.max_terms = value.parse().map_err(|_| bad("max_terms"))?,
                "tail_tol" => cfg.tail_tol = value.parse().map_err(|_| bad("tail_tol"))?,
                "quad_points" => cfg.quad_points = value.parse().map_err(|_| bad("quad_points"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                other => return Err(Error::Config(format!("line {}: unknown key {:?}", lineno + 1, other))),
            }
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<ModelParams> {
        ModelParams::real(self.q, self.k, self.l_label, &self.spins, self.n_vars)
    }

    pub fn truncation(&self) -> Result<TruncationPolicy> {
        TruncationPolicy::new(self.max_terms, self.tail_tol)
    }
}
