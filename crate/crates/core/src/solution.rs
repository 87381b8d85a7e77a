//! Elliptic factors W, solution vectors Psi_W, the difference operators of
//! the qKZ system and their residuals.
//!
//! Psi_W has components (prod z_i^{a_i}) (prod_{i<j} xi(z_i/z_j)) times
//! prod_i [l_i choose nu_i]_q I(w_(nu), W) at nu = l - eps. Integrals are
//! evaluated for N <= 1 only; see the crate README for why.
//!
//! The shift operator for site j applies, in order, the right factors
//! R_{j,i}(z_j/z_i) for i = j+1..n, then kappa^{h_j/2} on leg j, then the
//! left factors R_{j,i}(p z_j/z_i) for i = 1..j-1, each R acting with its
//! first tensor factor on leg j.

use crate::contour::{integrate, plan_contour, plan_for, Factor, Integrand, QuadratureGrid, RadiusPolicy, Side};
use crate::error::{Error, Result};
use crate::params::{cpow, ipow, ModelParams, TruncationPolicy};
use crate::qspecial::{qbinom, theta};
use crate::repr::{apply_one_site_diag, apply_two_site, TensorVector, TwoSiteOperator};
use crate::rmatrix::{dressed, Convention, FactorSide};
use crate::weight::solution_prefactor;
use crate::C64;
use serde::Serialize;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// One product term Y(z) Theta(t, z) / prod theta(q^l t/z) prod theta(t_a/t_b)/theta(q^-2 t_a/t_b)
/// with Theta = prod_{a,j} theta(c_j t_a/z_j) and Y = prod z_j^{gamma_j}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticTerm {
    pub coefficient: C64,
    pub multipliers: Vec<C64>,
    pub gammas: Vec<C64>,
}

/// A linear combination of [`EllipticTerm`]s sharing the same shift ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticW {
    pub params: ModelParams,
    pub terms: Vec<EllipticTerm>,
}

impl EllipticTerm {
    /// Term with given multipliers; requires prod over spin-carrying sites
    /// of c_j = 1/kappa and c_j = 1 on spin-0 sites.
    pub fn new(params: &ModelParams, coefficient: C64, multipliers: Vec<C64>) -> Result<Self> {
        if multipliers.len() != params.n_sites() {
            return Err(Error::Shape(format!("{} multipliers for {} sites", multipliers.len(), params.n_sites())));
        }
        if params.kappa.norm() == 0.0 {
            return Err(Error::ParameterDomain("kappa = 0".into()));
        }
        if (0..multipliers.len()).any(|j| params.spins[j] == 0 && multipliers[j] != one()) && params.spins.iter().any(|&l| l != 0) {
            return Err(Error::ParameterDomain("spin-0 sites need c_j = 1".into()));
        }
        let prod: C64 = multipliers.iter().product();
        let carries = params.spins.iter().any(|&l| l != 0);
        if params.n_vars > 0 && carries && (prod * params.kappa - one()).norm() > 1e-12 {
            return Err(Error::ParameterDomain(format!("prod c_j = {prod} differs from 1/kappa")));
        }
        let lnp = params.p.ln();
        let n = params.n_vars as f64;
        let gammas = multipliers.iter().map(|c| -n * c.ln() / lnp).collect();
        Ok(Self {
            coefficient,
            multipliers,
            gammas,
        })
    }
}

impl EllipticW {
    /// The default element: c_j = kappa^(-1/n') on the n' spin-carrying sites,
    /// so that p^gamma_j = kappa^(N/n').
    pub fn build(params: &ModelParams) -> Result<Self> {
        let carrying: Vec<usize> = (0..params.n_sites()).filter(|&j| params.spins[j] != 0).collect();
        let nn = carrying.len().max(1) as f64;
        let c = cpow(params.kappa, C64::new(-1.0 / nn, 0.0));
        let mut m = vec![one(); params.n_sites()];
        if carrying.is_empty() {
            m[0] = one() / params.kappa;
        }
        for &j in &carrying {
            m[j] = c;
        }
        Ok(Self {
            params: params.clone(),
            terms: vec![EllipticTerm::new(params, one(), m)?],
        })
    }

    /// A single term with the given multipliers.
    pub fn with_multipliers(params: &ModelParams, multipliers: Vec<C64>) -> Result<Self> {
        Ok(Self {
            params: params.clone(),
            terms: vec![EllipticTerm::new(params, one(), multipliers)?],
        })
    }

    /// alpha self + beta other.
    pub fn combine(&self, alpha: C64, other: &EllipticW, beta: C64) -> Result<Self> {
        if self.params != other.params {
            return Err(Error::Shape("combining W for different parameters".into()));
        }
        let mut terms = self.scaled(alpha).terms;
        terms.extend(other.scaled(beta).terms);
        Ok(Self {
            params: self.params.clone(),
            terms,
        })
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            params: self.params.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| EllipticTerm {
                    coefficient: t.coefficient * s,
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// Pointwise W(t, z), with z^gamma on the principal branch.
    pub fn eval(&self, t: &[C64], z: &[C64], trunc: &TruncationPolicy) -> Result<C64> {
        let logs: Vec<C64> = z.iter().map(|x| x.ln()).collect();
        self.eval_on_cover(t, z, &logs, trunc)
    }

    /// W(t, z) with z_j^gamma_j = exp(gamma_j log_z_j) for the given logarithms.
    fn eval_on_cover(&self, t: &[C64], z: &[C64], log_z: &[C64], trunc: &TruncationPolicy) -> Result<C64> {
        let pr = &self.params;
        if t.len() != pr.n_vars || z.len() != pr.n_sites() {
            return Err(Error::Shape(format!("W: {} t and {} z", t.len(), z.len())));
        }
        let (q, p) = (pr.q, pr.p);
        let th = |x: C64| -> Result<C64> { Ok(theta(x, p, trunc)?.value) };
        let mut common = one();
        for a in 0..t.len() {
            for b in a + 1..t.len() {
                let x = t[a] / t[b];
                common *= th(x)? / th(ipow(q, -2) * x)?;
            }
            for (j, &l) in pr.spins.iter().enumerate() {
                common /= th(ipow(q, l as i64) * t[a] / z[j])?;
            }
        }
        let mut acc = C64::new(0.0, 0.0);
        for term in &self.terms {
            let mut v = term.coefficient * common;
            for (j, &zj) in z.iter().enumerate() {
                v *= (term.gammas[j] * log_z[j]).exp();
                for &ta in t {
                    v *= th(term.multipliers[j] * ta / zj)?;
                }
            }
            acc += v;
        }
        Ok(acc)
    }

    /// kappa q^(-2N + 4a - 2) prod q^l_i for the 0-based variable a.
    pub fn declared_t_ratio(&self, a: usize) -> C64 {
        let pr = &self.params;
        let n = pr.n_vars as i64;
        let sl: i64 = pr.spins.iter().map(|&l| l as i64).sum();
        pr.kappa * ipow(pr.q, -2 * n + 4 * (a as i64 + 1) - 2 + sl)
    }

    /// q^(-l_j N).
    pub fn declared_z_ratio(&self, j: usize) -> C64 {
        ipow(self.params.q, -((self.params.spins[j] as usize * self.params.n_vars) as i64))
    }

    /// Measured W(.., p t_a, ..)/W.
    pub fn measured_t_ratio(&self, a: usize, t: &[C64], z: &[C64], trunc: &TruncationPolicy) -> Result<C64> {
        let mut ts = t.to_vec();
        ts[a] *= self.params.p;
        Ok(self.eval(&ts, z, trunc)? / self.eval(t, z, trunc)?)
    }

    /// Measured W(t, .., p z_j, ..)/W, continuing log z_j along the shift.
    pub fn measured_z_ratio(&self, j: usize, t: &[C64], z: &[C64], trunc: &TruncationPolicy) -> Result<C64> {
        let logs: Vec<C64> = z.iter().map(|x| x.ln()).collect();
        let mut zs = z.to_vec();
        let mut shifted = logs.clone();
        zs[j] *= self.params.p;
        shifted[j] += self.params.p.ln();
        Ok(self.eval_on_cover(t, &zs, &shifted, trunc)? / self.eval_on_cover(t, z, &logs, trunc)?)
    }
}

/// Integrand Phi w_(nu) W / Y for one term at N = 1, as catalogued factors.
/// `site` is the site carrying the single variable of nu.
fn one_variable_integrand(params: &ModelParams, term: &EllipticTerm, site: usize, z: &[C64], trunc: &TruncationPolicy) -> Integrand {
    let (q, p) = (params.q, params.p);
    let mut f = Integrand::new(term.coefficient);
    for (j, &zj) in z.iter().enumerate() {
        let l = params.spins[j] as i64;
        let ql = ipow(q, -l);
        if l != 0 {
            // theta(c t/z) / [(q^-l t/z; p)(p q^-l z/t; p)], the (p;p) factors cancel
            let (th, _) = Factor::theta(term.multipliers[j] / zj, 1, p, trunc);
            f.factors.extend(th);
            f.push(Factor::Poch { a: ql / zj, m: 1, e: -1, base: p, side: Side::Outside });
            f.push(Factor::Poch { a: p * ql * zj, m: -1, e: -1, base: p, side: Side::Inside });
        }
        if j < site {
            // (q^-l t - z)/(t - q^-l z) = -z t^-1 (1 - q^-l t/z)/(1 - q^-l z/t)
            f.constant *= -zj;
            f.push(Factor::Mono { c: one(), d: -1 });
            f.push(Factor::Lin { a: ql / zj, m: 1, e: 1, side: Side::Inside });
            f.push(Factor::Lin { a: ql * zj, m: -1, e: -1, side: Side::Inside });
        } else if j == site {
            // t/(t - q^-l z) = 1/(1 - q^-l z/t)
            f.push(Factor::Lin { a: ql * zj, m: -1, e: -1, side: Side::Inside });
        }
    }
    f
}

/// Settings for evaluating integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralSettings {
    pub grid: QuadratureGrid,
    pub policy: RadiusPolicy,
}

/// Psi_W plus the radii used for each contributing component.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiResult {
    pub psi: TensorVector,
    pub radii: Vec<f64>,
}

/// The solution vector Psi_W at z.
pub fn psi(params: &ModelParams, z: &[C64], w: &EllipticW, settings: &IntegralSettings, trunc: &TruncationPolicy) -> Result<PsiResult> {
    if z.len() != params.n_sites() {
        return Err(Error::Shape(format!("psi: {} z for {} sites", z.len(), params.n_sites())));
    }
    if w.params != *params {
        return Err(Error::Shape("W was built for different parameters".into()));
    }
    let n_vars = params.n_vars;
    if n_vars >= 2 {
        return Err(Error::Unsupported(format!("integrals in N = {n_vars} variables")));
    }
    let pref = solution_prefactor(z, params, trunc)?.value;
    let mut out = TensorVector::zeros(&params.spins);
    let mut radii = Vec::new();
    let window_radius = if n_vars == 1 {
        params.require_contour_feasible()?;
        match plan_contour(params, z, settings.policy) {
            Ok(s) => Some(s.radius),
            Err(e) if settings.policy == RadiusPolicy::GeometricMean => return Err(e),
            Err(_) => None,
        }
    } else {
        None
    };
    for off in 0..out.dim() {
        let eps = out.multi_index(off);
        let nu: Vec<u32> = params.spins.iter().zip(&eps).map(|(&l, &e)| l - e).collect();
        if nu.iter().map(|&x| x as usize).sum::<usize>() != n_vars {
            continue;
        }
        let mut norm = one();
        for (&l, &v) in params.spins.iter().zip(&nu) {
            norm *= qbinom(l as i64, v as i64, params.q)?;
        }
        let mut val = C64::new(0.0, 0.0);
        for term in &w.terms {
            let y: C64 = z.iter().zip(&term.gammas).map(|(&zj, &g)| cpow(zj, g)).product();
            let integral = if n_vars == 0 {
                term.coefficient
            } else {
                let site = nu.iter().position(|&x| x == 1).expect("one variable");
                let f = one_variable_integrand(params, term, site, z, trunc);
                let spec = plan_for(&f, window_radius.filter(|r| r.is_finite()), settings.policy, trunc)?;
                radii.push(spec.radius);
                integrate(&f, &spec, &settings.grid, trunc)?
            };
            val += y * integral;
        }
        out.coeffs[off] = pref * norm * val;
    }
    Ok(PsiResult { psi: out, radii })
}

/// One step of a composite operator.
#[derive(Debug, Clone, PartialEq)]
pub enum OpStep {
    TwoSite(TwoSiteOperator),
    Diagonal { leg: usize, diag: Vec<C64> },
}

/// An ordered product of leg operators; steps are applied first to last.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeOperator {
    pub steps: Vec<OpStep>,
}

impl CompositeOperator {
    pub fn apply(&self, v: &TensorVector) -> Result<TensorVector> {
        let mut cur = v.clone();
        for s in &self.steps {
            cur = match s {
                OpStep::TwoSite(op) => apply_two_site(op, &cur)?,
                OpStep::Diagonal { leg, diag } => apply_one_site_diag(*leg, diag, &cur)?,
            };
        }
        Ok(cur)
    }
}

/// kappa^(h/2) on V^(l): v_m -> kappa^((l - 2m)/2) v_m.
pub fn kappa_half_h(l: u32, kappa: C64) -> Vec<C64> {
    (0..=l).map(|m| cpow(kappa, C64::new((l as f64 - 2.0 * m as f64) / 2.0, 0.0))).collect()
}

/// The right-hand side operator of the shift in z_j (0-based j).
pub fn qkz_rhs_operator(j: usize, z: &[C64], params: &ModelParams, conv: Convention, trunc: &TruncationPolicy) -> Result<CompositeOperator> {
    let n = params.n_sites();
    if j >= n || z.len() != n {
        return Err(Error::Index(format!("site {j} of {n}")));
    }
    let (q, p) = (params.q, params.p);
    let l = &params.spins;
    let mut steps = Vec::new();
    for i in j + 1..n {
        let m = dressed(l[j], l[i], z[j] / z[i], q, conv, FactorSide::Right, trunc)?;
        steps.push(OpStep::TwoSite(TwoSiteOperator::new((j, i), m)));
    }
    steps.push(OpStep::Diagonal {
        leg: j,
        diag: kappa_half_h(l[j], params.kappa),
    });
    for i in 0..j {
        let m = dressed(l[j], l[i], p * z[j] / z[i], q, conv, FactorSide::Left, trunc)?;
        steps.push(OpStep::TwoSite(TwoSiteOperator::new((j, i), m)));
    }
    Ok(CompositeOperator { steps })
}

/// Result of one qKZ residual measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QkzReport {
    pub site: usize,
    pub residual: f64,
    pub psi_norm: f64,
    pub radii: Vec<f64>,
    pub shifted_radii: Vec<f64>,
}

/// max_i |Psi(.., p z_j, ..) - K_j Psi(z)|_i / max_i |Psi(z)|_i.
pub fn qkz_residual(j: usize, params: &ModelParams, z: &[C64], w: &EllipticW, settings: &IntegralSettings, conv: Convention, trunc: &TruncationPolicy) -> Result<QkzReport> {
    let base = psi(params, z, w, settings, trunc)?;
    let mut zs = z.to_vec();
    zs[j] *= params.p;
    let shifted = psi(params, &zs, w, settings, trunc)?;
    let k = qkz_rhs_operator(j, z, params, conv, trunc)?;
    let rhs = k.apply(&base.psi)?;
    let norm = base.psi.max_norm().max(1e-30);
    let diff = shifted.psi.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, |m: f64, d| if d.is_nan() || m.is_nan() { f64::NAN } else { m.max(d) });
    Ok(QkzReport {
        site: j,
        residual: diff / norm,
        psi_norm: norm,
        radii: base.radii,
        shifted_radii: shifted.radii,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn settings(q: usize) -> IntegralSettings {
        IntegralSettings {
            grid: QuadratureGrid::new(q).unwrap(),
            policy: RadiusPolicy::Auto,
        }
    }

    #[test]
    fn declared_ratios_hold() {
        for (spins, n) in [(vec![1u32, 1], 1usize), (vec![1, 2], 2), (vec![2, 1, 1], 2)] {
            let params = ModelParams::real(0.6, 1.0, 0.3, &spins, n).unwrap();
            let w = EllipticW::build(&params).unwrap();
            let t: Vec<C64> = (0..n).map(|a| C64::new(0.3 + 0.1 * a as f64, 0.05)).collect();
            let z: Vec<C64> = (0..spins.len()).map(|j| c(1.0 - 0.2 * j as f64)).collect();
            for a in 0..n {
                let r = w.measured_t_ratio(a, &t, &z, &tp()).unwrap();
                let d = w.declared_t_ratio(a);
                assert!((r / d - one()).norm() < 1e-10, "t ratio {a}: {r} vs {d}");
            }
            for j in 0..spins.len() {
                let r = w.measured_z_ratio(j, &t, &z, &tp()).unwrap();
                let d = w.declared_z_ratio(j);
                assert!((r / d - one()).norm() < 1e-10, "z ratio {j}: {r} vs {d}");
            }
        }
    }

    #[test]
    fn zero_variables_is_prefactor() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 2], 0).unwrap();
        let w = EllipticW::build(&params).unwrap();
        assert!((w.eval(&[], &[c(1.0), c(0.5)], &tp()).unwrap() - one()).norm() < 1e-15);
        let z = [c(1.0), c(0.7)];
        let r = psi(&params, &z, &w, &settings(64), &tp()).unwrap();
        let pref = solution_prefactor(&z, &params, &tp()).unwrap().value;
        assert_eq!(r.psi.get(&[1, 2]).unwrap(), pref);
        assert_eq!(r.psi.coeffs.iter().filter(|x| x.norm() != 0.0).count(), 1);
    }

    #[test]
    fn single_site_analytic() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[2], 0).unwrap();
        let w = EllipticW::build(&params).unwrap();
        let rep = qkz_residual(0, &params, &[c(1.3)], &w, &settings(64), Convention::Consistent, &tp()).unwrap();
        assert!(rep.residual < 1e-12);
    }

    #[test]
    fn component_selection() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 1).unwrap();
        let w = EllipticW::build(&params).unwrap();
        let r = psi(&params, &[c(1.0), c(0.7)], &w, &settings(256), &tp()).unwrap();
        assert_eq!(r.psi.get(&[0, 0]).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(r.psi.get(&[1, 1]).unwrap(), C64::new(0.0, 0.0));
        assert!(r.psi.get(&[0, 1]).unwrap().norm() > 0.0);
        assert!(r.psi.get(&[1, 0]).unwrap().norm() > 0.0);
    }

    #[test]
    fn unsupported_two_variables() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 2).unwrap();
        let w = EllipticW::build(&params).unwrap();
        assert!(matches!(psi(&params, &[c(1.0), c(0.7)], &w, &settings(64), &tp()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn operator_shapes() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1], 0).unwrap();
        let k = qkz_rhs_operator(0, &[c(1.0)], &params, Convention::Consistent, &tp()).unwrap();
        assert_eq!(k.steps.len(), 1);
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 1).unwrap();
        let z = [c(1.0), c(0.7)];
        let k1 = qkz_rhs_operator(0, &z, &params, Convention::Consistent, &tp()).unwrap();
        assert!(matches!(k1.steps[0], OpStep::TwoSite(_)) && matches!(k1.steps[1], OpStep::Diagonal { .. }));
        let k2 = qkz_rhs_operator(1, &z, &params, Convention::Consistent, &tp()).unwrap();
        assert!(matches!(k2.steps[0], OpStep::Diagonal { .. }) && matches!(k2.steps[1], OpStep::TwoSite(_)));
    }

    #[test]
    fn flagship_residuals() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 1).unwrap();
        let w = EllipticW::build(&params).unwrap();
        let z = [c(1.0), c(0.7)];
        for j in 0..2 {
            let rep = qkz_residual(j, &params, &z, &w, &settings(512), Convention::Consistent, &tp()).unwrap();
            assert!(rep.residual < 1e-6, "j = {j}: {}", rep.residual);
        }
    }

    #[test]
    fn higher_spin_and_three_sites() {
        for spins in [vec![2u32, 1], vec![1, 2], vec![1, 1, 1], vec![2, 1, 1]] {
            let params = ModelParams::real(0.6, 1.0, 0.3, &spins, 1).unwrap();
            let w = EllipticW::build(&params).unwrap();
            let z: Vec<C64> = (0..spins.len()).map(|j| c(1.0 - 0.25 * j as f64)).collect();
            for j in 0..spins.len() {
                let rep = qkz_residual(j, &params, &z, &w, &settings(512), Convention::Consistent, &tp()).unwrap();
                assert!(rep.residual < 1e-6, "spins {spins:?} j = {j}: {}", rep.residual);
            }
        }
    }

    #[test]
    fn literal_convention_fails() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 1).unwrap();
        let w = EllipticW::build(&params).unwrap();
        let z = [c(1.0), c(0.7)];
        for j in 0..2 {
            let rep = qkz_residual(j, &params, &z, &w, &settings(512), Convention::Literal, &tp()).unwrap();
            assert!(rep.residual > 1e-1, "{}", rep.residual);
        }
    }

    #[test]
    fn linear_in_w() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 1).unwrap();
        let k = params.kappa;
        let w1 = EllipticW::build(&params).unwrap();
        let w2 = EllipticW::with_multipliers(&params, vec![c(0.37), one() / (k * 0.37)]).unwrap();
        let (a, b) = (C64::new(0.4, -1.2), C64::new(2.0, 0.3));
        let z = [c(1.0), c(0.7)];
        let s = settings(256);
        let p1 = psi(&params, &z, &w1, &s, &tp()).unwrap().psi;
        let p2 = psi(&params, &z, &w2, &s, &tp()).unwrap().psi;
        let p12 = psi(&params, &z, &w1.combine(a, &w2, b).unwrap(), &s, &tp()).unwrap().psi;
        for i in 0..p1.dim() {
            assert!((p12.coeffs[i] - a * p1.coeffs[i] - b * p2.coeffs[i]).norm() < 1e-12 * p12.max_norm());
        }
        let rep = qkz_residual(1, &params, &z, &w1.scaled(c(3.5)), &settings(512), Convention::Consistent, &tp()).unwrap();
        assert!(rep.residual < 1e-6);
    }

    #[test]
    fn radius_independent_psi() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 1).unwrap();
        let w = EllipticW::build(&params).unwrap();
        let z = [c(1.0), c(0.7)];
        let mk = |r: f64| IntegralSettings {
            grid: QuadratureGrid::new(512).unwrap(),
            policy: RadiusPolicy::Manual(r),
        };
        let a = psi(&params, &z, &w, &mk(0.2), &tp()).unwrap().psi;
        let b = psi(&params, &z, &w, &mk(0.3), &tp()).unwrap().psi;
        for i in 0..a.dim() {
            assert!((a.coeffs[i] - b.coeffs[i]).norm() < 1e-9 * a.max_norm());
        }
    }
}
