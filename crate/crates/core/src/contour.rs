//! One-variable contour integrals (1/2 pi i) \oint F(t) dt/t over a deformed
//! circle, realized as a trapezoid sum on |t| = r plus explicit residues.
//!
//! Integrands are products of catalogued factors so that every pole is known
//! in closed form. Each pole family carries the side of the contour it must
//! lie on. A pole that should be inside but sits outside the circle adds its
//! residue, one that should be outside but sits inside subtracts it.
//! Residues come from analytic factor removal: a vanishing factor
//! (1 - b t^m) is replaced by its linear part -m (t - c)/c.

use crate::error::{Error, Result};
use crate::params::{ipow, ModelParams, TruncationPolicy};
use crate::C64;
use serde::Serialize;
use std::f64::consts::PI;

/// A factor is treated as vanishing at a point when |1 - b c^m| is below this.
const VANISH_TOL: f64 = 1e-10;

/// Required side of a pole family relative to the contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Inside,
    Outside,
}

/// One catalogued factor of an integrand in t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Factor {
    /// (1 - a t^m)^e.
    Lin { a: C64, m: i32, e: i32, side: Side },
    /// (a t^m; base)_inf^e.
    Poch { a: C64, m: i32, e: i32, base: C64, side: Side },
    /// c t^d.
    Mono { c: C64, d: i32 },
}

impl Factor {
    /// theta(a t^m; p) = (a t^m; p)(p t^-m / a; p)(p; p); the constant (p; p)
    /// is returned separately so callers can cancel it.
    pub fn theta(a: C64, m: i32, p: C64, trunc: &TruncationPolicy) -> ([Factor; 2], C64) {
        let pp = crate::qspecial::poch_raw(p, p, trunc);
        (
            [
                Factor::Poch { a, m, e: 1, base: p, side: Side::Inside },
                Factor::Poch { a: p / a, m: -m, e: 1, base: p, side: Side::Inside },
            ],
            pp,
        )
    }
}

/// Product of factors with a constant in front.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Integrand {
    pub constant: C64,
    pub factors: Vec<Factor>,
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn tpow(t: C64, m: i32) -> C64 {
    ipow(t, m as i64)
}

/// Product over i >= 0 of (1 - x base^i)^e, skipping index `skip`.
fn poch_eval(x: C64, base: C64, e: i32, skip: Option<usize>, trunc: &TruncationPolicy) -> C64 {
    let mut acc = one();
    let mut term = x;
    let mut i = 0usize;
    while i < trunc.max_terms && term.norm() >= trunc.tail_tol {
        if Some(i) != skip {
            acc *= one() - term;
        }
        term *= base;
        i += 1;
    }
    if e == 1 {
        acc
    } else {
        ipow(acc, e as i64)
    }
}

/// A located pole of the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionPole {
    /// Integration variable index (always 0 for the one-variable engine).
    pub variable: usize,
    pub location: C64,
    /// +1 adds the residue, -1 subtracts it.
    pub orientation: i8,
}

impl Integrand {
    pub fn new(constant: C64) -> Self {
        Self { constant, factors: Vec::new() }
    }

    pub fn push(&mut self, f: Factor) -> &mut Self {
        self.factors.push(f);
        self
    }

    pub fn eval(&self, t: C64, trunc: &TruncationPolicy) -> C64 {
        let mut v = self.constant;
        for f in &self.factors {
            v *= match *f {
                Factor::Lin { a, m, e, .. } => ipow(one() - a * tpow(t, m), e as i64),
                Factor::Poch { a, m, e, base, .. } => poch_eval(a * tpow(t, m), base, e, None, trunc),
                Factor::Mono { c, d } => c * tpow(t, d),
            };
        }
        v
    }

    /// Pole locations of every negative-power factor that lie on the wrong
    /// side of the circle |t| = r.
    pub fn misplaced_poles(&self, r: f64, trunc: &TruncationPolicy) -> Result<Vec<CorrectionPole>> {
        let mut out = Vec::new();
        for f in &self.factors {
            let (a, m, e, side, base) = match *f {
                Factor::Lin { a, m, e, side } => (a, m, e, side, None),
                Factor::Poch { a, m, e, base, side } => (a, m, e, side, Some(base)),
                Factor::Mono { .. } => continue,
            };
            if e >= 0 {
                continue;
            }
            if m.abs() != 1 {
                return Err(Error::Unsupported(format!("pole family with t^{m}")));
            }
            let orientation = match side {
                Side::Inside => 1,
                Side::Outside => -1,
            };
            let wrong = |c: C64| match side {
                Side::Inside => c.norm() > r,
                Side::Outside => c.norm() < r,
            };
            // locations c_s with a base^s c^m = 1
            let loc = |s: usize| {
                let b = match base {
                    Some(bb) => a * ipow(bb, s as i64),
                    None => a,
                };
                if m == 1 {
                    one() / b
                } else {
                    b
                }
            };
            let count = match base {
                None => 1,
                Some(bb) => {
                    // families running the wrong way cannot be corrected finitely
                    let grows = (m == 1) == (bb.norm() < 1.0);
                    if grows == (side == Side::Inside) && bb.norm() != 1.0 {
                        return Err(Error::Infeasible(format!(
                            "pole family a = {a}, m = {m} accumulates on the wrong side"
                        )));
                    }
                    trunc.max_terms
                }
            };
            for s in 0..count {
                let c = loc(s);
                if wrong(c) {
                    out.push(CorrectionPole { variable: 0, location: c, orientation });
                } else if base.is_some() {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Moduli of the first `depth` poles of every family.
    fn pole_moduli(&self, depth: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for f in &self.factors {
            let (a, m, e, base) = match *f {
                Factor::Lin { a, m, e, .. } => (a, m, e, None),
                Factor::Poch { a, m, e, base, .. } => (a, m, e, Some(base)),
                Factor::Mono { .. } => continue,
            };
            if e >= 0 || a.norm() == 0.0 {
                continue;
            }
            let n = if base.is_some() { depth } else { 1 };
            for s in 0..n {
                let b = a * base.map(|bb| ipow(bb, s as i64)).unwrap_or(one());
                let c = if m == 1 { 1.0 / b.norm() } else { b.norm() };
                if c.is_finite() && c > 0.0 {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Residue of F(t)/t at a simple pole c, by factor removal.
    pub fn residue(&self, c: C64, trunc: &TruncationPolicy) -> Result<C64> {
        let mut order = 0i32;
        let mut lead = one();
        let mut rest = self.constant;
        for f in &self.factors {
            match *f {
                Factor::Lin { a, m, e, .. } => {
                    let v = one() - a * tpow(c, m);
                    if v.norm() < VANISH_TOL {
                        order += e;
                        lead *= ipow(C64::new(-m as f64, 0.0) / c, e as i64);
                    } else {
                        rest *= ipow(v, e as i64);
                    }
                }
                Factor::Poch { a, m, e, base, .. } => {
                    let x = a * tpow(c, m);
                    let mut skip = None;
                    let mut term = x;
                    let mut i = 0usize;
                    while i < trunc.max_terms && term.norm() >= trunc.tail_tol {
                        if (one() - term).norm() < VANISH_TOL {
                            skip = Some(i);
                            break;
                        }
                        term *= base;
                        i += 1;
                    }
                    if skip.is_some() {
                        order += e;
                        lead *= ipow(C64::new(-m as f64, 0.0) / c, e as i64);
                    }
                    rest *= poch_eval(x, base, e, skip, trunc);
                }
                Factor::Mono { c: k, d } => rest *= k * tpow(c, d),
            }
        }
        match order {
            o if o >= 0 => Ok(C64::new(0.0, 0.0)),
            -1 => Ok(lead * rest / c),
            o => Err(Error::NonSimplePole {
                order: -o,
                location: format!("{c}"),
            }),
        }
    }
}

/// Equally spaced nodes on a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub points: usize,
}

impl QuadratureGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points < 64 || !points.is_power_of_two() {
            return Err(Error::ParameterDomain(format!("quadrature points {points} must be a power of two >= 64")));
        }
        Ok(Self { points })
    }

    /// Nodes r exp(2 pi i (k + 1/2)/Q); the half offset keeps nodes off the
    /// real axis where catalogued poles typically sit.
    pub fn nodes(&self, r: f64) -> impl Iterator<Item = C64> + '_ {
        let q = self.points as f64;
        (0..self.points).map(move |k| C64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / q))
    }
}

/// Differences below this times the summed magnitudes are roundoff.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// Pole-free annuli narrower than this in log-modulus converge too slowly
/// to be preferred by the automatic radius choice.
const MIN_LOG_GAP: f64 = 0.05;

/// How the circle radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadiusPolicy {
    /// Geometric mean of the separation window; infeasible if it is empty.
    GeometricMean,
    /// Geometric mean if the window is nonempty. Otherwise a radius between
    /// pole moduli: gaps of at least MIN_LOG_GAP first, then the fewest
    /// misplaced poles, then the widest gap.
    Auto,
    Manual(f64),
}

impl std::str::FromStr for RadiusPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric-mean" => Ok(Self::GeometricMean),
            "auto" => Ok(Self::Auto),
            _ => {
                let r = s
                    .strip_prefix("manual:")
                    .and_then(|x| x.parse::<f64>().ok())
                    .filter(|r| *r > 0.0)
                    .ok_or_else(|| Error::Config(format!("bad radius policy {s:?}")))?;
                Ok(Self::Manual(r))
            }
        }
    }
}

/// A planned circle with the residue corrections it needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourSpec {
    pub radius: f64,
    pub corrections: Vec<CorrectionPole>,
    /// Human-readable record of the inequalities that were checked.
    pub certificate: Vec<String>,
}

/// The separation window max_j |p q^-l_j z_j| < r < min_j |q^l_j z_j|.
pub fn window(params: &ModelParams, z: &[C64]) -> (f64, f64) {
    let (q, p) = (params.q, params.p);
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for (&zj, &l) in z.iter().zip(&params.spins) {
        if l == 0 {
            continue;
        }
        lo = lo.max((p * ipow(q, -(l as i64)) * zj).norm());
        hi = hi.min((ipow(q, l as i64) * zj).norm());
    }
    (lo, hi)
}

/// Radius and s = 0 corrections t = q^-l_j z_j for the integrals over t.
pub fn plan_contour(params: &ModelParams, z: &[C64], policy: RadiusPolicy) -> Result<ContourSpec> {
    params.require_contour_feasible()?;
    if z.len() != params.n_sites() {
        return Err(Error::Shape(format!("plan_contour: {} z for {} sites", z.len(), params.n_sites())));
    }
    let (lo, hi) = window(params, z);
    let mut certificate = vec![format!("window {lo:.6e} < r < {hi:.6e}")];
    let radius = match policy {
        RadiusPolicy::Manual(r) => r,
        _ if hi.is_infinite() => 1.0,
        _ if lo < hi => (lo * hi).sqrt(),
        RadiusPolicy::GeometricMean => {
            return Err(Error::Infeasible(format!("empty window: {lo:.6e} >= {hi:.6e}")));
        }
        RadiusPolicy::Auto => {
            certificate.push("window empty; radius from pole gaps".into());
            return Ok(ContourSpec { radius: f64::NAN, corrections: Vec::new(), certificate });
        }
    };
    certificate.push(format!("r = {radius:.6e}"));
    let corrections = z
        .iter()
        .zip(&params.spins)
        .filter(|(_, &l)| l != 0)
        .map(|(&zj, &l)| ipow(params.q, -(l as i64)) * zj)
        .filter(|c| c.norm() > radius)
        .flat_map(|c| (0..params.n_vars).map(move |a| CorrectionPole { variable: a, location: c, orientation: 1 }))
        .collect();
    Ok(ContourSpec { radius, corrections, certificate })
}

/// Plan a contour for a concrete integrand: pick the radius, then list every
/// misplaced pole.
pub fn plan_for(f: &Integrand, radius_hint: Option<f64>, policy: RadiusPolicy, trunc: &TruncationPolicy) -> Result<ContourSpec> {
    let mut certificate = Vec::new();
    let radius = match (policy, radius_hint) {
        (RadiusPolicy::Manual(r), _) => r,
        (_, Some(r)) if r.is_finite() && r > 0.0 => r,
        (RadiusPolicy::GeometricMean, _) => {
            return Err(Error::Infeasible("no feasible separation window".into()));
        }
        _ => {
            // usable gaps first, then fewest corrections, then widest gap
            let mut m = f.pole_moduli(4);
            m.sort_by(f64::total_cmp);
            m.dedup_by(|a, b| (*a / *b - 1.0).abs() < 1e-12);
            if m.is_empty() {
                1.0
            } else {
                let mut cands: Vec<(f64, f64)> = m.windows(2).map(|w| ((w[1] / w[0]).ln(), (w[0] * w[1]).sqrt())).collect();
                cands.push((1.0, m[0] * 0.5));
                cands.push((1.0, m[m.len() - 1] * 2.0));
                let mut best: Option<((bool, usize, f64), f64)> = None;
                for (gap, r) in cands {
                    let Ok(c) = f.misplaced_poles(r, trunc) else { continue };
                    let key = (gap < MIN_LOG_GAP, c.len(), -gap);
                    if best.as_ref().is_none_or(|(k, _)| key.partial_cmp(k) == Some(std::cmp::Ordering::Less)) {
                        best = Some((key, r));
                    }
                }
                let ((_, n, neg_gap), r) = best.ok_or_else(|| Error::Infeasible("no radius with finitely many corrections".into()))?;
                let gap = -neg_gap;
                certificate.push(format!("{n} corrections, log-gap {gap:.3}"));
                r
            }
        }
    };
    certificate.push(format!("r = {radius:.6e}"));
    let corrections = f.misplaced_poles(radius, trunc)?;
    for c in &corrections {
        certificate.push(format!("correction {:+} at {}", c.orientation, c.location));
    }
    Ok(ContourSpec { radius, corrections, certificate })
}

/// (1/2 pi i) \oint F dt/t over the deformed circle.
pub fn integrate(f: &Integrand, spec: &ContourSpec, grid: &QuadratureGrid, trunc: &TruncationPolicy) -> Result<C64> {
    Ok(integrate_scaled(f, spec, grid, trunc)?.0)
}

/// The integral plus mean |F| on the circle and the residue magnitudes,
/// which set the roundoff floor of the result.
fn integrate_scaled(f: &Integrand, spec: &ContourSpec, grid: &QuadratureGrid, trunc: &TruncationPolicy) -> Result<(C64, f64)> {
    let q = grid.points as f64;
    let mut acc = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for t in grid.nodes(spec.radius) {
        let v = f.eval(t, trunc);
        acc += v;
        scale += v.norm();
    }
    acc /= q;
    scale /= q;
    for c in &spec.corrections {
        let res = f.residue(c.location, trunc)?;
        acc += res * c.orientation as f64;
        scale += res.norm();
    }
    if !acc.is_finite() {
        return Err(Error::NonFinite(format!("contour integral at r = {:e}", spec.radius)));
    }
    Ok((acc, scale))
}

/// Integrate at Q and 2Q and fail if the two disagree by more than `limit`
/// relative to the larger magnitude.
pub fn integrate_checked(f: &Integrand, spec: &ContourSpec, grid: &QuadratureGrid, trunc: &TruncationPolicy, limit: f64) -> Result<C64> {
    let a = integrate(f, spec, grid, trunc)?;
    let b = integrate(f, spec, &QuadratureGrid::new(grid.points * 2)?, trunc)?;
    let diff = (a - b).norm() / a.norm().max(b.norm()).max(1e-300);
    if diff > limit {
        return Err(Error::QuadratureDivergence { diff, limit });
    }
    Ok(b)
}

/// Double the grid from `grid` until two successive values agree to `rel`
/// relative to their size, or to the roundoff floor set by the magnitudes
/// being summed; fails past `max_points`. Returns the value and the number
/// of points used.
pub fn integrate_adaptive(f: &Integrand, spec: &ContourSpec, grid: &QuadratureGrid, trunc: &TruncationPolicy, rel: f64, max_points: usize) -> Result<(C64, usize)> {
    let mut g = *grid;
    let (mut prev, _) = integrate_scaled(f, spec, &g, trunc)?;
    loop {
        let next_grid = QuadratureGrid::new(g.points * 2)?;
        let (next, scale) = integrate_scaled(f, spec, &next_grid, trunc)?;
        let size = next.norm().max(prev.norm()).max(1e-300);
        let diff = (next - prev).norm() / size;
        if diff <= rel || (next - prev).norm() <= ROUNDOFF * scale {
            return Ok((next, next_grid.points));
        }
        if next_grid.points >= max_points {
            return Err(Error::QuadratureDivergence { diff, limit: rel });
        }
        g = next_grid;
        prev = next;
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub points: usize,
    pub value: C64,
    /// |I(Q) - I(Q/2)|, absent for the first row.
    pub diff: Option<f64>,
}

/// Integrate on a ladder of grids and report successive differences.
pub fn convergence_report(f: &Integrand, spec: &ContourSpec, ladder: &[usize], trunc: &TruncationPolicy) -> Result<Vec<ConvergenceRow>> {
    let mut out: Vec<ConvergenceRow> = Vec::new();
    for &q in ladder {
        let value = integrate(f, spec, &QuadratureGrid::new(q)?, trunc)?;
        let diff = out.last().map(|prev| (value - prev.value).norm());
        out.push(ConvergenceRow { points: q, value, diff });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tp() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn grid() -> QuadratureGrid {
        QuadratureGrid::new(256).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(QuadratureGrid::new(32).is_err());
        assert!(QuadratureGrid::new(100).is_err());
        assert!(QuadratureGrid::new(64).is_ok());
    }

    #[test]
    fn constant_integrand() {
        let f = Integrand::new(one());
        let spec = plan_for(&f, Some(0.7), RadiusPolicy::Auto, &tp()).unwrap();
        assert!((integrate(&f, &spec, &grid(), &tp()).unwrap() - one()).norm() < 1e-15);
    }

    #[test]
    fn single_pole_both_sides() {
        // t/(t - c) = 1/(1 - c/t): value 1 with c inside, 0 with c outside.
        let cc = C64::new(0.9, 0.4);
        let mut f = Integrand::new(one());
        f.push(Factor::Lin { a: cc, m: -1, e: -1, side: Side::Inside });
        for r in [0.3, 2.0] {
            let spec = plan_for(&f, Some(r), RadiusPolicy::Auto, &tp()).unwrap();
            assert!((integrate(&f, &spec, &grid(), &tp()).unwrap() - one()).norm() < 1e-13, "r = {r}");
        }
        let mut g = Integrand::new(one());
        g.push(Factor::Lin { a: cc, m: -1, e: -1, side: Side::Outside });
        for r in [0.3, 2.0] {
            let spec = plan_for(&g, Some(r), RadiusPolicy::Auto, &tp()).unwrap();
            assert!(integrate(&g, &spec, &grid(), &tp()).unwrap().norm() < 1e-13, "r = {r}");
        }
    }

    #[test]
    fn residue_by_factor_removal() {
        // 1/(1 - t/c): Res_{t=c} [f/t] = -1.
        let cc = C64::new(0.5, -0.2);
        let mut f = Integrand::new(one());
        f.push(Factor::Lin { a: one() / cc, m: 1, e: -1, side: Side::Outside });
        assert!((f.residue(cc, &tp()).unwrap() + one()).norm() < 1e-14);
        // double pole is rejected
        f.push(Factor::Lin { a: one() / cc, m: 1, e: -1, side: Side::Outside });
        assert!(matches!(f.residue(cc, &tp()), Err(Error::NonSimplePole { order: 2, .. })));
    }

    #[test]
    fn pochhammer_family_radius_independent() {
        // 1/((x t; p)(p y / t; p)) with outside poles p^-s/x and inside p^{s+1} y.
        let p = c(0.05);
        let mut f = Integrand::new(one());
        f.push(Factor::Poch { a: c(1.0 / 0.8), m: 1, e: -1, base: p, side: Side::Outside });
        f.push(Factor::Poch { a: p * 3.0, m: -1, e: -1, base: p, side: Side::Inside });
        f.push(Factor::Mono { c: one(), d: 1 });
        let mut vals = Vec::new();
        for r in [0.02, 0.3, 5.0] {
            let spec = plan_for(&f, Some(r), RadiusPolicy::Auto, &tp()).unwrap();
            vals.push(integrate(&f, &spec, &QuadratureGrid::new(512).unwrap(), &tp()).unwrap());
        }
        for v in &vals[1..] {
            assert!((v - vals[0]).norm() < 1e-10 * vals[0].norm(), "{vals:?}");
        }
    }

    #[test]
    fn wrong_way_family_is_infeasible() {
        let mut f = Integrand::new(one());
        f.push(Factor::Poch { a: c(2.0), m: 1, e: -1, base: c(0.1), side: Side::Inside });
        assert!(matches!(f.misplaced_poles(1.0, &tp()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn plan_contour_example_window() {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 1).unwrap();
        let (lo, hi) = window(&params, &[c(1.0), c(0.7)]);
        assert!((lo - 0.0778).abs() < 1e-3 && (hi - 0.42).abs() < 1e-12);
        let spec = plan_contour(&params, &[c(1.0), c(0.7)], RadiusPolicy::GeometricMean).unwrap();
        assert!(spec.radius > lo && spec.radius < hi);
        assert_eq!(spec.corrections.len(), 2);
        let zero = ModelParams::real(0.6, 1.0, 0.3, &[0, 0], 1).unwrap();
        let spec = plan_contour(&zero, &[c(1.0), c(0.7)], RadiusPolicy::GeometricMean).unwrap();
        assert_eq!(spec.radius, 1.0);
        assert!(spec.corrections.is_empty());
        let bad = ModelParams::real(0.6, -1.5, 0.3, &[1, 1], 1).unwrap();
        assert!(matches!(plan_contour(&bad, &[c(1.0), c(0.7)], RadiusPolicy::GeometricMean), Err(Error::Infeasible(_))));
    }

    #[test]
    fn convergence_table() {
        let f = Integrand::new(one());
        let spec = plan_for(&f, Some(1.0), RadiusPolicy::Auto, &tp()).unwrap();
        let rows = convergence_report(&f, &spec, &[64, 128, 256], &tp()).unwrap();
        assert!(rows[1..].iter().all(|r| r.diff == Some(0.0)));
        // a pole 0.01 away from the circle converges slowly
        let mut g = Integrand::new(one());
        g.push(Factor::Lin { a: c(1.0 / 1.01), m: 1, e: -1, side: Side::Outside });
        let spec = plan_for(&g, Some(1.0), RadiusPolicy::Auto, &tp()).unwrap();
        let rows = convergence_report(&g, &spec, &[64, 128, 256], &tp()).unwrap();
        assert!(rows[2].diff.unwrap() > 1e-3);
        let mut h = Integrand::new(one());
        h.push(Factor::Lin { a: c(0.5), m: 1, e: -1, side: Side::Outside });
        let rows = convergence_report(&h, &spec, &[64, 128, 256], &tp()).unwrap();
        assert!(rows[1].diff.unwrap() < 1e-15);
    }

    #[test]
    fn radius_policy_parse() {
        assert_eq!("auto".parse::<RadiusPolicy>().unwrap(), RadiusPolicy::Auto);
        assert_eq!("manual:0.25".parse::<RadiusPolicy>().unwrap(), RadiusPolicy::Manual(0.25));
        assert!("manual:-1".parse::<RadiusPolicy>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn rational_radius_independence(cr in 0.2f64..3.0, ci in -1.0f64..1.0, dr in 0.2f64..3.0, r1 in 0.1f64..4.0, r2 in 0.1f64..4.0) {
            // (1 - d/t)/(1 - c/t) with c inside: exact value 1 (residue at 0 plus c).
            let cc = C64::new(cr, ci);
            let mut f = Integrand::new(one());
            f.push(Factor::Lin { a: cc, m: -1, e: -1, side: Side::Inside });
            f.push(Factor::Lin { a: c(dr), m: -1, e: 1, side: Side::Inside });
            let near = |r: f64| (cc.norm() / r - 1.0).abs() < 0.05;
            prop_assume!(!near(r1) && !near(r2));
            let g = QuadratureGrid::new(1024).unwrap();
            let a = integrate(&f, &plan_for(&f, Some(r1), RadiusPolicy::Auto, &tp()).unwrap(), &g, &tp()).unwrap();
            let b = integrate(&f, &plan_for(&f, Some(r2), RadiusPolicy::Auto, &tp()).unwrap(), &g, &tp()).unwrap();
            prop_assert!((a - b).norm() < 1e-9);
            prop_assert!((a - one()).norm() < 1e-9);
        }
    }
}
