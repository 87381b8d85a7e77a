//! Brute-force checks of the finite identities behind the closed form of the
//! integrand: q-binomial counting, antisymmetrization, the z-free sum, the
//! one-slot u-integral, the Jhat closed form, the epsilon sum and the final
//! proportionality J_(n) = const * w.
//!
//! Each check returns an [`IdentityReport`]. Identities in rational functions
//! are tested at random points. Vanishing identities are judged against the
//! largest term that entered the sum rather than against zero.
//!
//! Sign vectors eps and mu hold +1 or -1. Sites, blocks and slots are
//! 0-based; the only 1-based quantities are the positions passed to
//! [`lemma_sym`].

use crate::contour::{integrate_adaptive, plan_for, Factor, Integrand, QuadratureGrid, RadiusPolicy, Side};
use crate::error::{Error, Result};
use crate::params::{cpow, ipow, ModelParams, TruncationPolicy};
use crate::qspecial::{qbinom, qfact};
use crate::weight::{enumerate_partitions, phase_phi, theorem_f, weight_w, xi_product, CompensatedSum, Mode, WeightIndex};
use crate::C64;
use itertools::Itertools;
use num_complex::Complex;
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;
use twofloat::TwoFloat;

pub const TOL_COMBI: f64 = 1e-10;
pub const TOL_SYM: f64 = 1e-9;
pub const TOL_Z: f64 = 1e-9;
pub const TOL_Z_SHIFT: f64 = 1e-10;
pub const TOL_VANISH: f64 = 1e-8;
pub const TOL_INTEGRAL: f64 = 1e-8;
pub const TOL_JHAT: f64 = 1e-9;
pub const TOL_CONST: f64 = 1e-8;
pub const TOL_RATIO: f64 = 1e-9;
pub const TOL_THEOREM: f64 = 1e-8;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn sign(k: usize) -> C64 {
    if k.is_multiple_of(2) {
        one()
    } else {
        c(-1.0)
    }
}

/// Outcome of comparing two evaluations of one identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub id: String,
    pub sample: String,
    pub lhs: C64,
    pub rhs: C64,
    /// |lhs - rhs| / (|lhs| + |rhs| + scale).
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl IdentityReport {
    /// Relative comparison; `scale` is the floor added to the denominator,
    /// the largest term for vanishing identities and 1e-300 otherwise.
    pub fn compare(id: &str, sample: String, lhs: C64, rhs: C64, scale: f64, tolerance: f64) -> Self {
        let residual = (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + scale.max(1e-300));
        Self {
            id: id.to_string(),
            sample,
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual < tolerance,
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// A compensated sum that also remembers its largest term.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: CompensatedSum,
    max: f64,
}

impl Acc {
    fn add(&mut self, z: C64) {
        self.sum.add(z);
        self.max = self.max.max(z.norm());
    }

    fn value(&self) -> C64 {
        self.sum.value()
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

fn fmt_cs(v: &[C64]) -> String {
    format!("[{}]", v.iter().map(|&z| fmt_c(z)).join(", "))
}

fn check_distinct(t: &[C64]) -> Result<()> {
    for a in 0..t.len() {
        for b in a + 1..t.len() {
            if (t[a] - t[b]).norm() <= 1e-12 * (t[a].norm() + t[b].norm()) {
                return Err(Error::PoleHit(format!("t_{} = t_{}", a + 1, b + 1)));
            }
        }
    }
    Ok(())
}

fn check_signs(v: &[i32], what: &str) -> Result<()> {
    if v.iter().all(|&e| e == 1 || e == -1) {
        Ok(())
    } else {
        Err(Error::Index(format!("{what} entries must be +1 or -1")))
    }
}

/// Sign of a permutation by inversion count.
fn perm_sign(p: &[usize]) -> C64 {
    let inv = (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
    sign(inv)
}

/// Elementary symmetric polynomial e_m.
fn elementary(m: usize, t: &[C64]) -> C64 {
    let mut e = vec![zero(); m + 1];
    e[0] = one();
    for &x in t {
        for j in (1..=m).rev() {
            e[j] = e[j] + e[j - 1] * x;
        }
    }
    e[m]
}

/// Complex double-double, for brute-force sides that cancel by many digits
/// at small |q|.
type Dd = Complex<TwoFloat>;

fn dd(z: C64) -> Dd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

fn dd_int(k: i64) -> Dd {
    Complex::new(TwoFloat::from(k as f64), TwoFloat::from(0.0))
}

fn undd(z: Dd) -> C64 {
    C64::new(z.re.hi() + z.re.lo(), z.im.hi() + z.im.lo())
}

fn dd_pow(q: Dd, e: i64) -> Dd {
    let base = if e < 0 { dd_int(1) / q } else { q };
    (0..e.unsigned_abs()).fold(dd_int(1), |acc, _| acc * base)
}

/// Symmetric q-binomial by q^k [n-1 k] + q^{k-n} [n-1 k-1], division free.
fn dd_qbinom(n: usize, k: usize, q: Dd) -> Dd {
    let mut row = vec![dd_int(1)];
    for m in 1..=n {
        let mut next = vec![dd_int(0); m + 1];
        for j in 0..=m {
            let up = if j < m { dd_pow(q, j as i64) * row[j] } else { dd_int(0) };
            let left = if j > 0 { dd_pow(q, j as i64 - m as i64) * row[j - 1] } else { dd_int(0) };
            next[j] = up + left;
        }
        row = next;
    }
    row.get(k).copied().unwrap_or(dd_int(0))
}

fn dd_sign(p: &[usize]) -> Dd {
    if perm_sign(p).re > 0.0 {
        dd_int(1)
    } else {
        dd_int(-1)
    }
}

// ---------------------------------------------------------------- counting

/// Sum over m-subsets A of {0..n-1} of prod_{i<j, i in A, j not in A} q^2
/// against q^{m(n-m)} [n m].
pub fn lemma_combi_i(n: usize, m: usize, q: C64) -> Result<IdentityReport> {
    if m > n || n > 10 {
        return Err(Error::Index(format!("need 0 <= m <= n <= 10, got n = {n}, m = {m}")));
    }
    let mut acc = Acc::default();
    for a in (0..n).combinations(m) {
        let mut ina = vec![false; n];
        a.iter().for_each(|&i| ina[i] = true);
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| ina[i] && !ina[j]).count();
        acc.add(ipow(q, 2 * pairs as i64));
    }
    let rhs = ipow(q, (m * (n - m)) as i64) * qbinom(n as i64, m as i64, q)?;
    Ok(IdentityReport::compare("q-binomial-count", format!("n={n} m={m} q={}", fmt_c(q)), acc.value(), rhs, 1e-300, TOL_COMBI))
}

/// Sum over sign patterns with m entries +1 of prod_{i<j} q^{mu_i} against
/// q^{-n(n-1)/2 + m(n-1)} [n m].
pub fn lemma_combi_ii(n: usize, m: usize, q: C64) -> Result<IdentityReport> {
    if m > n || n > 10 {
        return Err(Error::Index(format!("need 0 <= m <= n <= 10, got n = {n}, m = {m}")));
    }
    let mut acc = Acc::default();
    for a in (0..n).combinations(m) {
        let mut e = 0i64;
        for i in 0..n {
            let mu = if a.contains(&i) { 1 } else { -1 };
            e += mu * (n - 1 - i) as i64;
        }
        acc.add(ipow(q, e));
    }
    let (ni, mi) = (n as i64, m as i64);
    let rhs = ipow(q, -ni * (ni - 1) / 2 + mi * (ni - 1)) * qbinom(ni, mi, q)?;
    Ok(IdentityReport::compare("q-binomial-signs", format!("n={n} m={m} q={}", fmt_c(q)), acc.value(), rhs, 1e-300, TOL_COMBI))
}

/// Antisymmetrization, summed in double-double, of t_{s(i_1)}..t_{s(i_m)} prod_{a<b}(t_{s(b)} - q^-2 t_{s(a)})
/// against q^{-m(n+1) - n(n-1)/2 + 2 sum i_j} [m]! [n-m]! e_m(t) prod_{a<b}(t_b - t_a).
/// Positions are 1-based and strictly increasing.
pub fn lemma_sym(positions: &[usize], t: &[C64], q: C64) -> Result<IdentityReport> {
    let n = t.len();
    if n > 6 {
        return Err(Error::Index(format!("n = {n} exceeds 6")));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) || positions.iter().any(|&i| i == 0 || i > n) {
        return Err(Error::Index(format!("positions {positions:?} must increase within 1..={n}")));
    }
    let q2 = dd_pow(dd(q), -2);
    let td: Vec<Dd> = t.iter().map(|&x| dd(x)).collect();
    let mut lhs = dd_int(0);
    for p in (0..n).permutations(n) {
        let mut v = dd_sign(&p);
        for &i in positions {
            v *= td[p[i - 1]];
        }
        for a in 0..n {
            for b in a + 1..n {
                v *= td[p[b]] - q2 * td[p[a]];
            }
        }
        lhs += v;
    }
    let m = positions.len() as i64;
    let ni = n as i64;
    let sum_i: i64 = positions.iter().map(|&i| i as i64).sum();
    let mut rhs = ipow(q, -m * (ni + 1) - ni * (ni - 1) / 2 + 2 * sum_i) * qfact(m, q)? * qfact(ni - m, q)? * elementary(positions.len(), t);
    for a in 0..n {
        for b in a + 1..n {
            rhs *= t[b] - t[a];
        }
    }
    let sample = format!("n={n} positions={positions:?} q={}", fmt_c(q));
    Ok(IdentityReport::compare("antisymmetrization", sample, undd(lhs), rhs, 1e-300, TOL_SYM))
}

/// Left side of the z-free identity, summed in double-double: sum over s and permutations of
/// (-1)^s q^{-s(n-1)} [n s] prod_{i<=s}(z - q^l t) prod_{i>s}(z - q^-l t)
/// prod_{a<b} (t_b - q^-2 t_a)/(t_b - t_a), all t permuted.
pub fn lemma_z_lhs(l: u32, z: C64, t: &[C64], q: C64) -> Result<(C64, f64)> {
    let n = t.len();
    if n == 0 || n > l as usize || l > 6 {
        return Err(Error::Index(format!("need 1 <= n <= l <= 6, got n = {n}, l = {l}")));
    }
    check_distinct(t)?;
    let qd = dd(q);
    let (ql, qml, q2) = (dd_pow(qd, l as i64), dd_pow(qd, -(l as i64)), dd_pow(qd, -2));
    let (zd, td): (Dd, Vec<Dd>) = (dd(z), t.iter().map(|&x| dd(x)).collect());
    let mut sum = dd_int(0);
    let mut max: f64 = 0.0;
    for s in 0..=n {
        let sgn = if s % 2 == 0 { dd_int(1) } else { dd_int(-1) };
        let coef = sgn * dd_pow(qd, -((s * (n - 1)) as i64)) * dd_qbinom(n, s, qd);
        for p in (0..n).permutations(n) {
            let mut v = coef;
            for (i, &pi) in p.iter().enumerate() {
                v *= if i < s { zd - ql * td[pi] } else { zd - qml * td[pi] };
            }
            for a in 0..n {
                for b in a + 1..n {
                    v = v * (td[p[b]] - q2 * td[p[a]]) / (td[p[b]] - td[p[a]]);
                }
            }
            max = max.max(undd(v).norm());
            sum += v;
        }
    }
    Ok((undd(sum), max))
}

/// The z-free identity against (-1)^n q^{-ln - n(n-1)/2} prod_{i<n}(1 - q^{2(l-i)}) [n]! t_1..t_n.
pub fn lemma_z(l: u32, z: C64, t: &[C64], q: C64) -> Result<IdentityReport> {
    let (lhs, max) = lemma_z_lhs(l, z, t, q)?;
    let (n, li) = (t.len() as i64, l as i64);
    let mut rhs = sign(t.len()) * ipow(q, -li * n - n * (n - 1) / 2) * qfact(n, q)?;
    for i in 0..n {
        rhs *= one() - ipow(q, 2 * (li - i));
    }
    for &x in t {
        rhs *= x;
    }
    let sample = format!("n={n} l={l} z={} q={}", fmt_c(z), fmt_c(q));
    Ok(IdentityReport::compare("z-free-sum", sample, lhs, rhs, 1e-300, TOL_Z).with_note(format!("largest term / |lhs| = {:.1e}", max / lhs.norm())))
}

/// The left side of the z-free identity at two values of z.
pub fn lemma_z_shift(l: u32, z1: C64, z2: C64, t: &[C64], q: C64) -> Result<IdentityReport> {
    let (a, _) = lemma_z_lhs(l, z1, t, q)?;
    let (b, _) = lemma_z_lhs(l, z2, t, q)?;
    let sample = format!("n={} l={l} z={}, {} q={}", t.len(), fmt_c(z1), fmt_c(z2), fmt_c(q));
    Ok(IdentityReport::compare("z-independence", sample, a, b, 1e-300, TOL_Z_SHIFT))
}

// ---------------------------------------------------------------- epsilon sum

/// Sum over eps in {+-1}^N of prod eps prod_{a<b}(q^{eps_b} t_b - q^{eps_a} t_a)
/// prod_i [(1 - q^{-1-eps_{b_i}}) prod_{b != b_i}(t_{b_i} - q^{-1-eps_b} t_b)]
/// for distinct 0-based indices b_i. It equals
/// (1 - q^-2)^N q^{N(N-1)/2} prod_{a<b}(t_b - t_a) prod_i prod_{b != b_i}(t_{b_i} - q^-2 t_b)
/// when every index is used and vanishes otherwise.
pub fn eps_sum_identity(b_idx: &[usize], n_vars: usize, q: C64, t: &[C64]) -> Result<IdentityReport> {
    if t.len() != n_vars || n_vars > 5 {
        return Err(Error::Index(format!("need N = |t| <= 5, got N = {n_vars}, |t| = {}", t.len())));
    }
    if b_idx.iter().any(|&b| b >= n_vars) || b_idx.iter().duplicates().next().is_some() {
        return Err(Error::Index(format!("indices {b_idx:?} must be distinct and below {n_vars}")));
    }
    let mut acc = Acc::default();
    for eps in sign_vectors(n_vars) {
        let mut v = eps.iter().map(|&e| c(e as f64)).product::<C64>();
        for a in 0..n_vars {
            for b in a + 1..n_vars {
                v *= ipow(q, eps[b] as i64) * t[b] - ipow(q, eps[a] as i64) * t[a];
            }
        }
        for &bi in b_idx {
            v *= one() - ipow(q, -1 - eps[bi] as i64);
            for b in (0..n_vars).filter(|&b| b != bi) {
                v *= t[bi] - ipow(q, -1 - eps[b] as i64) * t[b];
            }
        }
        acc.add(v);
    }
    let rhs = if b_idx.len() == n_vars {
        let mut r = ipow(one() - ipow(q, -2), n_vars as i64) * ipow(q, (n_vars * n_vars.saturating_sub(1) / 2) as i64);
        for a in 0..n_vars {
            for b in a + 1..n_vars {
                r *= t[b] - t[a];
            }
        }
        for &bi in b_idx {
            for b in (0..n_vars).filter(|&b| b != bi) {
                r *= t[bi] - ipow(q, -2) * t[b];
            }
        }
        r
    } else {
        zero()
    };
    let sample = format!("N={n_vars} b={b_idx:?} q={}", fmt_c(q));
    Ok(IdentityReport::compare("epsilon-sum", sample, acc.value(), rhs, acc.max, TOL_VANISH))
}

// ---------------------------------------------------------------- slots

/// Block data of a component-mode index together with the sample point.
struct Ctx<'a> {
    params: &'a ModelParams,
    ks: &'a [usize],
    ns: &'a [usize],
    t: &'a [C64],
    z: &'a [C64],
    /// (block, position within block) in lexicographic order.
    slots: Vec<(usize, usize)>,
}

impl<'a> Ctx<'a> {
    fn new(idx: &'a WeightIndex, params: &'a ModelParams, t: &'a [C64], z: &'a [C64]) -> Result<Self> {
        if idx.mode != Mode::Component {
            return Err(Error::Index("expected a component-mode index".into()));
        }
        if idx.spins != params.spins || z.len() != params.n_sites() {
            return Err(Error::Shape("index, spins and z disagree".into()));
        }
        let slots = idx.multiplicities.iter().enumerate().flat_map(|(i, &n)| (0..n).map(move |j| (i, j))).collect();
        Ok(Self {
            params,
            ks: &idx.positions,
            ns: &idx.multiplicities,
            t,
            z,
            slots,
        })
    }

    fn q(&self) -> C64 {
        self.params.q
    }

    fn qp(&self, e: C64) -> C64 {
        cpow(self.params.q, e)
    }

    fn l(&self, j: usize) -> i64 {
        self.params.spins[j] as i64
    }

    fn r(&self) -> usize {
        self.ks.len()
    }

    /// j < slot: j < k(block), or j = k(block) and m_block < position + 1.
    fn before(&self, j: usize, slot: (usize, usize), m: &[usize]) -> bool {
        let (b, pos) = slot;
        j < self.ks[b] || (j == self.ks[b] && m[b] < pos + 1)
    }

    /// j > slot: j > k(block), or j = k(block) and m_block >= position + 1.
    fn after(&self, j: usize, slot: (usize, usize), m: &[usize]) -> bool {
        let (b, pos) = slot;
        j > self.ks[b] || (j == self.ks[b] && m[b] > pos)
    }

    /// The z-ratio (z_j - q^-l t_b)/(z_j - q^l t_b).
    fn z_ratio(&self, j: usize, tb: C64) -> C64 {
        let l = self.l(j);
        (self.z[j] - ipow(self.q(), -l) * tb) / (self.z[j] - ipow(self.q(), l) * tb)
    }
}

/// The u-integrand Ghat for sign vectors (eps) over t, (mu) over slots and
/// block cut points (m), at the slot variables u.
#[allow(clippy::too_many_arguments)]
pub fn ghat_integrand(idx: &WeightIndex, params: &ModelParams, eps: &[i32], mu: &[i32], m: &[usize], t: &[C64], z: &[C64], u: &[C64]) -> Result<C64> {
    let x = Ctx::new(idx, params, t, z)?;
    check_signs(eps, "eps")?;
    check_signs(mu, "mu")?;
    if eps.len() != t.len() || mu.len() != x.slots.len() || u.len() != x.slots.len() || m.len() != x.r() {
        return Err(Error::Shape("ghat: eps, mu, u or m has the wrong length".into()));
    }
    let (q, k, ll) = (params.q, params.k, params.l_label);
    let pole = |den: C64, what: String| if den.norm() < 1e-14 { Err(Error::PoleHit(what)) } else { Ok(()) };
    let mut v = one();
    for (a, &slot) in x.slots.iter().enumerate() {
        let (mua, ua) = (mu[a] as f64, u[a]);
        v *= cpow(q, ll * mua);
        for j in 0..params.n_sites() {
            let l = x.l(j) as f64;
            if x.before(j, slot, m) {
                let den = z[j] - x.qp(l - k - 2.0) * ua;
                pole(den, format!("u_{} at the z_{} pole", a + 1, j + 1))?;
                v *= (z[j] - x.qp(mua * l - k - 2.0) * ua) / den;
            }
            if x.after(j, slot, m) {
                let den = ua - x.qp(l + k + 2.0) * z[j];
                pole(den, format!("u_{} at the z_{} pole", a + 1, j + 1))?;
                v *= x.qp(c(mua * l)) * (ua - x.qp(-mua * l + k + 2.0) * z[j]) / den;
            }
        }
        for (b, &tb) in t.iter().enumerate() {
            let den = ua - x.qp(-mua * (k + 2.0)) * tb;
            pole(den, format!("u_{} at the t_{} pole", a + 1, b + 1))?;
            v *= ipow(q, -mu[a] as i64) * (ua - x.qp(-mua * (k + 1.0) - eps[b] as f64) * tb) / den;
        }
        for cc in a + 1..x.slots.len() {
            let den = ua - ipow(q, -2) * u[cc];
            pole(den, format!("u_{} = q^-2 u_{}", a + 1, cc + 1))?;
            v *= (ipow(q, -mu[a] as i64) * ua - ipow(q, -mu[cc] as i64) * u[cc]) / den;
        }
    }
    Ok(v)
}

/// The t-factor prod_{a<b}(q^{eps_b} t_b - q^{eps_a} t_a)/(t_b - q^-2 t_a).
pub fn eps_t_factor(eps: &[i32], t: &[C64], q: C64) -> C64 {
    let mut v = one();
    for a in 0..t.len() {
        for b in a + 1..t.len() {
            v *= (ipow(q, eps[b] as i64) * t[b] - ipow(q, eps[a] as i64) * t[a]) / (t[b] - ipow(q, -2) * t[a]);
        }
    }
    v
}

/// Closed form of the iterated u-integral of Ghat: a sum over splittings of
/// the mu = -1 slots of each block into C and D and over assignments of t
/// indices to the D slots (repeats allowed; they vanish by themselves).
fn u_integral_closed(x: &Ctx, eps: &[i32], mu: &[i32], m: &[usize]) -> C64 {
    let q = x.q();
    let ll = x.params.l_label;
    let n_t = x.t.len();
    let r = x.r();
    let sl = &x.slots;
    let a: Vec<usize> = (0..r).map(|i| sl.iter().zip(mu).filter(|(s, &mu)| s.0 == i && mu == -1).count()).collect();
    let mut pre = x.qp((ll - n_t as f64) * (0..r).map(|i| x.ns[i] as f64 - 2.0 * a[i] as f64).sum::<f64>());
    for (s_idx, &slot) in sl.iter().enumerate() {
        for j in 0..x.params.n_sites() {
            if x.after(j, slot, m) {
                pre *= ipow(q, mu[s_idx] as i64 * x.l(j));
            }
        }
        for _ in s_idx + 1..sl.len() {
            pre *= ipow(q, -mu[s_idx] as i64);
        }
    }
    let blocks: Vec<Vec<usize>> = (0..r).map(|i| (0..sl.len()).filter(|&s| sl[s].0 == i && mu[s] == -1).collect()).collect();
    let eps_pow: C64 = eps.iter().map(|&e| ipow(q, -1 - e as i64)).product();
    let mut tot = Acc::default();
    let splits: Vec<Vec<Vec<bool>>> = blocks.iter().map(|b| cartesian(vec![vec![false, true]; b.len()])).collect();
    for choice in cartesian(splits) {
        let mut cset = Vec::new();
        let mut dl: Vec<(usize, usize)> = Vec::new();
        for (i, bi) in blocks.iter().enumerate() {
            for (&s, &to_d) in bi.iter().zip(&choice[i]) {
                if to_d {
                    dl.push((i, s));
                } else {
                    cset.push(s);
                }
            }
        }
        let mut fac = ipow(eps_pow, cset.len() as i64);
        for &cs in &cset {
            for &(_, d) in &dl {
                if cs < d {
                    fac *= ipow(q, 2);
                }
            }
        }
        let mut s = Acc::default();
        for bs in assignments(n_t, dl.len()) {
            let mut v = one();
            for (pos, (&(i, slot_x), &b)) in dl.iter().zip(&bs).enumerate() {
                let tb = x.t[b];
                v *= one() - ipow(q, -1 - eps[b] as i64);
                for bb in (0..n_t).filter(|&bb| bb != b) {
                    v *= (tb - ipow(q, -1 - eps[bb] as i64) * x.t[bb]) / (tb - x.t[bb]);
                }
                for &b2 in &bs[pos + 1..] {
                    v *= (tb - x.t[b2]) / (tb - ipow(q, -2) * x.t[b2]);
                }
                for j in 0..x.ks[i] {
                    v *= x.z_ratio(j, tb);
                }
                if sl[slot_x].1 + 1 > m[i] {
                    v *= x.z_ratio(x.ks[i], tb);
                }
            }
            s.add(v);
        }
        tot.add(fac * s.value());
    }
    pre * tot.value()
}

/// Cartesian product of lists; one empty vector for zero lists.
fn cartesian<T: Clone>(lists: Vec<Vec<T>>) -> Vec<Vec<T>> {
    if lists.is_empty() {
        return vec![Vec::new()];
    }
    lists.into_iter().multi_cartesian_product().collect()
}

/// All maps {0..len-1} -> {0..n-1}, one vector per map.
fn assignments(n: usize, len: usize) -> Vec<Vec<usize>> {
    cartesian(vec![(0..n).collect(); len])
}

fn cut_points(ns: &[usize]) -> Vec<Vec<usize>> {
    cartesian(ns.iter().map(|&n| (0..=n).collect()).collect())
}

fn sign_vectors(n: usize) -> Vec<Vec<i32>> {
    cartesian(vec![vec![1, -1]; n])
}

fn slot_signs(x: &Ctx, a: &[usize]) -> Vec<Vec<i32>> {
    sign_vectors(x.slots.len())
        .into_iter()
        .filter(|mu| (0..x.r()).all(|i| x.slots.iter().zip(mu).filter(|(s, &m)| s.0 == i && m == -1).count() == a[i]))
        .collect()
}

/// Jhat summed from the u-integral closed form over (mu) and (m).
fn jhat_via_integrals(x: &Ctx, eps: &[i32], a: &[usize]) -> Result<(C64, f64)> {
    let q = x.q();
    let mut tot = Acc::default();
    let sa: usize = a.iter().sum();
    for mu in slot_signs(x, a) {
        for m in cut_points(x.ns) {
            let mut coef = sign(m.iter().sum::<usize>() + sa);
            for i in 0..x.r() {
                let (mi, ni) = (m[i] as i64, x.ns[i] as i64);
                coef *= ipow(q, mi * x.l(x.ks[i])) * ipow(q, -mi * (ni - 1)) * qbinom(ni, mi, q)?;
            }
            tot.add(coef * u_integral_closed(x, eps, &mu, &m));
        }
    }
    Ok((tot.value(), tot.max))
}

/// Which cross-block q-power the Jhat closed form carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JhatVariant {
    /// q^{-sum_s (n_s - 2 a_s) sum_{t>s} n_t}, the form that matches the integrals.
    Standard,
    /// q^{-sum_{s<t} n_s (n_t - 2 a_t)}, an alternative reading kept to show
    /// that it disagrees once two blocks are present.
    Transposed,
}

/// The closed form of Jhat_(eps)(a).
fn jhat_closed(x: &Ctx, eps: &[i32], a: &[usize], variant: JhatVariant) -> Result<C64> {
    let q = x.q();
    let ll = x.params.l_label;
    let (r, ns, ks) = (x.r(), x.ns, x.ks);
    let n_t = x.t.len();
    let diff = |s: usize| ns[s] as i64 - 2 * a[s] as i64;
    let mut pre = sign(a.iter().sum());
    let mut e = 0i64;
    for s in 0..r {
        let later_l: i64 = (ks[s] + 1..x.params.n_sites()).map(|j| x.l(j)).sum();
        e += later_l * diff(s);
    }
    pre *= ipow(q, e);
    pre *= x.qp((ll - n_t as f64) * (0..r).map(|s| diff(s) as f64).sum::<f64>());
    let cross: i64 = match variant {
        JhatVariant::Standard => (0..r).map(|s| diff(s) * ns[s + 1..].iter().sum::<usize>() as i64).sum(),
        JhatVariant::Transposed => (0..r).flat_map(|s| (s + 1..r).map(move |t| (s, t))).map(|(s, t)| ns[s] as i64 * diff(t)).sum(),
    };
    pre *= ipow(q, -cross);
    let bl: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..a[i]).map(move |j| (i, j))).collect();
    let mut tot = Acc::default();
    for bs in assignments(n_t, bl.len()) {
        let mut v = one();
        for xi in 0..bl.len() {
            for yi in 0..bl.len() {
                if bl[xi].0 < bl[yi].0 {
                    let (tb, tc) = (x.t[bs[xi]], x.t[bs[yi]]);
                    v *= (tb - tc) / (tb - ipow(q, -2) * tc);
                }
            }
        }
        for i1 in 0..r {
            let (n, ai, l, kk) = (ns[i1] as i64, a[i1] as i64, x.l(ks[i1]), ks[i1]);
            let idx: Vec<usize> = (0..bl.len()).filter(|&xi| bl[xi].0 == i1).collect();
            let mut core = one();
            for (pos, &xi) in idx.iter().enumerate() {
                let b = bs[xi];
                let tb = x.t[b];
                core *= one() - ipow(q, -1 - eps[b] as i64);
                for bb in (0..n_t).filter(|&bb| bb != b) {
                    core *= (tb - ipow(q, -1 - eps[bb] as i64) * x.t[bb]) / (tb - x.t[bb]);
                }
                for &x2 in &idx[pos + 1..] {
                    let t2 = x.t[bs[x2]];
                    core *= (tb - t2) / (tb - ipow(q, -2) * t2);
                }
                for j in 0..kk {
                    core *= x.z_ratio(j, tb);
                }
            }
            let mut sum = CompensatedSum::default();
            for s in 0..=ai {
                let cs = ipow(q, ai * (n - s - 1) - n * (n - 1) / 2) * qfact(n, q)? / (qfact(s, q)? * qfact(ai - s, q)?);
                let mut isum = CompensatedSum::default();
                for i in 0..=n - ai {
                    isum.add(sign((i + s) as usize) * ipow(q, i * (2 * l - n - ai + 1) + s) / (qfact(i, q)? * qfact(n - ai - i, q)?));
                }
                let mut zf = one();
                for &xi in &idx[s as usize..] {
                    zf *= x.z_ratio(kk, x.t[bs[xi]]);
                }
                sum.add(cs * isum.value() * zf);
            }
            v *= core * sum.value();
        }
        tot.add(v);
    }
    Ok(pre * tot.value())
}

/// J_(a) = sum over eps of prod eps times the t-factor times Jhat_(eps)(a).
fn j_total(x: &Ctx, a: &[usize], variant: JhatVariant) -> Result<(C64, f64)> {
    let n_t = x.t.len();
    let mut tot = Acc::default();
    for eps in sign_vectors(n_t) {
        let pe: f64 = eps.iter().map(|&e| e as f64).product();
        tot.add(c(pe) * eps_t_factor(&eps, x.t, x.q()) * jhat_closed(x, &eps, a, variant)?);
    }
    Ok((tot.value(), tot.max))
}

/// The constant relating J_(n) to w at the complementary index:
/// (-1)^N (1 - q^-2)^N q^{N(N-L) + N(N-1)/2 - N sum l}
/// prod_s q^{(sum_{t>s} n_t) n_s - l_{k(s)} n_s} [n_s]! prod_{i<n_s}(1 - q^{2(l_{k(s)} - i)}).
pub fn proportionality_constant(idx: &WeightIndex, params: &ModelParams) -> Result<C64> {
    let q = params.q;
    let n = idx.n_vars() as i64;
    let nf = n as f64;
    let sum_l: i64 = params.spins.iter().map(|&l| l as i64).sum();
    let mut v = sign(n as usize) * ipow(one() - ipow(q, -2), n) * cpow(q, nf * (nf - params.l_label) + c(nf * (nf - 1.0) / 2.0 - (sum_l * n) as f64));
    let ns = &idx.multiplicities;
    for s in 0..idx.r() {
        let l = params.spins[idx.positions[s]] as i64;
        let ni = ns[s] as i64;
        let later: i64 = ns[s + 1..].iter().sum::<usize>() as i64;
        v *= ipow(q, later * ni - l * ni) * qfact(ni, q)?;
        for i in 0..ni {
            v *= one() - ipow(q, 2 * (l - i));
        }
    }
    Ok(v)
}

/// The weight function in the second written form:
/// prod_{a<b}(t_b - t_a)/(t_b - q^-2 t_a) sum over blocks of
/// prod_{i<j, a in G_i, b in G_j}(t_b - q^-2 t_a)/(t_b - t_a)
/// prod_s prod_{b in G_s} t_b/(z_{k(s)} - q^l t_b) prod_{i<k(s)}(z_i - q^-l_i t_b)/(z_i - q^l_i t_b).
pub fn w_second_form(idx: &WeightIndex, t: &[C64], z: &[C64], q: C64) -> Result<C64> {
    if idx.mode != Mode::Component || t.len() != idx.n_vars() {
        return Err(Error::Index("w_second_form expects a component-mode index with N t".into()));
    }
    let n = t.len();
    let q2 = ipow(q, -2);
    let mut pre = one();
    for a in 0..n {
        for b in a + 1..n {
            pre *= (t[b] - t[a]) / (t[b] - q2 * t[a]);
        }
    }
    let mut acc = CompensatedSum::default();
    for part in enumerate_partitions(&idx.multiplicities, n)? {
        let lab = &part.labels;
        let mut v = one();
        for a in 0..n {
            for b in 0..n {
                if lab[a] < lab[b] {
                    v *= (t[b] - q2 * t[a]) / (t[b] - t[a]);
                }
            }
        }
        for (b, &tb) in t.iter().enumerate() {
            let kk = idx.positions[lab[b]];
            v *= tb / (z[kk] - ipow(q, idx.spins[kk] as i64) * tb);
            for j in 0..kk {
                let l = idx.spins[j] as i64;
                v *= (z[j] - ipow(q, -l) * tb) / (z[j] - ipow(q, l) * tb);
            }
        }
        acc.add(v);
    }
    Ok(pre * acc.value())
}

/// Second form over first form: (-1)^N q^{-sum_s n_s l_{k(s)} - sum_s n_s sum_{i<k(s)} l_i}.
/// Per factor, t/(z - q^l t) = -q^-l t/(t - q^-l z) and
/// (z - q^-l t)/(z - q^l t) = q^-l (q^-l t - z)/(t - q^-l z); the t-t factors agree.
pub fn weight_form_conversion(idx: &WeightIndex, q: C64) -> C64 {
    let mut e = 0i64;
    for (s, &kk) in idx.positions.iter().enumerate() {
        let ns = idx.multiplicities[s] as i64;
        let below: i64 = idx.spins[..kk].iter().map(|&l| l as i64).sum();
        e -= ns * (idx.spins[kk] as i64 + below);
    }
    sign(idx.n_vars()) * ipow(q, e)
}

fn sample_text(idx: &WeightIndex, params: &ModelParams, t: &[C64], z: &[C64]) -> String {
    format!(
        "spins={:?} nu={:?} q={} k={} L={} t={} z={}",
        params.spins,
        idx.nu,
        fmt_c(params.q),
        fmt_c(params.k),
        fmt_c(params.l_label),
        fmt_cs(t),
        fmt_cs(z)
    )
}

/// The two written forms of the weight function against the conversion constant.
pub fn weight_form_check(idx: &WeightIndex, params: &ModelParams, t: &[C64], z: &[C64]) -> Result<IdentityReport> {
    let second = w_second_form(idx, t, z, params.q)?;
    let first = weight_w(&idx.dual(), t, z, params.q)?;
    let rhs = weight_form_conversion(idx, params.q) * first;
    Ok(IdentityReport::compare("weight-forms", sample_text(idx, params, t, z), second, rhs, 1e-300, TOL_RATIO))
}

/// The single u-integral of Ghat against its closed form, for one block of
/// size one. The t list may be longer than one; the u-integral does not
/// care how many t there are.
#[allow(clippy::too_many_arguments)]
pub fn lemma_i_check(idx: &WeightIndex, params: &ModelParams, eps: &[i32], mu: i32, m: usize, t: &[C64], z: &[C64], grid: &QuadratureGrid, trunc: &TruncationPolicy) -> Result<IdentityReport> {
    let x = Ctx::new(idx, params, t, z)?;
    if x.r() != 1 || x.ns[0] != 1 {
        return Err(Error::Unsupported("direct u-integration needs a single block of size one".into()));
    }
    check_signs(eps, "eps")?;
    check_signs(&[mu], "mu")?;
    if eps.len() != t.len() || m > 1 {
        return Err(Error::Shape("eps must match t and m must be 0 or 1".into()));
    }
    check_distinct(t)?;
    let (q, k, ll) = (params.q, params.k, params.l_label);
    let muf = mu as f64;
    let slot = (0, 0);
    let mv = [m];
    let mut f = Integrand::new(cpow(q, ll * muf));
    for j in 0..params.n_sites() {
        let l = x.l(j) as f64;
        if x.before(j, slot, &mv) {
            // (z - alpha u)/(z - beta u), pole outside
            let (al, be) = (x.qp(muf * l - k - 2.0), x.qp(l - k - 2.0));
            f.push(Factor::Lin { a: al / z[j], m: 1, e: 1, side: Side::Inside });
            f.push(Factor::Lin { a: be / z[j], m: 1, e: -1, side: Side::Outside });
        }
        if x.after(j, slot, &mv) {
            // q^{mu l}(u - alpha z)/(u - beta z), pole inside
            let (al, be) = (x.qp(-muf * l + k + 2.0), x.qp(l + k + 2.0));
            f.constant *= x.qp(c(muf * l));
            f.push(Factor::Lin { a: al * z[j], m: -1, e: 1, side: Side::Inside });
            f.push(Factor::Lin { a: be * z[j], m: -1, e: -1, side: Side::Inside });
        }
    }
    for (b, &tb) in t.iter().enumerate() {
        let (al, be) = (x.qp(-muf * (k + 1.0) - eps[b] as f64), x.qp(-muf * (k + 2.0)));
        f.constant *= ipow(q, -mu as i64);
        f.push(Factor::Lin { a: al * tb, m: -1, e: 1, side: Side::Inside });
        f.push(Factor::Lin { a: be * tb, m: -1, e: -1, side: Side::Inside });
    }
    let spec = plan_for(&f, None, RadiusPolicy::Auto, trunc)?;
    let (lhs, points) = integrate_adaptive(&f, &spec, grid, trunc, 1e-13, 1 << 16)?;
    let rhs = u_integral_closed(&x, eps, &[mu], &mv);
    let sample = format!("{} eps={eps:?} mu={mu} m={m}", sample_text(idx, params, t, z));
    Ok(IdentityReport::compare("u-integral", sample, lhs, rhs, 1e-300, TOL_INTEGRAL).with_note(format!("r = {:.6e}, {} corrections, {points} points", spec.radius, spec.corrections.len())))
}

/// Jhat from the u-integral closed forms against the Jhat closed form.
pub fn jhat_prop_check(a: &[usize], idx: &WeightIndex, eps: &[i32], params: &ModelParams, t: &[C64], z: &[C64]) -> Result<IdentityReport> {
    let x = Ctx::new(idx, params, t, z)?;
    check_signs(eps, "eps")?;
    if t.len() > 4 || x.r() > 2 {
        return Err(Error::Index(format!("refusing N = {} with r = {} (limits 4 and 2)", t.len(), x.r())));
    }
    if a.len() != x.r() || a.iter().zip(x.ns).any(|(&ai, &n)| ai > n) || eps.len() != t.len() {
        return Err(Error::Shape("a must satisfy 0 <= a_i <= n_i and eps must match t".into()));
    }
    check_distinct(t)?;
    let (lhs, max) = jhat_via_integrals(&x, eps, a)?;
    let rhs = jhat_closed(&x, eps, a, JhatVariant::Standard)?;
    let alt = jhat_closed(&x, eps, a, JhatVariant::Transposed)?;
    // a vanishing closed form is judged against the largest term of the sum
    let scale = if rhs == zero() { max } else { 1e-300 };
    let alt_res = (lhs - alt).norm() / (lhs.norm() + alt.norm() + scale);
    let sample = format!("{} a={a:?} eps={eps:?}", sample_text(idx, params, t, z));
    Ok(IdentityReport::compare("jhat", sample, lhs, rhs, scale, TOL_JHAT).with_note(format!("transposed cross-block power: residual {alt_res:.3e}")))
}

/// J_(a) for every a: vanishing unless a = n, and J_(n) = const * w at each
/// sample, plus constancy of J_(n)/w across the samples.
pub fn mainprop_check(idx: &WeightIndex, params: &ModelParams, samples: &[(Vec<C64>, Vec<C64>)]) -> Result<Vec<IdentityReport>> {
    if idx.n_vars() > 3 {
        return Err(Error::Index(format!("refusing N = {} (limit 3)", idx.n_vars())));
    }
    let konst = proportionality_constant(idx, params)?;
    let mut out = Vec::new();
    let mut ratios = Vec::new();
    for (si, (t, z)) in samples.iter().enumerate() {
        let x = Ctx::new(idx, params, t, z)?;
        if t.len() != idx.n_vars() {
            return Err(Error::Shape(format!("sample {si}: {} t for N = {}", t.len(), idx.n_vars())));
        }
        check_distinct(t)?;
        let text = sample_text(idx, params, t, z);
        for a in cut_points(x.ns) {
            let (j, max) = j_total(&x, &a, JhatVariant::Standard)?;
            if a.as_slice() == x.ns {
                let w = weight_w(&idx.dual(), t, z, params.q)?;
                ratios.push(j / w);
                out.push(IdentityReport::compare("j-proportional", format!("{text} a={a:?}"), j, konst * w, 1e-300, TOL_CONST));
            } else if si == 0 {
                out.push(IdentityReport::compare("j-vanishing", format!("{text} a={a:?}"), j, zero(), max, TOL_VANISH));
            }
        }
    }
    for w in ratios.windows(2) {
        out.push(IdentityReport::compare("j-ratio-constant", format!("spins={:?} nu={:?}", params.spins, idx.nu), w[0], w[1], 1e-300, TOL_RATIO));
    }
    Ok(out)
}

/// The factor relating F^(nu) to J_(n) once Phi is divided out:
/// (-1)^N (q - q^-1)^{-2N} prod 1/[n_s]! prod t_a^-1 f, with
/// f = prod_{i<j}(q^k z_i)^{l_i l_j/(2(k+2))} xi(z_i/z_j) prod_i (q^k z_i)^{(L - 2N) l_i/(2(k+2))}
/// prod_a (q^-2 t_a)^{-L/(k+2)} prod_{a<b} (q^-2 t_b)^{2/(k+2)}.
/// Non-integer powers are principal, so this is meant for real positive q, z and t.
pub fn closed_form_prefactor(idx: &WeightIndex, params: &ModelParams, t: &[C64], z: &[C64], trunc: &TruncationPolicy) -> Result<C64> {
    let (q, k, ll) = (params.q, params.k, params.l_label);
    let k2 = k + 2.0;
    let n = t.len();
    let mut f = xi_product(z, params, trunc)?.value;
    let qk = cpow(q, k);
    let spins = &params.spins;
    for i in 0..spins.len() {
        let li = spins[i] as f64;
        for &lj in &spins[i + 1..] {
            f *= cpow(qk * z[i], c(li * lj as f64) / (2.0 * k2));
        }
        f *= cpow(qk * z[i], (ll - 2.0 * n as f64) * li / (2.0 * k2));
    }
    let q2 = ipow(q, -2);
    for a in 0..n {
        f *= cpow(q2 * t[a], -ll / k2);
        for b in a + 1..n {
            f *= cpow(q2 * t[b], c(2.0) / k2);
        }
    }
    let mut v = sign(n) * ipow(q - one() / q, -2 * n as i64) * f;
    for &ns in &idx.multiplicities {
        v /= qfact(ns as i64, q)?;
    }
    for &ta in t {
        v /= ta;
    }
    Ok(v)
}

/// F^(nu) in closed form against the route through J_(n), that is
/// closed_form_prefactor * Phi * J_(n). J_(n) is summed from the Jhat
/// closed forms, so the tolerance is the one for J_(n) = const * w.
pub fn theorem_f_check(idx: &WeightIndex, params: &ModelParams, t: &[C64], z: &[C64], trunc: &TruncationPolicy) -> Result<IdentityReport> {
    let x = Ctx::new(idx, params, t, z)?;
    let (j, _) = j_total(&x, idx.multiplicities.as_slice(), JhatVariant::Standard)?;
    let phi = phase_phi(t, z, params, trunc)?.value;
    let route = closed_form_prefactor(idx, params, t, z, trunc)? * phi * j;
    let closed = theorem_f(idx, t, z, params, trunc)?.value;
    Ok(IdentityReport::compare("closed-form-f", sample_text(idx, params, t, z), closed, route, 1e-300, TOL_THEOREM))
}

// ---------------------------------------------------------------- sampling

/// Random complex q with 0.2 < |q| < 0.9.
pub fn random_q<R: Rng>(rng: &mut R) -> C64 {
    C64::from_polar(rng.gen_range(0.25..0.85), rng.gen_range(-PI..PI))
}

/// n random complex points with moduli in [0.5, 1.5].
pub fn random_points<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(-PI..PI))).collect()
}

/// n random points in the right half plane near the positive axis.
pub fn random_positive<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(0.5..1.5), 0.0)).collect()
}

/// Every identity of the suite at one random parameter draw, within the
/// given size limits. Used by the command line and the acceptance tests.
pub fn run_suite<R: Rng>(rng: &mut R, max_n: usize) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    let q = random_q(rng);
    for n in 0..=max_n.min(6) {
        for m in 0..=n {
            out.push(lemma_combi_i(n, m, q)?);
            out.push(lemma_combi_ii(n, m, q)?);
        }
    }
    for n in 1..=max_n.min(5) {
        let t = random_points(rng, n);
        for m in 0..=n {
            for pos in (1..=n).combinations(m) {
                out.push(lemma_sym(&pos, &t, q)?);
            }
        }
    }
    for l in 1..=max_n.min(5) as u32 {
        for n in 1..=l as usize {
            let t = random_points(rng, n);
            let z = random_points(rng, 2);
            out.push(lemma_z(l, z[0], &t, q)?);
            out.push(lemma_z_shift(l, z[0], z[1], &t, q)?);
        }
    }
    for n in 0..=max_n.min(4) {
        let t = random_points(rng, n);
        for alpha in 0..=n {
            for b in (0..n).combinations(alpha) {
                out.push(eps_sum_identity(&b, n, q, &t)?);
            }
        }
    }
    Ok(out)
}

/// Spin and index pairs for the u-integral: one block of size one.
pub const SINGLE_SLOT_CASES: &[(&[u32], &[u32])] = &[(&[1, 1], &[0, 1]), (&[1, 1], &[1, 0]), (&[1, 2], &[1, 1]), (&[2, 1, 1], &[2, 0, 1])];

/// Spin and index pairs with N <= 3 for the Jhat and proportionality checks.
pub const BLOCK_CASES: &[(&[u32], &[u32])] = &[
    (&[1, 1], &[0, 1]),
    (&[1, 1], &[1, 0]),
    (&[1, 1], &[0, 0]),
    (&[2, 1], &[0, 1]),
    (&[2, 1], &[1, 0]),
    (&[1, 2], &[1, 1]),
    (&[2], &[0]),
    (&[3], &[1]),
    (&[3], &[0]),
    (&[2, 1], &[0, 0]),
    (&[1, 1, 1], &[0, 1, 0]),
    (&[1, 1, 1], &[0, 0, 0]),
];

fn random_sign<R: Rng>(rng: &mut R) -> i32 {
    if rng.gen_bool(0.5) {
        1
    } else {
        -1
    }
}

/// The checks that involve the integrand structure: the single u-integral,
/// both Jhat forms, J_(a) for every a, the two weight forms and the closed
/// form of F, all at one random draw of q, t and z.
pub fn run_structure_suite<R: Rng>(rng: &mut R, grid: &QuadratureGrid, trunc: &TruncationPolicy) -> Result<Vec<IdentityReport>> {
    let (k, ll) = (c(1.3), c(0.37));
    let mut out = Vec::new();
    let q = random_q(rng);
    for &(spins, nu) in SINGLE_SLOT_CASES {
        let idx = WeightIndex::new(nu, spins, Mode::Component)?;
        let p = ModelParams::derive(q, k, ll, spins, 1)?;
        let z = random_points(rng, spins.len());
        for n_t in 1..=2 {
            let t = random_points(rng, n_t);
            for eps in sign_vectors(n_t) {
                for mu in [1, -1] {
                    for m in 0..=1 {
                        out.push(lemma_i_check(&idx, &p, &eps, mu, m, &t, &z, grid, trunc)?);
                    }
                }
            }
        }
    }
    for &(spins, nu) in BLOCK_CASES {
        let idx = WeightIndex::new(nu, spins, Mode::Component)?;
        let p = ModelParams::derive(q, k, ll, spins, idx.n_vars())?;
        let samples: Vec<(Vec<C64>, Vec<C64>)> = (0..3).map(|_| (random_points(rng, idx.n_vars()), random_points(rng, spins.len()))).collect();
        let (t, z) = &samples[0];
        for a in cut_points(&idx.multiplicities).into_iter().filter(|_| idx.r() <= 2) {
            let eps: Vec<i32> = (0..t.len()).map(|_| random_sign(rng)).collect();
            out.push(jhat_prop_check(&a, &idx, &eps, &p, t, z)?);
        }
        out.extend(mainprop_check(&idx, &p, &samples)?);
        out.push(weight_form_check(&idx, &p, t, z)?);
    }
    let qr = rng.gen_range(0.3..0.8);
    for &(spins, nu) in BLOCK_CASES {
        let idx = WeightIndex::new(nu, spins, Mode::Component)?;
        let p = ModelParams::real(qr, 1.0, 0.3, spins, idx.n_vars())?;
        let t = random_positive(rng, idx.n_vars());
        let z = random_positive(rng, spins.len());
        out.push(theorem_f_check(&idx, &p, &t, &z, trunc)?);
    }
    Ok(out)
}
