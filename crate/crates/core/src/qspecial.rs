//! q-numbers, q-factorials, q-binomials and the infinite products built on
//! them: (z;a)_inf, (z;a,b)_inf, the theta function and the scalar factors
//! rho and xi.
//!
//! Product-valued functions return a [`Truncated`] carrying a tail bound and
//! a near-pole flag so that callers can judge the accuracy of what they got.

use crate::error::{Error, Result};
use crate::params::{ipow, TruncationPolicy};
use crate::C64;
use serde::Serialize;

const NEAR_POLE: f64 = 1e-13;

/// A truncated infinite-product value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncated {
    pub value: C64,
    /// Bound on the neglected tail, sum over dropped factors of |a^i z|.
    pub tail_bound: f64,
    /// Number of factors actually multiplied (largest over sub-products).
    pub terms: usize,
    /// Set when a denominator factor came within 1e-13 of zero.
    pub near_pole: bool,
}

impl Truncated {
    fn exact(value: C64) -> Self {
        Self {
            value,
            tail_bound: 0.0,
            terms: 0,
            near_pole: false,
        }
    }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// [n] = (q^n - q^-n)/(q - q^-1).
pub fn qint(n: i64, q: C64) -> Result<C64> {
    let den = q - one() / q;
    if q.norm() == 0.0 || den.norm() == 0.0 {
        return Err(Error::ParameterDomain(format!("qint: q = {} is excluded", q)));
    }
    Ok((ipow(q, n) - ipow(q, -n)) / den)
}

/// [n]! = [1][2]...[n].
pub fn qfact(n: i64, q: C64) -> Result<C64> {
    if n < 0 {
        return Err(Error::Index(format!("qfact: negative n = {}", n)));
    }
    let mut acc = one();
    for i in 1..=n {
        acc *= qint(i, q)?;
    }
    Ok(acc)
}

/// Gaussian binomial [n]!/([m]![n-m]!), computed as a product of ratios.
pub fn qbinom(n: i64, m: i64, q: C64) -> Result<C64> {
    if m < 0 || m > n {
        return Err(Error::Index(format!("qbinom: need 0 <= m <= n, got n = {}, m = {}", n, m)));
    }
    let m = m.min(n - m);
    let mut acc = one();
    for i in 1..=m {
        acc *= qint(n - m + i, q)? / qint(i, q)?;
    }
    Ok(acc)
}

/// Raw truncated product (z;a)_inf without bookkeeping; used in hot loops.
pub(crate) fn poch_raw(z: C64, a: C64, trunc: &TruncationPolicy) -> C64 {
    let mut acc = one();
    let mut term = z;
    for _ in 0..trunc.max_terms {
        if term.norm() < trunc.tail_tol {
            break;
        }
        acc *= one() - term;
        term *= a;
    }
    acc
}

/// (z;a)_inf = prod_{i>=0} (1 - a^i z).
pub fn qpoch(z: C64, a: C64, trunc: &TruncationPolicy) -> Result<Truncated> {
    if !(a.norm() < 1.0) {
        return Err(Error::ParameterDomain(format!("qpoch: |a| = {} must be < 1", a.norm())));
    }
    let mut acc = one();
    let mut term = z;
    let mut terms = 0;
    let mut near_pole = false;
    while terms < trunc.max_terms && term.norm() >= trunc.tail_tol {
        let f = one() - term;
        near_pole |= f.norm() < NEAR_POLE;
        acc *= f;
        term *= a;
        terms += 1;
    }
    let an = a.norm();
    let tail_bound = if term.norm() == 0.0 { 0.0 } else { term.norm() / (1.0 - an) };
    Ok(Truncated {
        value: acc,
        tail_bound,
        terms,
        near_pole,
    })
}

/// (z;a,b)_inf = prod_{i,j>=0} (1 - a^i b^j z).
pub fn qpoch2(z: C64, a: C64, b: C64, trunc: &TruncationPolicy) -> Result<Truncated> {
    if !(a.norm() < 1.0) || !(b.norm() < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "qpoch2: bases |a| = {}, |b| = {} must be < 1",
            a.norm(),
            b.norm()
        )));
    }
    let mut acc = one();
    let mut row = z;
    let mut rows = 0;
    let mut terms = 0;
    let mut near_pole = false;
    let mut tail = 0.0;
    while rows < trunc.max_terms && row.norm() / (1.0 - b.norm()) >= trunc.tail_tol {
        let r = qpoch(row, b, trunc)?;
        acc *= r.value;
        tail += r.tail_bound;
        terms = terms.max(r.terms);
        near_pole |= r.near_pole;
        row *= a;
        rows += 1;
    }
    if row.norm() != 0.0 {
        tail += row.norm() / ((1.0 - a.norm()) * (1.0 - b.norm()));
    }
    Ok(Truncated {
        value: acc,
        tail_bound: tail,
        terms: terms.max(rows),
        near_pole,
    })
}

/// theta(z) = (z;p)(p/z;p)(p;p).
pub fn theta(z: C64, p: C64, trunc: &TruncationPolicy) -> Result<Truncated> {
    if z.norm() == 0.0 {
        return Err(Error::ParameterDomain("theta: z = 0".into()));
    }
    let a = qpoch(z, p, trunc)?;
    let b = qpoch(p / z, p, trunc)?;
    let c = qpoch(p, p, trunc)?;
    Ok(Truncated {
        value: a.value * b.value * c.value,
        tail_bound: a.tail_bound + b.tail_bound + c.tail_bound,
        terms: a.terms.max(b.terms).max(c.terms),
        near_pole: false,
    })
}

fn ratio4(
    num: [C64; 2],
    den: [C64; 2],
    prod: impl Fn(C64) -> Result<Truncated>,
    prefactor: C64,
) -> Result<Truncated> {
    let n0 = prod(num[0])?;
    let n1 = prod(num[1])?;
    let d0 = prod(den[0])?;
    let d1 = prod(den[1])?;
    let dv = d0.value * d1.value;
    let near_pole = dv.norm() < NEAR_POLE || d0.near_pole || d1.near_pole;
    Ok(Truncated {
        value: prefactor * n0.value * n1.value / dv,
        tail_bound: n0.tail_bound + n1.tail_bound + d0.tail_bound + d1.tail_bound,
        terms: [n0.terms, n1.terms, d0.terms, d1.terms].into_iter().max().unwrap_or(0),
        near_pole,
    })
}

/// rho_{li,lj}(z) = q^(li lj/2) (q^(li+lj+2)/z; q^4)(q^(-li-lj+2)/z; q^4)
///                 / [(q^(-li+lj+2)/z; q^4)(q^(li-lj+2)/z; q^4)].
pub fn rho(z: C64, li: u32, lj: u32, q: C64, trunc: &TruncationPolicy) -> Result<Truncated> {
    if z.norm() == 0.0 {
        return Err(Error::ParameterDomain("rho: z = 0".into()));
    }
    if li == 0 || lj == 0 {
        return Ok(Truncated::exact(one()));
    }
    let (a, b) = (li as i64, lj as i64);
    let q4 = ipow(q, 4);
    let w = one() / z;
    let pre = crate::params::cpow(q, C64::new((a * b) as f64 / 2.0, 0.0));
    ratio4(
        [ipow(q, a + b + 2) * w, ipow(q, -a - b + 2) * w],
        [ipow(q, -a + b + 2) * w, ipow(q, a - b + 2) * w],
        |x| qpoch(x, q4, trunc),
        pre,
    )
}

/// xi_{li,lj}(z): the same shape as rho with (p x/z; q^4, p) double products
/// and no prefactor.
pub fn xi(z: C64, li: u32, lj: u32, q: C64, p: C64, trunc: &TruncationPolicy) -> Result<Truncated> {
    if z.norm() == 0.0 {
        return Err(Error::ParameterDomain("xi: z = 0".into()));
    }
    if li == 0 || lj == 0 {
        return Ok(Truncated::exact(one()));
    }
    let (a, b) = (li as i64, lj as i64);
    let q4 = ipow(q, 4);
    let w = p / z;
    ratio4(
        [ipow(q, a + b + 2) * w, ipow(q, -a - b + 2) * w],
        [ipow(q, a - b + 2) * w, ipow(q, -a + b + 2) * w],
        |x| qpoch2(x, q4, p, trunc),
        one(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }
    fn tp() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn qint_examples() {
        assert_eq!(qint(0, c(0.3)).unwrap(), c(0.0));
        assert!((qint(1, c(0.3)).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((qint(2, c(2.0)).unwrap() - c(2.5)).norm() < 1e-15);
        assert!((qint(-3, c(0.4)).unwrap() + qint(3, c(0.4)).unwrap()).norm() < 1e-14);
        assert!(qint(1, c(1.0)).is_err());
        assert!(qint(1, c(-1.0)).is_err());
        assert!(qint(1, c(0.0)).is_err());
    }

    #[test]
    fn binomial_examples() {
        let q = C64::new(0.4, 0.3);
        assert_eq!(qbinom(5, 0, q).unwrap(), c(1.0));
        assert!((qbinom(2, 1, q).unwrap() - (q + 1.0 / q)).norm() < 1e-14);
        assert!((qbinom(4, 2, c(1.0 + 1e-8)).unwrap() - c(6.0)).norm() < 1e-6);
        assert_eq!(qfact(0, q).unwrap(), c(1.0));
        assert!(qbinom(3, 4, q).is_err());
        assert!(qbinom(3, -1, q).is_err());
    }

    #[test]
    fn poch_examples() {
        assert_eq!(qpoch(c(0.0), c(0.5), &tp()).unwrap().value, c(1.0));
        assert!((qpoch(c(0.3), c(0.0), &tp()).unwrap().value - c(0.7)).norm() < 1e-16);
        // (1/2; 1/2)_inf, independent high-precision value
        let v = qpoch(c(0.5), c(0.5), &tp()).unwrap();
        assert!((v.value - c(0.288_788_095_086_602_4)).norm() < 1e-15);
        assert!(qpoch(c(0.5), c(1.0), &tp()).is_err());
    }

    #[test]
    fn poch2_examples() {
        assert_eq!(qpoch2(c(0.0), c(0.2), c(0.5), &tp()).unwrap().value, c(1.0));
        let single = qpoch(c(0.3), c(0.5), &tp()).unwrap().value;
        assert!((qpoch2(c(0.3), c(0.0), c(0.5), &tp()).unwrap().value - single).norm() < 1e-15);
        // (z;a,b) = (z;b)(az;a,b)
        let lhs = qpoch2(c(0.3), c(0.2), c(0.5), &tp()).unwrap().value;
        let rhs = single * qpoch2(c(0.06), c(0.2), c(0.5), &tp()).unwrap().value;
        assert!((lhs - rhs).norm() < 1e-15);
        // independent evaluation
        assert!((lhs - c(0.437_928_279_655_271_6)).norm() < 1e-13);
    }

    #[test]
    fn theta_examples() {
        let p = c(0.046656);
        assert!(theta(c(1.0), p, &tp()).unwrap().value.norm() < 1e-15);
        assert!(theta(c(0.0), p, &tp()).is_err());
        let z = C64::new(0.7, -0.2);
        let t = theta(z, p, &tp()).unwrap().value;
        let back = theta(z / p, p, &tp()).unwrap().value;
        assert!((back + (z / p) * t).norm() < 1e-12 * back.norm());
    }

    #[test]
    fn rho_degenerate_and_limit() {
        let q = c(0.6);
        assert_eq!(rho(c(1.7), 0, 3, q, &tp()).unwrap().value, c(1.0));
        let far = rho(c(1e12), 2, 3, q, &tp()).unwrap().value;
        assert!((far - q.powf(3.0)).norm() < 1e-10);
        // frozen value from an independent evaluation
        let v = rho(c(2.0), 1, 1, c(0.5), &tp()).unwrap().value;
        assert!((v - c(0.438_849_994_490_160_8)).norm() < 1e-14);
    }

    #[test]
    fn xi_degenerate_and_shift() {
        let q = c(0.6);
        let p = ipow(q, 6);
        assert_eq!(xi(c(1.4), 0, 2, q, p, &tp()).unwrap().value, c(1.0));
        assert_eq!(xi(c(1.4), 2, 0, q, p, &tp()).unwrap().value, c(1.0));
        // xi(pz)/xi(z) = q^(-li lj/2) rho(z)
        for &(li, lj) in &[(1u32, 1u32), (1, 2), (2, 3)] {
            let z = c(1.4);
            let r = xi(p * z, li, lj, q, p, &tp()).unwrap().value / xi(z, li, lj, q, p, &tp()).unwrap().value;
            let expect = rho(z, li, lj, q, &tp()).unwrap().value * q.powf(-((li * lj) as f64) / 2.0);
            assert!((r - expect).norm() < 1e-12 * expect.norm());
        }
        let v = xi(c(1.4), 1, 1, q, p, &tp()).unwrap().value;
        assert!((v - c(0.983_251_296_918_089_9)).norm() < 1e-13);
    }

    #[test]
    fn near_pole_flag() {
        let q = c(0.6);
        // denominator (q^2/z; q^4) vanishes at z = q^2
        let v = rho(q * q * (1.0 + 1e-15), 1, 1, q, &tp()).unwrap();
        assert!(v.near_pole);
    }

    proptest! {
        #[test]
        fn theta_quasi_periodic(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let z = C64::new(re, im);
            prop_assume!(z.norm() > 0.1 && z.norm() < 10.0);
            let p = c(0.046656);
            let t = theta(z, p, &tp()).unwrap().value;
            let s = theta(p * z, p, &tp()).unwrap().value;
            prop_assert!((s + t / z).norm() <= 1e-12 * t.norm().max(1e-300));
        }

        #[test]
        fn poch_recursion(re in -2.0f64..2.0, im in -2.0f64..2.0, a in 0.05f64..0.9) {
            let z = C64::new(re, im);
            let a = c(a);
            let lhs = qpoch(z, a, &tp()).unwrap().value;
            let rhs = (1.0 - z) * qpoch(a * z, a, &tp()).unwrap().value;
            prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + lhs.norm()));
        }

        #[test]
        fn q_pascal(re in -0.9f64..0.9, im in -0.9f64..0.9, n in 1i64..=12, m in 0i64..=12) {
            let q = C64::new(re, im);
            prop_assume!(q.norm() > 0.2 && q.norm() < 0.95);
            prop_assume!(m <= n);
            let lhs = qbinom(n, m, q).unwrap();
            let a = if m >= 1 { qbinom(n - 1, m - 1, q).unwrap() * ipow(q, n - m) } else { c(0.0) };
            let b = if m < n { qbinom(n - 1, m, q).unwrap() * ipow(q, -m) } else { c(0.0) };
            prop_assert!((lhs - a - b).norm() <= 1e-12 * lhs.norm().max(1.0));
        }

        #[test]
        fn q_binomial_theorem(re in -0.9f64..0.9, im in -0.9f64..0.9, xr in -1.5f64..1.5, n in 0i64..8) {
            let q = C64::new(re, im);
            prop_assume!(q.norm() > 0.3 && q.norm() < 0.95);
            let x = C64::new(xr, 0.3);
            let mut lhs = c(1.0);
            for i in 1..=n {
                lhs *= 1.0 + ipow(q, -n - 1 + 2 * i) * x;
            }
            let mut rhs = c(0.0);
            for i in 0..=n {
                rhs += qbinom(n, i, q).unwrap() * ipow(x, i);
            }
            prop_assert!((lhs - rhs).norm() <= 1e-11 * lhs.norm().max(1.0));
        }
    }
}
