//! Evaluation modules V^(l)_z of U_q(sl2^), two-site coproducts, the flip
//! C_l, and dense tensor-product vectors with two-leg operators.
//!
//! Basis vectors are v_0..v_l with v_0 of highest weight l. The coproduct
//! convention is
//!
//! ```text
//! D(e_i) = e_i (x) 1 + q^{h_i} (x) e_i
//! D(f_i) = f_i (x) q^{-h_i} + 1 (x) f_i
//! D(q^{h_i}) = q^{h_i} (x) q^{h_i}
//! ```
//!
//! It is checked indirectly: the R-matrix solved from it must agree with the
//! closed forms in `rmatrix`.

use crate::error::{Error, Result};
use crate::params::ipow;
use crate::qspecial::qint;
use crate::C64;
use nalgebra::DMatrix;
use std::fmt;
use std::str::FromStr;

pub type CMatrix = DMatrix<C64>;

/// Chevalley generators plus the degree operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    E0,
    E1,
    F0,
    F1,
    QH0,
    QH1,
    QD,
}

impl Generator {
    pub const CHEVALLEY: [Generator; 6] = [
        Generator::E0,
        Generator::E1,
        Generator::F0,
        Generator::F1,
        Generator::QH0,
        Generator::QH1,
    ];
}

impl FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "e0" => Generator::E0,
            "e1" => Generator::E1,
            "f0" => Generator::F0,
            "f1" => Generator::F1,
            "qh0" | "q^h0" => Generator::QH0,
            "qh1" | "q^h1" => Generator::QH1,
            "qd" | "q^d" => Generator::QD,
            other => return Err(Error::Index(format!("unknown generator {:?}", other))),
        })
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Generator::E0 => "e0",
            Generator::E1 => "e1",
            Generator::F0 => "f0",
            Generator::F1 => "f1",
            Generator::QH0 => "qh0",
            Generator::QH1 => "qh1",
            Generator::QD => "qd",
        };
        f.write_str(s)
    }
}

/// A basis element v_i (x) z^n of V^(l)_z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GradedBasis {
    pub index: u32,
    pub zpow: i64,
}

/// Action of one generator on v_i (x) z^n; out-of-range targets are dropped.
pub fn act_generator(gen: Generator, l: u32, basis: GradedBasis, q: C64) -> Result<Vec<(C64, GradedBasis)>> {
    let i = basis.index;
    if i > l {
        return Err(Error::Index(format!("basis index {} exceeds spin {}", i, l)));
    }
    let n = basis.zpow;
    let (li, ii) = (l as i64, i as i64);
    let at = |idx: u32, zpow: i64, c: C64| vec![(c, GradedBasis { index: idx, zpow })];
    Ok(match gen {
        Generator::E0 if i < l => at(i + 1, n + 1, qint(li - ii, q)?),
        Generator::F1 if i < l => at(i + 1, n, qint(li - ii, q)?),
        Generator::E1 if i > 0 => at(i - 1, n, qint(ii, q)?),
        Generator::F0 if i > 0 => at(i - 1, n - 1, qint(ii, q)?),
        Generator::E0 | Generator::F1 | Generator::E1 | Generator::F0 => vec![],
        Generator::QH0 => at(i, n, ipow(q, -(li - 2 * ii))),
        Generator::QH1 => at(i, n, ipow(q, li - 2 * ii)),
        Generator::QD => at(i, n, ipow(q, n)),
    })
}

/// Matrix of a Chevalley generator on V^(l) at the numeric point z
/// (e_0 carries a factor z, f_0 a factor 1/z).
pub fn generator_matrix(gen: Generator, l: u32, z: C64, q: C64) -> Result<CMatrix> {
    if gen == Generator::QD {
        return Err(Error::Index("q^d has no matrix at a numeric spectral point".into()));
    }
    let d = l as usize + 1;
    let mut m = CMatrix::zeros(d, d);
    for i in 0..=l {
        for (c, b) in act_generator(gen, l, GradedBasis { index: i, zpow: 0 }, q)? {
            m[(b.index as usize, i as usize)] += c * ipow(z, b.zpow);
        }
    }
    Ok(m)
}

/// Kronecker product with the first factor as the slow index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Matrix of D(gen) on V^(l1)_{z1} (x) V^(l2)_{z2}.
pub fn coproduct_two_site(gen: Generator, l1: u32, l2: u32, z1: C64, z2: C64, q: C64) -> Result<CMatrix> {
    if z1.norm() == 0.0 || z2.norm() == 0.0 {
        return Err(Error::ParameterDomain("spectral parameters must be nonzero".into()));
    }
    let id1 = CMatrix::identity(l1 as usize + 1, l1 as usize + 1);
    let id2 = CMatrix::identity(l2 as usize + 1, l2 as usize + 1);
    let g1 = generator_matrix(gen, l1, z1, q)?;
    let g2 = generator_matrix(gen, l2, z2, q)?;
    let cartan = |g: Generator| match g {
        Generator::E0 | Generator::F0 => Generator::QH0,
        _ => Generator::QH1,
    };
    Ok(match gen {
        Generator::E0 | Generator::E1 => {
            let k1 = generator_matrix(cartan(gen), l1, z1, q)?;
            kron(&g1, &id2) + kron(&k1, &g2)
        }
        Generator::F0 | Generator::F1 => {
            let k2 = generator_matrix(cartan(gen), l2, z2, q)?;
            let k2inv = CMatrix::from_diagonal(&k2.diagonal().map(|x| C64::new(1.0, 0.0) / x));
            kron(&g1, &k2inv) + kron(&id1, &g2)
        }
        Generator::QH0 | Generator::QH1 => kron(&g1, &g2),
        Generator::QD => unreachable!("rejected by generator_matrix"),
    })
}

/// The flip C_l: v_e -> v_{l-e}.
pub fn flip_c(l: u32) -> CMatrix {
    let d = l as usize + 1;
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(d - 1 - i, i)] = C64::new(1.0, 0.0);
    }
    m
}

/// The swap P: V^(l1) (x) V^(l2) -> V^(l2) (x) V^(l1).
pub fn swap_p(l1: u32, l2: u32) -> CMatrix {
    let (d1, d2) = (l1 as usize + 1, l2 as usize + 1);
    let mut m = CMatrix::zeros(d1 * d2, d1 * d2);
    for a in 0..d1 {
        for b in 0..d2 {
            m[(b * d1 + a, a * d2 + b)] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// A dense vector in V^(l_1) (x) ... (x) V^(l_n), first site slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorVector {
    pub spins: Vec<u32>,
    pub coeffs: Vec<C64>,
}

impl TensorVector {
    pub fn zeros(spins: &[u32]) -> Self {
        let dim = spins.iter().map(|&l| l as usize + 1).product();
        Self {
            spins: spins.to_vec(),
            coeffs: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn strides(spins: &[u32]) -> Vec<usize> {
        let mut s = vec![1usize; spins.len()];
        for i in (0..spins.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * (spins[i + 1] as usize + 1);
        }
        s
    }

    /// Flat position of the basis vector v_{m_1} (x) ... (x) v_{m_n}.
    pub fn offset(&self, multi: &[u32]) -> Result<usize> {
        if multi.len() != self.spins.len() {
            return Err(Error::Shape(format!("multi-index of length {} for {} sites", multi.len(), self.spins.len())));
        }
        let strides = Self::strides(&self.spins);
        let mut off = 0;
        for (k, (&m, &l)) in multi.iter().zip(&self.spins).enumerate() {
            if m > l {
                return Err(Error::Index(format!("component {} out of range at site {} (spin {})", m, k, l)));
            }
            off += m as usize * strides[k];
        }
        Ok(off)
    }

    /// Multi-index of a flat position.
    pub fn multi_index(&self, mut off: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.spins.len()];
        for k in (0..self.spins.len()).rev() {
            let d = self.spins[k] as usize + 1;
            out[k] = (off % d) as u32;
            off /= d;
        }
        out
    }

    pub fn get(&self, multi: &[u32]) -> Result<C64> {
        Ok(self.coeffs[self.offset(multi)?])
    }

    pub fn set(&mut self, multi: &[u32], value: C64) -> Result<()> {
        let o = self.offset(multi)?;
        self.coeffs[o] = value;
        Ok(())
    }

    /// Weight sum of (l_i - 2 m_i) of a basis vector.
    pub fn weight(&self, multi: &[u32]) -> i64 {
        multi
            .iter()
            .zip(&self.spins)
            .map(|(&m, &l)| l as i64 - 2 * m as i64)
            .sum()
    }

    /// Max-norm.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x) })
    }

    pub fn scale(&mut self, s: C64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }
}

/// A matrix acting on legs (i, j) of a tensor product; the first tensor
/// factor of the matrix acts on leg i.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteOperator {
    pub legs: (usize, usize),
    pub matrix: CMatrix,
}

impl TwoSiteOperator {
    pub fn new(legs: (usize, usize), matrix: CMatrix) -> Self {
        Self { legs, matrix }
    }
}

/// Apply a two-leg operator to a tensor vector.
pub fn apply_two_site(op: &TwoSiteOperator, v: &TensorVector) -> Result<TensorVector> {
    let (i, j) = op.legs;
    let n = v.spins.len();
    if i >= n || j >= n || i == j {
        return Err(Error::Shape(format!("legs ({}, {}) invalid for {} sites", i, j, n)));
    }
    let (di, dj) = (v.spins[i] as usize + 1, v.spins[j] as usize + 1);
    if op.matrix.nrows() != di * dj || op.matrix.ncols() != di * dj {
        return Err(Error::Shape(format!(
            "operator is {}x{}, legs need {}",
            op.matrix.nrows(),
            op.matrix.ncols(),
            di * dj
        )));
    }
    let strides = TensorVector::strides(&v.spins);
    let mut out = TensorVector::zeros(&v.spins);
    for off in 0..v.dim() {
        let multi = v.multi_index(off);
        // visit each orbit once, from its representative with m_i = m_j = 0
        if multi[i] != 0 || multi[j] != 0 {
            continue;
        }
        for a in 0..di {
            for b in 0..dj {
                let row = a * dj + b;
                let dst = off + a * strides[i] + b * strides[j];
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..di {
                    for d in 0..dj {
                        let m = op.matrix[(row, c * dj + d)];
                        if m != C64::new(0.0, 0.0) {
                            acc += m * v.coeffs[off + c * strides[i] + d * strides[j]];
                        }
                    }
                }
                out.coeffs[dst] = acc;
            }
        }
    }
    Ok(out)
}

/// Apply a diagonal single-leg operator given by its diagonal entries.
pub fn apply_one_site_diag(leg: usize, diag: &[C64], v: &TensorVector) -> Result<TensorVector> {
    if leg >= v.spins.len() || diag.len() != v.spins[leg] as usize + 1 {
        return Err(Error::Shape(format!("diagonal of length {} on leg {}", diag.len(), leg)));
    }
    let mut out = v.clone();
    for off in 0..v.dim() {
        let m = v.multi_index(off)[leg] as usize;
        out.coeffs[off] *= diag[m];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn generator_examples() {
        let q = c(0.6);
        let b = |i, n| GradedBasis { index: i, zpow: n };
        assert!(act_generator(Generator::E1, 3, b(0, 4), q).unwrap().is_empty());
        let r = act_generator(Generator::QH1, 3, b(1, 2), q).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].0 - ipow(q, 1)).norm() < 1e-15);
        let r = act_generator(Generator::F0, 3, b(2, 5), q).unwrap();
        assert_eq!(r[0].1, b(1, 4));
        assert!((r[0].0 - qint(2, q).unwrap()).norm() < 1e-15);
        let r = act_generator(Generator::QD, 2, b(1, 3), q).unwrap();
        assert!((r[0].0 - ipow(q, 3)).norm() < 1e-15);
        assert!("x1".parse::<Generator>().is_err());
        assert!(act_generator(Generator::E1, 1, b(2, 0), q).is_err());
    }

    #[test]
    fn coproduct_examples() {
        let q = c(0.6);
        let (z1, z2) = (c(1.3), c(0.4));
        let kh = coproduct_two_site(Generator::QH1, 1, 1, z1, z2, q).unwrap();
        assert!((kh[(0, 0)] - q * q).norm() < 1e-15);
        // D(e1) v1 (x) v1 = v0 (x) v1 + q^{-1} v1 (x) v0
        let e = coproduct_two_site(Generator::E1, 1, 1, z1, z2, q).unwrap();
        assert!((e[(1, 3)] - c(1.0)).norm() < 1e-15);
        assert!((e[(2, 3)] - 1.0 / q).norm() < 1e-15);
        // D(f1) v0 (x) v0 = q^{-1} v1 (x) v0 + v0 (x) v1
        let f = coproduct_two_site(Generator::F1, 1, 1, z1, z2, q).unwrap();
        assert!((f[(2, 0)] - 1.0 / q).norm() < 1e-15);
        assert!((f[(1, 0)] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn weight_additivity() {
        let q = C64::new(0.5, 0.2);
        for l1 in 0..3u32 {
            for l2 in 0..3u32 {
                let kh = coproduct_two_site(Generator::QH1, l1, l2, c(1.0), c(2.0), q).unwrap();
                for m1 in 0..=l1 {
                    for m2 in 0..=l2 {
                        let k = (m1 * (l2 + 1) + m2) as usize;
                        let w = (l1 as i64 - 2 * m1 as i64) + (l2 as i64 - 2 * m2 as i64);
                        assert!((kh[(k, k)] - ipow(q, w)).norm() < 1e-14);
                    }
                }
                assert!((kh.clone() - CMatrix::from_diagonal(&kh.diagonal())).norm() == 0.0);
            }
        }
    }

    #[test]
    fn sl2_relation_on_small_modules() {
        let q = C64::new(0.45, 0.3);
        for l in 0..=4u32 {
            let e = generator_matrix(Generator::E1, l, c(1.0), q).unwrap();
            let f = generator_matrix(Generator::F1, l, c(1.0), q).unwrap();
            let k = generator_matrix(Generator::QH1, l, c(1.0), q).unwrap();
            let kinv = k.clone().try_inverse().unwrap();
            let lhs = &e * &f - &f * &e;
            let rhs = (k - kinv) / (q - 1.0 / q);
            assert!((lhs - rhs).norm() < 1e-12);
            let z = C64::new(0.7, -0.4);
            let e0 = generator_matrix(Generator::E0, l, z, q).unwrap();
            let f0 = generator_matrix(Generator::F0, l, z, q).unwrap();
            let k0 = generator_matrix(Generator::QH0, l, z, q).unwrap();
            let lhs = &e0 * &f0 - &f0 * &e0;
            let rhs = (k0.clone() - k0.try_inverse().unwrap()) / (q - 1.0 / q);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn flip_involution() {
        assert_eq!(flip_c(0), CMatrix::identity(1, 1));
        let c1 = flip_c(1);
        assert_eq!(c1[(1, 0)], c(1.0));
        assert_eq!(c1[(0, 1)], c(1.0));
        for l in 0..5 {
            let m = flip_c(l);
            assert_eq!(&m * &m, CMatrix::identity(l as usize + 1, l as usize + 1));
        }
        let cc = kron(&flip_c(2), &flip_c(1));
        let mut v = TensorVector::zeros(&[2, 1]);
        for (k, x) in v.coeffs.iter_mut().enumerate() {
            *x = C64::new(k as f64, 1.0 - k as f64);
        }
        let op = TwoSiteOperator::new((0, 1), &cc * &cc);
        assert_eq!(apply_two_site(&op, &v).unwrap(), v);
    }

    #[test]
    fn identity_and_swap() {
        let mut v = TensorVector::zeros(&[1, 1, 2]);
        v.set(&[0, 1, 2], c(1.0)).unwrap();
        let id = TwoSiteOperator::new((0, 2), CMatrix::identity(6, 6));
        assert_eq!(apply_two_site(&id, &v).unwrap(), v);
        let sw = TwoSiteOperator::new((0, 1), swap_p(1, 1));
        let w = apply_two_site(&sw, &v).unwrap();
        assert_eq!(w.get(&[1, 0, 2]).unwrap(), c(1.0));
        assert_eq!(w.get(&[0, 1, 2]).unwrap(), c(0.0));
        let bad = TwoSiteOperator::new((0, 1), CMatrix::identity(3, 3));
        assert!(apply_two_site(&bad, &v).is_err());
        let bad_leg = TwoSiteOperator::new((0, 3), CMatrix::identity(4, 4));
        assert!(apply_two_site(&bad_leg, &v).is_err());
    }

    #[test]
    fn reversed_legs_match_swap_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = CMatrix::from_fn(6, 6, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let mut v = TensorVector::zeros(&[1, 2]);
        for x in &mut v.coeffs {
            *x = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        // m acts with first factor on leg 1 (spin 2), second on leg 0 (spin 1)
        let m = CMatrix::from_fn(6, 6, |a, b| m[(a, b)]);
        let direct = apply_two_site(&TwoSiteOperator::new((1, 0), m.clone()), &v).unwrap();
        let p = swap_p(2, 1);
        let conj = &p * &m * p.transpose();
        let via = apply_two_site(&TwoSiteOperator::new((0, 1), conj), &v).unwrap();
        for (a, b) in direct.coeffs.iter().zip(&via.coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    proptest! {
        #[test]
        fn disjoint_legs_commute(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spins = [1u32, 2, 1, 1];
            let mut v = TensorVector::zeros(&spins);
            for x in &mut v.coeffs {
                *x = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let a = TwoSiteOperator::new((0, 1), random_matrix(&mut rng, 6));
            let b = TwoSiteOperator::new((2, 3), random_matrix(&mut rng, 4));
            let ab = apply_two_site(&a, &apply_two_site(&b, &v).unwrap()).unwrap();
            let ba = apply_two_site(&b, &apply_two_site(&a, &v).unwrap()).unwrap();
            for (x, y) in ab.coeffs.iter().zip(&ba.coeffs) {
                prop_assert!((x - y).norm() < 1e-14);
            }
        }

        #[test]
        fn application_is_linear(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spins = [2u32, 1, 1];
            let mut v = TensorVector::zeros(&spins);
            let mut w = TensorVector::zeros(&spins);
            for (x, y) in v.coeffs.iter_mut().zip(w.coeffs.iter_mut()) {
                *x = C64::new(rng.gen_range(-1.0..1.0), 0.0);
                *y = C64::new(0.0, rng.gen_range(-1.0..1.0));
            }
            let op = TwoSiteOperator::new((2, 0), random_matrix(&mut rng, 6));
            let mut sum = v.clone();
            for (s, y) in sum.coeffs.iter_mut().zip(&w.coeffs) {
                *s += 2.0 * y;
            }
            let lhs = apply_two_site(&op, &sum).unwrap();
            let a = apply_two_site(&op, &v).unwrap();
            let b = apply_two_site(&op, &w).unwrap();
            for k in 0..lhs.dim() {
                prop_assert!((lhs.coeffs[k] - a.coeffs[k] - 2.0 * b.coeffs[k]).norm() < 1e-13);
            }
        }
    }
}
