//! Trigonometric R-matrices R_{l1,l2}(z) on V^(l1) (x) V^(l2).
//!
//! `solve` finds R as the one-dimensional null space of the intertwining
//! conditions, normalized so that P R fixes v_0 (x) v_0. `closed_form` gives
//! the explicit matrices when one of the spins is 1. The scalar-dressed
//! variants used by the difference equations live here as well.

use crate::error::{Error, Result};
use crate::params::{ipow, TruncationPolicy};
use crate::qspecial::rho;
use crate::repr::{apply_two_site, coproduct_two_site, flip_c, kron, swap_p, CMatrix, Generator, TensorVector, TwoSiteOperator};
use crate::C64;
use serde::{Deserialize, Serialize};

/// Singular values below this multiple of machine epsilon (relative to the
/// largest) count as zero.
const NULL_FACTOR: f64 = 1e6;

/// Which scalar dressing of R enters the difference equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// rho(z) (C (x) C) R(z) (C (x) C) on every factor, taken literally.
    Literal,
    /// Undressed R; right factors carry rho(z), left factors q^(l l')/rho(1/z).
    Consistent,
}

/// Side of the active leg on which a factor of the difference operator sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorSide {
    Left,
    Right,
}

/// A solved R-matrix together with its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    pub l1: u32,
    pub l2: u32,
    pub z: C64,
    pub matrix: CMatrix,
    pub normalized: bool,
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// R_{l1,l2}(z) from the null space of P R D(g) = D'(g) P R for all
/// Chevalley generators, with V^(l1) at z and V^(l2) at 1.
pub fn solve(l1: u32, l2: u32, z: C64, q: C64) -> Result<RMatrix> {
    let d = (l1 as usize + 1) * (l2 as usize + 1);
    let n = d * d;
    let id = CMatrix::identity(d, d);
    let mut blocks = Vec::with_capacity(Generator::CHEVALLEY.len());
    for g in Generator::CHEVALLEY {
        let a = coproduct_two_site(g, l1, l2, z, one(), q)?;
        let b = coproduct_two_site(g, l2, l1, one(), z, q)?;
        // vec(X A - B X) = (A^T (x) I - I (x) B) vec(X), column-major vec.
        blocks.push(kron(&a.transpose(), &id) - kron(&id, &b));
    }
    let mut m = CMatrix::zeros(n * blocks.len(), n);
    for (i, b) in blocks.iter().enumerate() {
        m.view_mut((i * n, 0), (n, n)).copy_from(b);
    }
    // Reduce to the n x n Gram-free form via QR before the SVD.
    let r = m.qr().r();
    let svd = r.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Shape("svd did not return V".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let smax = svd.singular_values[order[order.len() - 1]].max(f64::MIN_POSITIVE);
    let tol = NULL_FACTOR * f64::EPSILON;
    let rel: Vec<f64> = order.iter().map(|&i| svd.singular_values[i] / smax).collect();
    let dim = rel.iter().filter(|&&s| s < tol).count();
    if dim != 1 {
        let gap = if dim == 0 { rel[0] } else { rel.get(1).copied().unwrap_or(0.0) };
        return Err(Error::DegenerateIntertwiner { dim, gap });
    }
    let row = v_t.row(order[0]);
    let mut x = CMatrix::zeros(d, d);
    for col in 0..d {
        for r_ in 0..d {
            x[(r_, col)] = row[col * d + r_].conj();
        }
    }
    let x00 = x[(0, 0)];
    let scale = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if x00.norm() <= 1e-12 * scale {
        return Err(Error::ResonantPoint(format!("{z}")));
    }
    x /= x00;
    let matrix = swap_p(l2, l1) * x;
    Ok(RMatrix { l1, l2, z, matrix, normalized: true })
}

/// Matrices of e_1, f_1 and q^(s h_1) on V^(l) with q^(h/2) taken as sqrt(q)^h.
fn ops(l: u32, q: C64) -> Result<(CMatrix, CMatrix, Vec<C64>)> {
    let d = l as usize + 1;
    let mut e = CMatrix::zeros(d, d);
    let mut f = CMatrix::zeros(d, d);
    for i in 0..d {
        if i >= 1 {
            e[(i - 1, i)] = crate::qspecial::qint(i as i64, q)?;
        }
        if i + 1 < d {
            f[(i + 1, i)] = crate::qspecial::qint(l as i64 - i as i64, q)?;
        }
    }
    let sq = q.sqrt();
    let half: Vec<C64> = (0..d).map(|i| ipow(sq, l as i64 - 2 * i as i64)).collect();
    Ok((e, f, half))
}

fn diag(v: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

/// Explicit R_{l1,l2}(z) when l1 = 1 or l2 = 1.
pub fn closed_form(l1: u32, l2: u32, z: C64, q: C64) -> Result<RMatrix> {
    if z.norm() == 0.0 {
        return Err(Error::ParameterDomain("closed_form: z = 0".into()));
    }
    let qq = q - one() / q;
    let sq = q.sqrt();
    let matrix = if l1 == 1 {
        let l = l2;
        let d = l as usize + 1;
        let (e, f, half) = ops(l, q)?;
        let kh = diag(&half);
        let khi = diag(&half.iter().map(|x| one() / x).collect::<Vec<_>>());
        let den = ipow(sq, 2 + l as i64) - ipow(sq, -(l as i64)) / z;
        if den.norm() == 0.0 {
            return Err(Error::PoleHit(format!("R_(1,{l}) at z = {z}")));
        }
        let r = [
            [(&kh * q - &khi / z) / den, (&f * &kh) * (qq / z / den)],
            [(&e * &khi) * (qq / den), (&khi * q - &kh / z) / den],
        ];
        let mut m = CMatrix::zeros(2 * d, 2 * d);
        for (ep, row) in r.iter().enumerate() {
            for (eps, blk) in row.iter().enumerate() {
                m.view_mut((ep * d, eps * d), (d, d)).copy_from(blk);
            }
        }
        m
    } else if l2 == 1 {
        let l = l1;
        let d = l as usize + 1;
        let (e, f, half) = ops(l, q)?;
        let kh = diag(&half);
        let khi = diag(&half.iter().map(|x| one() / x).collect::<Vec<_>>());
        let den = z * ipow(sq, l as i64) - ipow(sq, -2 - l as i64);
        if den.norm() == 0.0 {
            return Err(Error::PoleHit(format!("R_({l},1) at z = {z}")));
        }
        let qi = one() / q;
        let r = [
            [(&kh * z - &khi * qi) / den, (&kh * &f) * (qq * z / den)],
            [(&khi * &e) * (qq / den), (&khi * z - &kh * qi) / den],
        ];
        let mut m = CMatrix::zeros(2 * d, 2 * d);
        for (ep, row) in r.iter().enumerate() {
            for (eps, blk) in row.iter().enumerate() {
                for jj in 0..d {
                    for j in 0..d {
                        m[(jj * 2 + ep, j * 2 + eps)] = blk[(jj, j)];
                    }
                }
            }
        }
        m
    } else {
        return Err(Error::Unsupported(format!("closed form needs a spin-1 factor, got ({l1},{l2})")));
    };
    Ok(RMatrix { l1, l2, z, matrix, normalized: true })
}

/// max_i |(P R (v_0 (x) v_0))_i - (v_0 (x) v_0)_i|.
pub fn normalization_error(r: &RMatrix) -> f64 {
    let pr = swap_p(r.l1, r.l2) * &r.matrix;
    (0..pr.nrows()).map(|i| (pr[(i, 0)] - if i == 0 { one() } else { C64::new(0.0, 0.0) }).norm()).fold(0.0, f64::max)
}

/// (C (x) C) R (C (x) C).
pub fn r_tilde(r: &RMatrix) -> CMatrix {
    let c = kron(&flip_c(r.l1), &flip_c(r.l2));
    &c * &r.matrix * &c
}

/// The dressing rho_{l1,l2}(z) (C (x) C) R(z) (C (x) C).
pub fn r_hat(l1: u32, l2: u32, z: C64, q: C64, trunc: &TruncationPolicy) -> Result<CMatrix> {
    let r = solve(l1, l2, z, q)?;
    let s = rho(z, l1, l2, q, trunc)?.value;
    Ok(r_tilde(&r) * s)
}

/// R dressed for the given convention and factor side.
pub fn dressed(l1: u32, l2: u32, z: C64, q: C64, conv: Convention, side: FactorSide, trunc: &TruncationPolicy) -> Result<CMatrix> {
    match conv {
        Convention::Literal => r_hat(l1, l2, z, q, trunc),
        Convention::Consistent => {
            let r = solve(l1, l2, z, q)?;
            let s = match side {
                FactorSide::Right => rho(z, l1, l2, q, trunc)?.value,
                FactorSide::Left => ipow(q, (l1 * l2) as i64) / rho(one() / z, l1, l2, q, trunc)?.value,
            };
            Ok(r.matrix * s)
        }
    }
}

/// Dense matrix of a two-leg operator on the full tensor product.
pub fn embed(op: &TwoSiteOperator, spins: &[u32]) -> Result<CMatrix> {
    let mut v = TensorVector::zeros(spins);
    let dim = v.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        v.coeffs.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        v.coeffs[c] = one();
        let w = apply_two_site(op, &v)?;
        for r in 0..dim {
            out[(r, c)] = w.coeffs[r];
        }
    }
    Ok(out)
}

/// Relative Frobenius residual of R12(z1/z2) R13(z1/z3) R23(z2/z3)
/// against R23 R13 R12.
pub fn ybe_residual(spins: [u32; 3], z: [C64; 3], q: C64) -> Result<f64> {
    let sp = spins.as_slice();
    let op = |i: usize, j: usize| -> Result<CMatrix> {
        let r = solve(spins[i], spins[j], z[i] / z[j], q)?;
        embed(&TwoSiteOperator::new((i, j), r.matrix), sp)
    };
    let (r12, r13, r23) = (op(0, 1)?, op(0, 2)?, op(1, 2)?);
    let lhs = &r12 * &r13 * &r23;
    let rhs = &r23 * &r13 * &r12;
    let scale = 0.5 * (lhs.norm() + rhs.norm());
    Ok((lhs - rhs).norm() / scale.max(f64::MIN_POSITIVE))
}

/// Largest entry of R connecting different total weights.
pub fn off_block_max(r: &RMatrix) -> f64 {
    let d2 = r.l2 as usize + 1;
    let wt = |i: usize| (r.l1 as i64 - 2 * (i / d2) as i64) + (r.l2 as i64 - 2 * (i % d2) as i64);
    let mut m = 0.0f64;
    for i in 0..r.matrix.nrows() {
        for j in 0..r.matrix.ncols() {
            if wt(i) != wt(j) {
                m = m.max(r.matrix[(i, j)].norm());
            }
        }
    }
    m
}
