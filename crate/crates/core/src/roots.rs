//! Roots of integer polynomials whose zeros lie on a circle.
//!
//! The polynomial is first split exactly into square-free factors (Yun's
//! algorithm over Q) so the simultaneous iteration only ever sees simple
//! roots; multiplicities are restored afterwards.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-13;
const PHASE_OFFSET: f64 = 0.37;

type RatPoly = Vec<BigRational>;

fn trim(p: &mut RatPoly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn monic(mut p: RatPoly) -> RatPoly {
    trim(&mut p);
    if let Some(lc) = p.last().cloned() {
        for c in p.iter_mut() {
            *c = &*c / &lc;
        }
    }
    p
}

fn derivative(p: &RatPoly) -> RatPoly {
    let mut d: RatPoly = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
        .collect();
    trim(&mut d);
    d
}

fn div_rem(a: &RatPoly, b: &RatPoly) -> (RatPoly, RatPoly) {
    let mut rem = a.clone();
    trim(&mut rem);
    let db = b.len() - 1;
    if rem.len() <= db {
        return (Vec::new(), rem);
    }
    let lc = b.last().unwrap();
    let mut quot = vec![BigRational::zero(); rem.len() - db];
    for i in (0..quot.len()).rev() {
        let c = &rem[i + db] / lc;
        if !c.is_zero() {
            for (j, bj) in b.iter().enumerate() {
                rem[i + j] = &rem[i + j] - &c * bj;
            }
        }
        quot[i] = c;
    }
    rem.truncate(db);
    trim(&mut rem);
    trim(&mut quot);
    (quot, rem)
}

fn gcd(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let mut x = monic(a.clone());
    let mut y = monic(b.clone());
    while !y.is_empty() {
        let (_, r) = div_rem(&x, &y);
        x = y;
        y = monic(r);
    }
    x
}

fn sub(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let n = a.len().max(b.len());
    let zero = BigRational::zero();
    let mut out: RatPoly = (0..n)
        .map(|i| a.get(i).unwrap_or(&zero) - b.get(i).unwrap_or(&zero))
        .collect();
    trim(&mut out);
    out
}

/// Yun's square-free decomposition: monic factors `a_i` (pairwise coprime,
/// square-free) with `f = lc * prod a_i^i`.
pub fn squarefree_decomposition(coeffs: &[i128]) -> Vec<(Vec<BigRational>, usize)> {
    let f: RatPoly = monic(
        coeffs
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)))
            .collect(),
    );
    if f.len() <= 1 {
        return Vec::new();
    }
    let df = derivative(&f);
    let a0 = gcd(&f, &df);
    let mut b = div_rem(&f, &a0).0;
    let c = div_rem(&df, &a0).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while b.len() > 1 {
        let a = gcd(&b, &d);
        let next_b = div_rem(&b, &a).0;
        let next_c = div_rem(&d, &a).0;
        if a.len() > 1 {
            out.push((a, i));
        }
        d = sub(&next_c, &derivative(&next_b));
        b = next_b;
        i += 1;
    }
    out
}

/// Value and derivative by Horner.
fn eval_with_derivative(p: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::zero();
    let mut dv = Complex64::zero();
    for &c in p.iter().rev() {
        dv = dv * z + v;
        v = v * z + c;
    }
    (v, dv)
}

/// Aberth–Ehrlich iteration from points equally spaced on the unit circle
/// with an irrational-ish phase offset. `None` if it fails to converge.
pub fn aberth(p: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = p.len().checked_sub(1)?;
    if n == 0 {
        return Some(Vec::new());
    }
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * (j as f64 + PHASE_OFFSET) / n as f64;
            Complex64::from_polar(1.0, t)
        })
        .collect();
    for _ in 0..MAX_ITERATIONS {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let (v, dv) = eval_with_derivative(p, z[k]);
            if v.is_zero() {
                continue;
            }
            let w = v / dv;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = w / (Complex64::one() - w * repulsion);
            if !step.is_finite() {
                return None;
            }
            z[k] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < STEP_TOLERANCE {
            return Some(z);
        }
    }
    None
}

/// Eigenvalues of the companion matrix of a real monic polynomial.
pub fn companion_roots(p: &[f64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    let lc = p[n];
    let m = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -p[i] / lc
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    m.complex_eigenvalues().iter().copied().collect()
}

fn newton_polish(p: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (v, dv) = eval_with_derivative(p, z);
        if dv.is_zero() {
            break;
        }
        z -= v / dv;
    }
    z
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A root in the scaled variable `v = q^(1/2) u` with its multiplicity.
#[derive(Clone, Copy, Debug)]
pub struct ScaledRoot {
    pub v: Complex64,
    pub multiplicity: usize,
    /// `|p(v)| / sum |p_k|` on the square-free factor.
    pub residual: f64,
}

/// Roots of `sum c_n u^n` expressed in `v = q^(1/2) u`, where the zeros are
/// expected near `|v| = 1`.
pub fn circle_roots(coeffs: &[i128], q: u64) -> Result<Vec<ScaledRoot>> {
    let sqrt_q = (q as f64).sqrt();
    let mut out = Vec::new();
    for (factor, mult) in squarefree_decomposition(coeffs) {
        // p(u) = sum a_k u^k = sum (a_k q^(-k/2)) v^k
        let mut scaled: Vec<f64> = factor
            .iter()
            .enumerate()
            .map(|(k, a)| rat_to_f64(a) / sqrt_q.powi(k as i32))
            .collect();
        let lc = *scaled.last().unwrap();
        for c in scaled.iter_mut() {
            *c /= lc;
        }
        let cp: Vec<Complex64> = scaled.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let scale: f64 = scaled.iter().map(|c| c.abs()).sum();
        let found = match aberth(&cp) {
            Some(z) => z,
            None => companion_roots(&scaled)
                .into_iter()
                .map(|z| newton_polish(&cp, z))
                .collect(),
        };
        for v in found {
            let residual = eval_with_derivative(&cp, v).0.norm() / scale;
            if !residual.is_finite() || residual > 1e-9 {
                return Err(Error::NoConvergence { max_residual: residual });
            }
            out.push(ScaledRoot { v, multiplicity: mult, residual });
        }
    }
    let expected = coeffs.len() - 1;
    let total: usize = out.iter().map(|r| r.multiplicity).sum();
    if total != expected {
        return Err(Error::NoConvergence { max_residual: f64::NAN });
    }
    Ok(out)
}

/// Whether an integer polynomial has a repeated root, decided exactly.
pub fn has_repeated_roots(coeffs: &[i128]) -> bool {
    squarefree_decomposition(coeffs).iter().any(|(_, m)| *m > 1)
}
