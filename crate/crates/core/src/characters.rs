//! Quadratic residue and Jacobi symbols over F_q[x], and the character
//! `chi_D(f) = (D / f)` attached to a discriminant `D`.

use crate::error::{Error, Result};
use crate::ff::FqContext;
use crate::poly::Poly;
use crate::primes::PrimeTable;

/// `(f / P)` for a prime `P` by Euler's criterion: `f^((|P|-1)/2) mod P`
/// is the constant `+1` or `-1`.
pub fn residue_symbol(f: &Poly, p: &Poly) -> Result<i8> {
    if !p.is_irreducible()? {
        return Err(Error::NotIrreducible);
    }
    let ctx = p.context();
    let d = p.degree().expect("irreducible has positive degree") as u32;
    let norm = (ctx.q() as u128)
        .checked_pow(d)
        .ok_or(Error::Overflow("residue field size"))?;
    let r = f.rem(p)?;
    if r.is_zero() {
        return Ok(0);
    }
    let e = r.pow_mod((norm - 1) / 2, p)?;
    match e.coeffs() {
        [1] => Ok(1),
        [c] if *c == ctx.q() - 1 => Ok(-1),
        _ => unreachable!("Euler criterion yields +-1 modulo a prime"),
    }
}

/// Jacobi symbol `(A / Q)` from the factorization of `Q`. Kept as the
/// reference implementation for [`jacobi`].
pub fn jacobi_factored(a: &Poly, q: &Poly, table: &PrimeTable) -> Result<i8> {
    check_modulus(a, q)?;
    if q.is_one() {
        return Ok(1);
    }
    let mut acc = 1i8;
    for (p, e) in table.factor(q)? {
        let s = residue_symbol(a, &p)?;
        if s == 0 {
            return Ok(0);
        }
        if e % 2 == 1 {
            acc *= s;
        }
    }
    Ok(acc)
}

/// Jacobi symbol `(A / Q)` by Euclidean descent with Artin reciprocity.
pub fn jacobi(a: &Poly, q: &Poly) -> Result<i8> {
    check_modulus(a, q)?;
    Ok(JacobiKernel::new(q.context()).symbol(a.coeffs(), q.coeffs()))
}

fn check_modulus(a: &Poly, q: &Poly) -> Result<()> {
    if a.context() != q.context() {
        return Err(Error::ContextMismatch(a.context().q(), q.context().q()));
    }
    if q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if !q.is_monic() {
        return Err(Error::NotMonic);
    }
    Ok(())
}

/// Allocation-free Jacobi symbol evaluator with cached inverse and
/// quadratic-character tables. One per worker.
pub struct JacobiKernel {
    ctx: FqContext,
    inv: Vec<u64>,
    eta: Vec<i8>,
    a: Vec<u64>,
    b: Vec<u64>,
    reciprocity_sign: bool,
}

const TABLE_LIMIT: u64 = 1 << 16;

impl JacobiKernel {
    pub fn new(ctx: FqContext) -> Self {
        let q = ctx.q();
        let (inv, eta) = if q <= TABLE_LIMIT {
            let inv = (0..q).map(|x| if x == 0 { 0 } else { ctx.inv(x).unwrap() }).collect();
            let eta = (0..q).map(|x| ctx.eta(x)).collect();
            (inv, eta)
        } else {
            (Vec::new(), Vec::new())
        };
        Self {
            ctx,
            inv,
            eta,
            a: Vec::with_capacity(64),
            b: Vec::with_capacity(64),
            // (-1)^((q-1)/2) = -1 iff q = 3 mod 4
            reciprocity_sign: q % 4 == 3,
        }
    }

    #[inline]
    fn inv(&self, x: u64) -> u64 {
        if self.inv.is_empty() {
            self.ctx.inv(x).unwrap()
        } else {
            self.inv[x as usize]
        }
    }

    #[inline]
    fn eta(&self, x: u64) -> i8 {
        if self.eta.is_empty() {
            self.ctx.eta(x)
        } else {
            self.eta[x as usize]
        }
    }

    /// `(A / B)` for normalized coefficient slices, `B` monic and nonzero.
    pub fn symbol(&mut self, a: &[u64], b: &[u64]) -> i8 {
        debug_assert_eq!(b.last(), Some(&1));
        let ctx = self.ctx;
        let mut x = std::mem::take(&mut self.a);
        let mut y = std::mem::take(&mut self.b);
        x.clear();
        x.extend_from_slice(a);
        y.clear();
        y.extend_from_slice(b);
        let mut sign = 1i8;
        let result = loop {
            let db = y.len() - 1;
            if db == 0 {
                break sign;
            }
            rem_monic(ctx, &mut x, &y);
            let Some(&lc) = x.last() else {
                break 0;
            };
            if lc != 1 {
                // (c / B) = eta(c)^deg B
                if db % 2 == 1 && self.eta(lc) == -1 {
                    sign = -sign;
                }
                let inv = self.inv(lc);
                for c in x.iter_mut() {
                    *c = ctx.mul(*c, inv);
                }
            }
            let da = x.len() - 1;
            if da == 0 {
                break sign;
            }
            if self.reciprocity_sign && da % 2 == 1 && db % 2 == 1 {
                sign = -sign;
            }
            std::mem::swap(&mut x, &mut y);
        };
        self.a = x;
        self.b = y;
        result
    }
}

/// `a <- a mod b` for monic `b`, trimmed.
#[inline]
fn rem_monic(ctx: FqContext, a: &mut Vec<u64>, b: &[u64]) {
    let db = b.len() - 1;
    if a.len() > db {
        for i in (0..a.len() - db).rev() {
            let c = a[i + db];
            if c != 0 {
                let nc = ctx.q() - c;
                for j in 0..db {
                    a[i + j] = ctx.reduce(a[i + j] + nc * b[j]);
                }
                a[i + db] = 0;
            }
        }
        a.truncate(db);
    }
    while a.last() == Some(&0) {
        a.pop();
    }
}

/// The quadratic character attached to a monic square-free `D` of odd
/// degree `2g + 1 >= 3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticCharacter {
    d: Poly,
    genus: usize,
}

impl QuadraticCharacter {
    pub fn new(d: Poly) -> Result<Self> {
        let deg = d.degree().ok_or(Error::ZeroPolynomial)?;
        if !d.is_monic() {
            return Err(Error::InvalidCharacter(format!("{d} is not monic")));
        }
        if deg < 3 || deg % 2 == 0 {
            return Err(Error::InvalidCharacter(format!(
                "degree {deg} is not of the form 2g+1 with g >= 1"
            )));
        }
        if !d.is_squarefree()? {
            return Err(Error::InvalidCharacter(format!("{d} is not square-free")));
        }
        Ok(Self { d, genus: (deg - 1) / 2 })
    }

    pub fn discriminant(&self) -> &Poly {
        &self.d
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn context(&self) -> FqContext {
        self.d.context()
    }

    pub fn q(&self) -> u64 {
        self.d.context().q()
    }

    /// `chi_D(f) = (D / f)` for monic `f`; `chi_D(1) = 1`.
    pub fn chi(&self, f: &Poly) -> Result<i8> {
        jacobi(&self.d, f)
    }

    /// Same as [`chi`](Self::chi) on a raw monic coefficient slice, reusing
    /// the caller's kernel.
    pub fn chi_with(&self, kernel: &mut JacobiKernel, f: &[u64]) -> i8 {
        kernel.symbol(self.d.coeffs(), f)
    }
}
