//! Dense polynomials over F_q.
//!
//! Coefficients are stored constant term first and kept normalized: the
//! leading coefficient is nonzero, and the zero polynomial is the empty
//! vector.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ff::{FieldElement, FqContext};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    ctx: FqContext,
    coeffs: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
}

impl Poly {
    /// Builds a polynomial from residues (reduced mod q), constant term first.
    pub fn new(ctx: FqContext, coeffs: Vec<u64>) -> Self {
        let coeffs = coeffs.into_iter().map(|c| c % ctx.q()).collect();
        Self::from_reduced(ctx, coeffs)
    }

    /// Builds a polynomial from signed integers, constant term first.
    pub fn from_ints(ctx: FqContext, coeffs: &[i64]) -> Self {
        let coeffs = coeffs.iter().map(|&c| ctx.elem(c).value()).collect();
        Self::from_reduced(ctx, coeffs)
    }

    pub(crate) fn from_reduced(ctx: FqContext, mut coeffs: Vec<u64>) -> Self {
        trim(&mut coeffs);
        Self { ctx, coeffs }
    }

    pub fn zero(ctx: FqContext) -> Self {
        Self { ctx, coeffs: Vec::new() }
    }

    pub fn one(ctx: FqContext) -> Self {
        Self { ctx, coeffs: vec![1] }
    }

    pub fn constant(ctx: FqContext, c: u64) -> Self {
        Self::new(ctx, vec![c])
    }

    pub fn x(ctx: FqContext) -> Self {
        Self { ctx, coeffs: vec![0, 1] }
    }

    pub fn context(&self) -> FqContext {
        self.ctx
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FieldElement {
        self.ctx.elem(self.coeffs.get(i).copied().unwrap_or(0) as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> u64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1
    }

    /// Scales to leading coefficient 1. The zero polynomial stays zero.
    pub fn to_monic(&self) -> Self {
        match self.coeffs.last() {
            None | Some(1) => self.clone(),
            Some(&lc) => {
                let inv = self.ctx.inv(lc).expect("leading coefficient is nonzero");
                self.scale(inv)
            }
        }
    }

    pub fn scale(&self, c: u64) -> Self {
        let ctx = self.ctx;
        Self::from_reduced(ctx, self.coeffs.iter().map(|&a| ctx.mul(a, c % ctx.q())).collect())
    }

    pub fn eval(&self, x: u64) -> u64 {
        let x = x % self.ctx.q();
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.ctx.reduce(acc * x + c))
    }

    pub fn apply(&self, op: PolyOp, rhs: &Poly) -> Result<Poly> {
        self.check_ctx(rhs)?;
        Ok(match op {
            PolyOp::Add => self + rhs,
            PolyOp::Sub => self - rhs,
            PolyOp::Mul => self * rhs,
        })
    }

    fn check_ctx(&self, rhs: &Poly) -> Result<()> {
        if self.ctx != rhs.ctx {
            return Err(Error::ContextMismatch(self.ctx.q(), rhs.ctx.q()));
        }
        Ok(())
    }

    /// Quotient and remainder with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Poly) -> Result<(Poly, Poly)> {
        self.check_ctx(divisor)?;
        let Some(dd) = divisor.degree() else {
            return Err(Error::DivisionByZero);
        };
        let ctx = self.ctx;
        let inv_lc = ctx.inv(divisor.leading())?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Poly::zero(ctx), self.clone()));
        }
        let mut quot = vec![0u64; rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = ctx.mul(rem[i + dd], inv_lc);
            quot[i] = c;
            if c != 0 {
                let nc = ctx.neg(c);
                for (j, &b) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] = ctx.reduce(rem[i + j] + nc * b);
                }
            }
        }
        rem.truncate(dd);
        Ok((Poly::from_reduced(ctx, quot), Poly::from_reduced(ctx, rem)))
    }

    pub fn rem(&self, divisor: &Poly) -> Result<Poly> {
        Ok(self.div_rem(divisor)?.1)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Poly) -> Result<Poly> {
        self.check_ctx(other)?;
        if self.is_zero() && other.is_zero() {
            return Err(Error::GcdOfZeros);
        }
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b)?;
            a = b;
            b = r;
        }
        Ok(a.to_monic())
    }

    /// Formal derivative; `d/dx x^q = 0` in characteristic q.
    pub fn derivative(&self) -> Poly {
        let ctx = self.ctx;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| ctx.mul(c, i as u64 % ctx.q()))
            .collect();
        Poly::from_reduced(ctx, coeffs)
    }

    pub fn mul_mod(&self, rhs: &Poly, modulus: &Poly) -> Result<Poly> {
        (self * rhs).rem(modulus)
    }

    pub fn pow_mod(&self, mut e: u128, modulus: &Poly) -> Result<Poly> {
        let mut base = self.rem(modulus)?;
        let mut acc = Poly::one(self.ctx).rem(modulus)?;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_mod(&base, modulus)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_mod(&base, modulus)?;
            }
        }
        Ok(acc)
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.ctx);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// True iff no prime square divides `self`.
    pub fn is_squarefree(&self) -> Result<bool> {
        match self.degree() {
            None => Err(Error::ZeroPolynomial),
            Some(0) => Ok(true),
            Some(_) => {
                let d = self.derivative();
                if d.is_zero() {
                    return Ok(false);
                }
                Ok(self.gcd(&d)?.is_one())
            }
        }
    }

    /// Rabin's test: `x^(q^n) = x mod f` and `gcd(x^(q^(n/l)) - x, f) = 1`
    /// for every prime `l | n`.
    pub fn is_irreducible(&self) -> Result<bool> {
        let n = match self.degree() {
            None => return Err(Error::ZeroPolynomial),
            Some(0) => return Err(Error::ConstantPolynomial),
            Some(n) => n,
        };
        if !self.is_monic() {
            return Err(Error::NotMonic);
        }
        if n == 1 {
            return Ok(true);
        }
        let q = self.ctx.q() as u128;
        let x = Poly::x(self.ctx).rem(self)?;
        // frob[k] = x^(q^k) mod f
        let mut frob = Vec::with_capacity(n + 1);
        frob.push(x.clone());
        for k in 1..=n {
            let next = frob[k - 1].pow_mod(q, self)?;
            frob.push(next);
        }
        if frob[n] != x {
            return Ok(false);
        }
        for l in prime_divisors(n) {
            let h = &frob[n / l] - &x;
            if !h.gcd(self)?.is_one() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Index of a monic polynomial of degree n in `[0, q^n)`:
    /// `sum c_i q^i` over the non-leading coefficients.
    pub fn monic_index(&self) -> u64 {
        let q = self.ctx.q();
        let n = self.coeffs.len().saturating_sub(1);
        self.coeffs[..n].iter().rev().fold(0, |acc, &c| acc * q + c)
    }

    pub fn from_monic_index(ctx: FqContext, n: usize, mut idx: u64) -> Poly {
        let q = ctx.q();
        let mut coeffs = Vec::with_capacity(n + 1);
        for _ in 0..n {
            coeffs.push(idx % q);
            idx /= q;
        }
        coeffs.push(1);
        Poly { ctx, coeffs }
    }

    /// Coefficient vector with signed entries, constant first.
    pub fn to_vec(&self) -> Vec<u64> {
        self.coeffs.clone()
    }

    /// Parses either `x^3+2*x+1` or `[1,2,0,1]` (constant first).
    pub fn parse(ctx: FqContext, s: &str) -> Result<Poly> {
        let s = s.trim();
        if s.starts_with('[') {
            let v: Vec<i64> = serde_json::from_str(s)
                .map_err(|e| Error::Parse(format!("bad coefficient vector {s:?}: {e}")))?;
            return Ok(Poly::from_ints(ctx, &v));
        }
        parse_expr(ctx, s)
    }

    /// Compact vector form `[1,2,0,1]`.
    pub fn to_vector_string(&self) -> String {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        format!("[{}]", parts.join(","))
    }
}

fn trim(coeffs: &mut Vec<u64>) {
    while coeffs.last() == Some(&0) {
        coeffs.pop();
    }
}

fn prime_divisors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn parse_expr(ctx: FqContext, s: &str) -> Result<Poly> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let bad = |msg: &str| Error::Parse(format!("{msg} in {s:?}"));
    let mut acc: Vec<i128> = Vec::new();
    let mut rest = compact.as_str();
    let mut first = true;
    while !rest.is_empty() {
        let mut sign = 1i128;
        if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        } else if let Some(r) = rest.strip_prefix('-') {
            sign = -1;
            rest = r;
        } else if !first {
            return Err(bad("expected '+' or '-'"));
        }
        first = false;
        let end = rest[1..]
            .find(['+', '-'])
            .map(|i| i + 1)
            .unwrap_or(rest.len());
        let term = &rest[..end];
        rest = &rest[end..];
        let (coef, power) = match term.find('x') {
            None => (
                term.parse::<i128>().map_err(|_| bad("bad constant term"))?,
                0usize,
            ),
            Some(pos) => {
                let head = term[..pos].trim_end_matches('*');
                let coef = if head.is_empty() {
                    1
                } else {
                    head.parse::<i128>().map_err(|_| bad("bad coefficient"))?
                };
                let tail = &term[pos + 1..];
                let power = if tail.is_empty() {
                    1
                } else {
                    tail.strip_prefix('^')
                        .ok_or_else(|| bad("expected '^' after x"))?
                        .parse::<usize>()
                        .map_err(|_| bad("bad exponent"))?
                };
                (coef, power)
            }
        };
        if power >= 1 << 16 {
            return Err(bad("exponent too large"));
        }
        if acc.len() <= power {
            acc.resize(power + 1, 0);
        }
        acc[power] += sign * coef;
    }
    let q = ctx.q() as i128;
    Ok(Poly::new(ctx, acc.into_iter().map(|c| c.rem_euclid(q) as u64).collect()))
}

impl FromStr for Poly {
    type Err = Error;

    /// Parses `q:poly`, e.g. `3:x^3+2*x+1`.
    fn from_str(s: &str) -> Result<Self> {
        let (q, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected 'q:poly', got {s:?}")))?;
        let q = q.trim().parse().map_err(|_| Error::Parse(format!("bad modulus in {s:?}")))?;
        Poly::parse(FqContext::new(q)?, body)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, c) {
                (0, _) => write!(f, "{c}")?,
                (1, 1) => write!(f, "x")?,
                (1, _) => write!(f, "{c}*x")?,
                (_, 1) => write!(f, "x^{i}")?,
                _ => write!(f, "{c}*x^{i}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[q={}]({})", self.ctx.q(), self)
    }
}

impl Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

/// Serialized form of a polynomial together with its modulus.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PolyRecord {
    pub q: u64,
    pub coeffs: Vec<u64>,
}

impl PolyRecord {
    pub fn to_poly(&self) -> Result<Poly> {
        Ok(Poly::new(FqContext::new(self.q)?, self.coeffs.clone()))
    }
}

impl From<&Poly> for PolyRecord {
    fn from(p: &Poly) -> Self {
        Self { q: p.ctx.q(), coeffs: p.coeffs.clone() }
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.ctx, rhs.ctx, "polynomials over different fields");
        let ctx = self.ctx;
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (&self.coeffs, &rhs.coeffs)
        } else {
            (&rhs.coeffs, &self.coeffs)
        };
        let mut out = long.clone();
        for (o, &s) in out.iter_mut().zip(short) {
            *o = ctx.add(*o, s);
        }
        Poly::from_reduced(ctx, out)
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        let ctx = self.ctx;
        Poly::from_reduced(ctx, self.coeffs.iter().map(|&c| ctx.neg(c)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.ctx, rhs.ctx, "polynomials over different fields");
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero(self.ctx);
        }
        let ctx = self.ctx;
        let mut out = vec![0u64; self.coeffs.len() + rhs.coeffs.len() - 1];
        mul_into(ctx, &self.coeffs, &rhs.coeffs, &mut out);
        Poly::from_reduced(ctx, out)
    }
}

/// `out[i+j] += a[i] * b[j]`; `out` must be long enough.
#[inline]
pub(crate) fn mul_into(ctx: FqContext, a: &[u64], b: &[u64], out: &mut [u64]) {
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = ctx.reduce(out[i + j] + x * y);
        }
    }
}

/// Guard against accidental `q^n` blowups in enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub u128);

impl Budget {
    pub const DEFAULT: Budget = Budget(100_000_000);
    pub const ENV_VAR: &'static str = "HYPERELL_BUDGET";

    /// Reads `HYPERELL_BUDGET`, falling back to the default.
    pub fn from_env() -> Budget {
        std::env::var(Self::ENV_VAR)
            .ok()
            .and_then(|v| v.trim().replace('_', "").parse::<f64>().ok())
            .filter(|v| *v >= 1.0)
            .map(|v| Budget(v as u128))
            .unwrap_or(Self::DEFAULT)
    }

    pub fn check(&self, needed: u128) -> Result<()> {
        if needed > self.0 {
            return Err(Error::BudgetExceeded { needed, budget: self.0 });
        }
        Ok(())
    }

    /// Checks `q^n` visits, treating overflow as over budget.
    pub fn check_pow(&self, q: u64, n: usize) -> Result<()> {
        let needed = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        self.check(needed)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Iterator over all monic polynomials of degree `n` in increasing
/// [`Poly::monic_index`] order, i.e. lexicographic in the coefficient vector
/// read from `x^(n-1)` down to the constant term.
pub struct MonicIter {
    ctx: FqContext,
    n: usize,
    next: u64,
    end: u64,
    buf: Vec<u64>,
}

impl MonicIter {
    pub fn new(ctx: FqContext, n: usize) -> Result<MonicIter> {
        let total = (ctx.q() as u128)
            .checked_pow(n as u32)
            .filter(|t| *t <= u64::MAX as u128)
            .ok_or(Error::Overflow("monic enumeration size"))? as u64;
        Ok(Self::range(ctx, n, 0, total))
    }

    /// A contiguous shard `[start, end)` of the index range.
    pub fn range(ctx: FqContext, n: usize, start: u64, end: u64) -> MonicIter {
        let buf = Poly::from_monic_index(ctx, n, start).coeffs;
        MonicIter { ctx, n, next: start, end, buf }
    }

    /// Splits degree-n enumeration into blocks of whole leading-coefficient
    /// classes (the coefficient of `x^(n-1)`).
    pub fn shards(ctx: FqContext, n: usize, count: usize) -> Vec<(u64, u64)> {
        let q = ctx.q();
        if n == 0 {
            return vec![(0, 1)];
        }
        let block = q.pow(n as u32 - 1);
        let count = count.clamp(1, q as usize) as u64;
        (0..count)
            .map(|i| (i * q / count * block, (i + 1) * q / count * block))
            .collect()
    }

    /// Visits each polynomial as a coefficient slice without allocating.
    pub fn for_each_slice(mut self, mut f: impl FnMut(&[u64])) {
        let q = self.ctx.q();
        while self.next < self.end {
            f(&self.buf);
            self.next += 1;
            for c in self.buf[..self.n].iter_mut() {
                *c += 1;
                if *c < q {
                    break;
                }
                *c = 0;
            }
        }
    }
}

impl Iterator for MonicIter {
    type Item = Poly;

    fn next(&mut self) -> Option<Poly> {
        if self.next >= self.end {
            return None;
        }
        let out = Poly { ctx: self.ctx, coeffs: self.buf.clone() };
        self.next += 1;
        let q = self.ctx.q();
        for c in self.buf[..self.n].iter_mut() {
            *c += 1;
            if *c < q {
                break;
            }
            *c = 0;
        }
        Some(out)
    }
}

/// All monic polynomials of degree exactly `n`.
pub fn enumerate_monic(ctx: FqContext, n: usize) -> Result<MonicIter> {
    MonicIter::new(ctx, n)
}
