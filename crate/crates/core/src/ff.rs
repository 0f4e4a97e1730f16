//! Prime field arithmetic.

use std::fmt;

use crate::error::{Error, Result};

/// The prime field F_q for an odd prime q.
///
/// Carries a precomputed Barrett constant so the polynomial layer can reduce
/// products without a hardware division.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FqContext {
    q: u64,
    barrett: u64,
}

impl FqContext {
    pub fn new(q: u64) -> Result<Self> {
        if q < 3 || q.is_multiple_of(2) || q >= 1 << 32 || !is_prime(q) {
            return Err(Error::InvalidModulus(q));
        }
        Ok(Self { q, barrett: u64::MAX / q })
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Reduces any `x < 2^64` to `[0, q)`.
    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        let est = ((x as u128 * self.barrett as u128) >> 64) as u64;
        let mut r = x - est * self.q;
        while r >= self.q {
            r -= self.q;
        }
        r
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a * b)
    }

    pub fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero residue (Fermat).
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a.is_multiple_of(self.q) {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a % self.q, self.q - 2))
    }

    /// The quadratic character of F_q as a sign, via Euler's criterion.
    pub fn eta(&self, a: u64) -> i8 {
        let a = a % self.q;
        if a == 0 {
            return 0;
        }
        if self.pow(a, (self.q - 1) / 2) == 1 {
            1
        } else {
            -1
        }
    }

    pub fn elem(&self, value: i64) -> FieldElement {
        FieldElement { value: value.rem_euclid(self.q as i64) as u64, ctx: *self }
    }

    /// `(-1)^((q-1)/2)`, the sign that appears in the reciprocity law.
    pub fn minus_one_sign(&self) -> i8 {
        if ((self.q - 1) / 2).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of F_q, stored as its canonical residue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldElement {
    value: u64,
    ctx: FqContext,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn context(&self) -> FqContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn apply(self, op: FieldOp, rhs: FieldElement) -> Result<FieldElement> {
        if self.ctx != rhs.ctx {
            return Err(Error::ContextMismatch(self.ctx.q, rhs.ctx.q));
        }
        let c = &self.ctx;
        let value = match op {
            FieldOp::Add => c.add(self.value, rhs.value),
            FieldOp::Sub => c.sub(self.value, rhs.value),
            FieldOp::Mul => c.mul(self.value, rhs.value),
            FieldOp::Div => c.mul(self.value, c.inv(rhs.value)?),
        };
        Ok(FieldElement { value, ctx: self.ctx })
    }

    /// `self^e`, with `0^0 = 1`.
    pub fn pow(self, e: u64) -> FieldElement {
        FieldElement { value: self.ctx.pow(self.value, e), ctx: self.ctx }
    }

    pub fn quadratic_character(self) -> i8 {
        self.ctx.eta(self.value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
