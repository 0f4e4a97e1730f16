//! Prime (monic irreducible) polynomials: sieve tables, counting formulas,
//! von Mangoldt, and trial-division factorization.

use crate::error::{Error, Result};
use crate::ff::FqContext;
use crate::poly::{mul_into, Budget, MonicIter, Poly};

/// Möbius function.
pub fn mobius(mut n: u64) -> i64 {
    if n == 0 {
        return 0;
    }
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Number of monic irreducibles of degree `n` over F_q:
/// `(1/n) sum_{d | n} mu(d) q^(n/d)`.
pub fn prime_count(q: u64, n: usize) -> Result<i128> {
    if n == 0 {
        return Ok(0);
    }
    let mut total: i128 = 0;
    for d in 1..=n {
        if !n.is_multiple_of(d) {
            continue;
        }
        let term = (q as i128)
            .checked_pow((n / d) as u32)
            .ok_or(Error::Overflow("prime count"))?;
        total += mobius(d as u64) as i128 * term;
    }
    Ok(total / n as i128)
}

/// All monic irreducibles of degree `1..=max_degree`, stored as
/// [`Poly::monic_index`] values in increasing order.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    ctx: FqContext,
    by_degree: Vec<Vec<u64>>,
}

impl PrimeTable {
    /// Sieves each degree by marking products `P * h` with `deg P <= n/2`,
    /// then checks every count against the Möbius formula.
    pub fn build(ctx: FqContext, max_degree: usize, budget: Budget) -> Result<PrimeTable> {
        if max_degree == 0 {
            return Err(Error::Precondition("prime table needs max_degree >= 1".into()));
        }
        budget.check_pow(ctx.q(), max_degree)?;
        let q = ctx.q();
        let mut by_degree: Vec<Vec<u64>> = vec![Vec::new(); max_degree + 1];
        by_degree[1] = (0..q).collect();
        let mut prod = Vec::new();
        for n in 2..=max_degree {
            let size = q.pow(n as u32) as usize;
            let mut composite = vec![false; size];
            for d in 1..=n / 2 {
                for &pi in &by_degree[d] {
                    let p = Poly::from_monic_index(ctx, d, pi);
                    MonicIter::new(ctx, n - d)?.for_each_slice(|h| {
                        prod.clear();
                        prod.resize(n + 1, 0);
                        mul_into(ctx, p.coeffs(), h, &mut prod);
                        let idx = prod[..n].iter().rev().fold(0u64, |acc, &c| acc * q + c);
                        composite[idx as usize] = true;
                    });
                }
            }
            by_degree[n] = composite
                .iter()
                .enumerate()
                .filter(|(_, &c)| !c)
                .map(|(i, _)| i as u64)
                .collect();
        }
        let table = PrimeTable { ctx, by_degree };
        for n in 1..=max_degree {
            let expected = prime_count(q, n)?;
            if table.count(n) as i128 != expected {
                return Err(Error::Precondition(format!(
                    "sieve found {} primes of degree {n}, Möbius formula gives {expected}",
                    table.count(n)
                )));
            }
        }
        Ok(table)
    }

    pub fn context(&self) -> FqContext {
        self.ctx
    }

    pub fn max_degree(&self) -> usize {
        self.by_degree.len() - 1
    }

    pub fn count(&self, n: usize) -> usize {
        self.by_degree.get(n).map_or(0, Vec::len)
    }

    pub fn indices(&self, n: usize) -> &[u64] {
        self.by_degree.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn primes(&self, n: usize) -> impl Iterator<Item = Poly> + '_ {
        let ctx = self.ctx;
        self.indices(n).iter().map(move |&i| Poly::from_monic_index(ctx, n, i))
    }

    /// Runs Rabin's test on every entry of degree `<= up_to`.
    pub fn certify(&self, up_to: usize) -> Result<()> {
        for n in 1..=up_to.min(self.max_degree()) {
            for p in self.primes(n) {
                if !p.is_irreducible()? {
                    return Err(Error::Precondition(format!("table entry {p} is reducible")));
                }
            }
        }
        Ok(())
    }

    /// Factorization of a monic polynomial into (prime, exponent) pairs by
    /// trial division. Needs `max_degree >= deg f / 2`.
    pub fn factor(&self, f: &Poly) -> Result<Vec<(Poly, u32)>> {
        let n = f.degree().ok_or(Error::ZeroPolynomial)?;
        if !f.is_monic() {
            return Err(Error::NotMonic);
        }
        if n / 2 > self.max_degree() {
            return Err(Error::Precondition(format!(
                "factoring degree {n} needs primes up to degree {}",
                n / 2
            )));
        }
        let mut rest = f.clone();
        let mut out = Vec::new();
        'outer: for d in 1..=self.max_degree() {
            for p in self.primes(d) {
                let rd = rest.degree().unwrap_or(0);
                if 2 * d > rd {
                    break 'outer;
                }
                let mut e = 0;
                loop {
                    let (quo, rem) = rest.div_rem(&p)?;
                    if !rem.is_zero() {
                        break;
                    }
                    rest = quo;
                    e += 1;
                }
                if e > 0 {
                    out.push((p, e));
                }
            }
        }
        if rest.degree().unwrap_or(0) > 0 {
            match out.iter_mut().find(|(p, _)| *p == rest) {
                Some((_, e)) => *e += 1,
                None => out.push((rest, 1)),
            }
        }
        out.sort_by(|a, b| {
            (a.0.degree(), a.0.monic_index()).cmp(&(b.0.degree(), b.0.monic_index()))
        });
        Ok(out)
    }
}

/// `deg P` if `f = P^k` for a prime `P` and `k >= 1`, else 0.
///
/// Finds the smallest-degree irreducible factors by distinct-degree
/// splitting, so no table is needed.
pub fn von_mangoldt(f: &Poly) -> Result<u32> {
    let n = match f.degree() {
        None => return Err(Error::ZeroPolynomial),
        Some(0) => return Err(Error::ConstantPolynomial),
        Some(n) => n,
    };
    if !f.is_monic() {
        return Err(Error::NotMonic);
    }
    let ctx = f.context();
    let x = Poly::x(ctx);
    let mut frob = x.rem(f)?;
    for d in 1..=n {
        frob = frob.pow_mod(ctx.q() as u128, f)?;
        let g = (&frob - &x).gcd(f)?;
        if g.is_one() {
            continue;
        }
        // g is the product of all distinct degree-d primes dividing f
        if g.degree() != Some(d) {
            return Ok(0);
        }
        let mut rest = f.clone();
        while !rest.is_one() {
            let (quo, rem) = rest.div_rem(&g)?;
            if !rem.is_zero() {
                return Ok(0);
            }
            rest = quo;
        }
        return Ok(d as u32);
    }
    unreachable!("x^(q^n) - x is divisible by every prime factor of f")
}
