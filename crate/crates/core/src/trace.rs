//! Character sums over prime powers, `psi(n) = sum_{deg f = n} Lambda(f) chi_D(f)`,
//! and their normalized values `t_k = q^(-k/2) psi(k)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::{JacobiKernel, QuadraticCharacter};
use crate::error::{Error, Result};
use crate::primes::PrimeTable;

/// Per-degree prime sums `a_d = sum chi(P)` and `b_d = #{P : chi(P) != 0}`
/// over primes of degree `d`.
#[derive(Clone, Debug)]
pub struct PrimeCharacterSums {
    a: Vec<i128>,
    b: Vec<i128>,
}

impl PrimeCharacterSums {
    pub fn compute(chi: &QuadraticCharacter, table: &PrimeTable, max_degree: usize) -> Result<Self> {
        if table.context() != chi.context() {
            return Err(Error::ContextMismatch(table.context().q(), chi.q()));
        }
        if max_degree > table.max_degree() {
            return Err(Error::Precondition(format!(
                "prime sums to degree {max_degree} need a table of that degree (have {})",
                table.max_degree()
            )));
        }
        let ctx = chi.context();
        let mut a = vec![0i128; max_degree + 1];
        let mut b = vec![0i128; max_degree + 1];
        for d in 1..=max_degree {
            let chunk = (table.count(d) / (4 * rayon::current_num_threads())).max(256);
            let (sa, sb) = table
                .indices(d)
                .par_chunks(chunk)
                .map(|idx| {
                    let mut kernel = JacobiKernel::new(ctx);
                    let mut buf = vec![0u64; d + 1];
                    let (mut sa, mut sb) = (0i128, 0i128);
                    for &i in idx {
                        decode_monic(ctx.q(), d, i, &mut buf);
                        let s = chi.chi_with(&mut kernel, &buf);
                        sa += s as i128;
                        sb += (s != 0) as i128;
                    }
                    (sa, sb)
                })
                .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
            a[d] = sa;
            b[d] = sb;
        }
        Ok(Self { a, b })
    }

    pub fn max_degree(&self) -> usize {
        self.a.len() - 1
    }

    /// `psi(n)` for `n <= max_degree`: each prime `P` of degree `d | n`
    /// contributes `d * chi(P)^(n/d)`.
    pub fn psi(&self, n: usize) -> i128 {
        assert!(n >= 1 && n <= self.max_degree(), "psi({n}) outside the computed range");
        (1..=n)
            .filter(|d| n.is_multiple_of(*d))
            .map(|d| {
                let s = if (n / d) % 2 == 1 { self.a[d] } else { self.b[d] };
                d as i128 * s
            })
            .sum()
    }
}

fn decode_monic(q: u64, n: usize, mut idx: u64, buf: &mut [u64]) {
    for c in buf[..n].iter_mut() {
        *c = idx % q;
        idx /= q;
    }
    buf[n] = 1;
}

/// `psi(n)` over prime powers from a prime table of degree `>= n`.
pub fn psi_sum(chi: &QuadraticCharacter, n: usize, table: &PrimeTable) -> Result<i128> {
    if n == 0 {
        return Err(Error::Precondition("psi(n) needs n >= 1".into()));
    }
    Ok(PrimeCharacterSums::compute(chi, table, n)?.psi(n))
}

/// `psi(1..=2g)` from the prime side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceData {
    /// `psi[n - 1] = psi(n)`.
    pub psi: Vec<i128>,
}

impl TraceData {
    pub fn from_primes(chi: &QuadraticCharacter, table: &PrimeTable) -> Result<Self> {
        let n = 2 * chi.genus();
        let sums = PrimeCharacterSums::compute(chi, table, n)?;
        Ok(Self { psi: (1..=n).map(|k| sums.psi(k)).collect() })
    }

    pub fn psi(&self, n: usize) -> i128 {
        self.psi[n - 1]
    }
}

/// `psi(k)` for `k = 1..=K` from the L-polynomial coefficients through
/// Newton's identities, exact in big integers for any `K`.
///
/// With `L(u) = prod (1 - alpha_j u)` the power sums `p_k = sum alpha_j^k`
/// satisfy `p_n = -n c_n - sum_{k<n} c_{n-k} p_k`, and `psi(k) = -p_k`.
#[derive(Clone, Debug)]
pub struct TraceTable {
    q: u64,
    psi: Vec<BigInt>,
    normalized: Vec<f64>,
}

impl TraceTable {
    pub fn new(q: u64, coeffs: &[i128], k_max: usize) -> Self {
        let c: Vec<BigInt> = coeffs.iter().map(|&x| BigInt::from(x)).collect();
        let coeff = |n: usize| -> Option<&BigInt> { c.get(n) };
        let mut p: Vec<BigInt> = vec![BigInt::zero(); k_max + 1];
        for n in 1..=k_max {
            let mut acc = match coeff(n) {
                Some(cn) => -(cn * BigInt::from(n)),
                None => BigInt::zero(),
            };
            for k in 1..n {
                if let Some(cnk) = coeff(n - k) {
                    acc -= cnk * &p[k];
                }
            }
            p[n] = acc;
        }
        let psi: Vec<BigInt> = p.into_iter().map(|x| -x).collect();
        let sqrt_q = (q as f64).sqrt();
        let normalized = psi
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k == 0 {
                    return 0.0;
                }
                // q^(-k/2) psi(k) = psi(k) / q^floor(k/2) / q^((k mod 2)/2)
                let den = BigInt::from(q).pow((k / 2) as u32);
                let r = BigRational::new(v.clone(), den).to_f64().unwrap_or(f64::NAN);
                if k % 2 == 1 {
                    r / sqrt_q
                } else {
                    r
                }
            })
            .collect();
        Self { q, psi, normalized }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn k_max(&self) -> usize {
        self.psi.len() - 1
    }

    pub fn psi(&self, k: usize) -> &BigInt {
        &self.psi[k]
    }

    /// `psi(k)` as `i128` if it fits.
    pub fn psi_i128(&self, k: usize) -> Option<i128> {
        self.psi[k].to_i128()
    }

    /// `t_k = q^(-k/2) psi(k)`; `|t_k| <= 2g`.
    pub fn normalized(&self, k: usize) -> f64 {
        self.normalized[k]
    }

    /// `t_1..t_K` (index 0 is unused and zero).
    pub fn normalized_slice(&self, k: usize) -> &[f64] {
        &self.normalized[..=k]
    }
}

/// Trace values for a single `chi` evaluated by direct summation of
/// `Lambda(f) chi(f)` over all monic `f` of degree `n`. Test oracle only.
pub fn psi_bruteforce(chi: &QuadraticCharacter, n: usize) -> Result<i128> {
    let mut total = 0i128;
    for f in crate::poly::enumerate_monic(chi.context(), n)? {
        let lambda = crate::primes::von_mangoldt(&f)?;
        if lambda != 0 {
            total += lambda as i128 * chi.chi(&f)? as i128;
        }
    }
    Ok(total)
}
