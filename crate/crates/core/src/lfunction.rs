//! The L-polynomial `L(u, chi_D) = sum c_n u^n` of degree `2g`: exact
//! coefficients, evaluation, zeros on `|u| = q^(-1/2)`, and the structural
//! identity checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::{JacobiKernel, QuadraticCharacter};
use crate::error::{Error, Result};
use crate::ff::FqContext;
use crate::poly::{Budget, MonicIter, Poly};
use crate::roots::circle_roots;
use crate::trace::TraceData;

pub const LDATA_SCHEMA: &str = "hyperell.ldata/1";

/// `theta` values closer than this to 0 are reported as zeros at `u = q^(-1/2)`.
pub const THETA_ZERO_FLAG: f64 = 1e-9;
const THETA_WRAP: f64 = 1e-12;

/// Zeros of `L` as angles: `u_j = q^(-1/2) e(theta_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    /// Sorted, in `[0, 1)`, repeated by multiplicity.
    pub thetas: Vec<f64>,
    /// `|u_j| q^(1/2) - 1`, aligned with `thetas`.
    pub root_magnitude_defects: Vec<f64>,
    /// `max |theta_k + theta_{m-1-k} - 1|` before symmetrization.
    pub pairing_defect: f64,
    /// Largest normalized polynomial residual at a computed root.
    pub max_residual: f64,
    /// Some zero has multiplicity > 1 (decided exactly).
    pub repeated: bool,
    /// Some `theta_j < 1e-9`.
    pub zero_at_theta_zero: bool,
}

impl ZeroSet {
    pub fn max_magnitude_defect(&self) -> f64 {
        self.root_magnitude_defects.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Roots `u_j` reconstructed from the angles.
    pub fn roots(&self, q: u64) -> Vec<Complex64> {
        let r = 1.0 / (q as f64).sqrt();
        self.thetas.iter().map(|&t| Complex64::from_polar(r, 2.0 * PI * t)).collect()
    }

    /// Reciprocal roots `alpha_j = q^(1/2) e(-theta_j)`.
    pub fn alphas(&self, q: u64) -> Vec<Complex64> {
        let r = (q as f64).sqrt();
        self.thetas.iter().map(|&t| Complex64::from_polar(r, -2.0 * PI * t)).collect()
    }

    /// Sorted distinct angles (coincident within `1e-9` merged).
    pub fn distinct(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &t in &self.thetas {
            if out.last().is_none_or(|&l| t - l > 1e-9) {
                out.push(t);
            }
        }
        out
    }

    /// Smallest circular gap between distinct zeros.
    pub fn min_gap(&self) -> f64 {
        let d = self.distinct();
        if d.len() < 2 {
            return 1.0;
        }
        let mut gap = 1.0 + d[0] - d[d.len() - 1];
        for w in d.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        gap
    }
}

/// Coefficients of `L(u, chi_D)` and, once computed, its zeros.
#[derive(Clone, Debug)]
pub struct LData {
    chi: QuadraticCharacter,
    coeffs: Vec<i128>,
    zeros: Option<ZeroSet>,
}

impl LData {
    /// Wraps a coefficient vector, checking `c_0 = 1` and the reflection
    /// `c_{2g-n} = q^(g-n) c_n` exactly.
    pub fn from_coeffs(chi: QuadraticCharacter, coeffs: Vec<i128>) -> Result<LData> {
        let g = chi.genus();
        if coeffs.len() != 2 * g + 1 {
            return Err(Error::Precondition(format!(
                "expected {} coefficients, got {}",
                2 * g + 1,
                coeffs.len()
            )));
        }
        if coeffs[0] != 1 {
            return Err(Error::Precondition(format!("c_0 = {} instead of 1", coeffs[0])));
        }
        if let Some(n) = reflection_failure(chi.q(), g, &coeffs)? {
            return Err(Error::Precondition(format!("functional equation fails at n = {n}")));
        }
        Ok(LData { chi, coeffs, zeros: None })
    }

    pub fn character(&self) -> &QuadraticCharacter {
        &self.chi
    }

    pub fn q(&self) -> u64 {
        self.chi.q()
    }

    pub fn genus(&self) -> usize {
        self.chi.genus()
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn zeros(&self) -> Option<&ZeroSet> {
        self.zeros.as_ref()
    }

    /// The zero set; panics if [`compute_zeros`] has not run.
    pub fn zero_set(&self) -> &ZeroSet {
        self.zeros.as_ref().expect("zeros not computed")
    }

    pub fn thetas(&self) -> &[f64] {
        self.zeros.as_ref().map_or(&[], |z| z.thetas.as_slice())
    }

    pub fn with_zeros(mut self, zeros: ZeroSet) -> Self {
        self.zeros = Some(zeros);
        self
    }

    pub fn to_record(&self) -> LDataRecord {
        LDataRecord {
            schema: LDATA_SCHEMA.to_string(),
            q: self.q(),
            g: self.genus(),
            d: self.chi.discriminant().coeffs().to_vec(),
            d_text: self.chi.discriminant().to_string(),
            coeffs: self.coeffs.iter().map(|c| c.to_string()).collect(),
            zeros: self.zeros.clone(),
        }
    }

    pub fn from_record(rec: &LDataRecord) -> Result<LData> {
        if rec.schema != LDATA_SCHEMA {
            return Err(Error::Schema(format!("expected {LDATA_SCHEMA}, found {}", rec.schema)));
        }
        let ctx = FqContext::new(rec.q)?;
        let chi = QuadraticCharacter::new(Poly::new(ctx, rec.d.clone()))?;
        if chi.genus() != rec.g {
            return Err(Error::Schema(format!("g = {} but deg D = {}", rec.g, 2 * chi.genus() + 1)));
        }
        let coeffs = rec
            .coeffs
            .iter()
            .map(|s| s.parse::<i128>().map_err(|e| Error::Parse(format!("coefficient {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut ld = LData::from_coeffs(chi, coeffs)?;
        ld.zeros = rec.zeros.clone();
        Ok(ld)
    }
}

/// JSON form of [`LData`]. Coefficients are decimal strings so readers with
/// narrower integers do not lose precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LDataRecord {
    pub schema: String,
    pub q: u64,
    pub g: usize,
    #[serde(rename = "D")]
    pub d: Vec<u64>,
    #[serde(rename = "D_text")]
    pub d_text: String,
    pub coeffs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none", flatten)]
    pub zeros: Option<ZeroSet>,
}

fn q_pow(q: u64, e: usize) -> Result<i128> {
    (q as i128).checked_pow(e as u32).ok_or(Error::Overflow("q^n"))
}

/// First `n <= g` with `c_{2g-n} != q^(g-n) c_n`, if any.
fn reflection_failure(q: u64, g: usize, c: &[i128]) -> Result<Option<usize>> {
    for n in 0..=g {
        let rhs = q_pow(q, g - n)?
            .checked_mul(c[n])
            .ok_or(Error::Overflow("reflected coefficient"))?;
        if c[2 * g - n] != rhs {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// `sum_{deg f = n, f monic} chi(f)`, sharded over leading-coefficient blocks.
fn character_sum(chi: &QuadraticCharacter, n: usize) -> i128 {
    let ctx = chi.context();
    let shards = MonicIter::shards(ctx, n, 4 * rayon::current_num_threads());
    shards
        .into_par_iter()
        .map(|(start, end)| {
            let mut kernel = JacobiKernel::new(ctx);
            let mut s = 0i128;
            MonicIter::range(ctx, n, start, end).for_each_slice(|f| {
                s += chi.chi_with(&mut kernel, f) as i128;
            });
            s
        })
        .sum()
}

/// `c_n` for `n <= g` by enumeration, the rest by reflection.
pub fn compute_coeffs(chi: &QuadraticCharacter, budget: Budget) -> Result<LData> {
    let q = chi.q();
    let g = chi.genus();
    budget.check_pow(q, g)?;
    let mut c = vec![0i128; 2 * g + 1];
    for n in 0..=g {
        c[n] = character_sum(chi, n);
    }
    for n in 0..g {
        c[2 * g - n] = q_pow(q, g - n)?
            .checked_mul(c[n])
            .ok_or(Error::Overflow("reflected coefficient"))?;
    }
    LData::from_coeffs(chi.clone(), c)
}

/// `c_n` for every `n <= 2g` by direct enumeration. Test oracle.
pub fn coeffs_oracle_full(chi: &QuadraticCharacter, budget: Budget) -> Result<Vec<i128>> {
    budget.check_pow(chi.q(), 2 * chi.genus())?;
    Ok((0..=2 * chi.genus()).map(|n| character_sum(chi, n)).collect())
}

/// Whether `c` is the coefficient vector of
/// `sum_{deg f <= g} chi(f) u^deg f + (q u^2)^g sum_{deg f <= g-1} chi(f) (qu)^(-deg f)`
/// built from its own first `g + 1` entries. Exact.
pub fn afe_holds(q: u64, g: usize, c: &[i128]) -> bool {
    if c.len() != 2 * g + 1 {
        return false;
    }
    let mut rhs = vec![0i128; 2 * g + 1];
    rhs[..=g].copy_from_slice(&c[..=g]);
    for n in 0..g {
        // (q u^2)^g (q u)^(-n) = q^(g-n) u^(2g-n)
        match q_pow(q, g - n).ok().and_then(|p| p.checked_mul(c[n])) {
            Some(v) => rhs[2 * g - n] += v,
            None => return false,
        }
    }
    rhs == c
}

pub fn afe_check(ld: &LData) -> bool {
    afe_holds(ld.q(), ld.genus(), ld.coeffs())
}

/// `L(u)` by Horner.
pub fn lvalue(ld: &LData, u: Complex64) -> Complex64 {
    horner(ld.coeffs(), u)
}

pub(crate) fn horner(c: &[i128], u: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &cn| acc * u + cn as f64)
}

/// `sum |c_n| q^(-n/2)`, the natural size of `L` on the critical circle.
pub fn circle_scale(ld: &LData) -> f64 {
    let s = (ld.q() as f64).sqrt();
    ld.coeffs()
        .iter()
        .enumerate()
        .map(|(n, &c)| (c as f64).abs() / s.powi(n as i32))
        .sum()
}

/// Finds the `2g` zeros and stores them as sorted angles.
pub fn compute_zeros(ld: LData) -> Result<LData> {
    let zeros = find_zeros(ld.coeffs(), ld.q())?;
    Ok(ld.with_zeros(zeros))
}

pub fn find_zeros(coeffs: &[i128], q: u64) -> Result<ZeroSet> {
    if coeffs.last().is_none_or(|&c| c == 0) {
        return Err(Error::Precondition("leading coefficient is zero".into()));
    }
    let roots = circle_roots(coeffs, q)?;
    let mut entries: Vec<(f64, f64)> = Vec::with_capacity(coeffs.len() - 1);
    let mut max_residual: f64 = 0.0;
    let mut repeated = false;
    for r in &roots {
        let theta = normalize_theta(r.v.arg() / (2.0 * PI));
        for _ in 0..r.multiplicity {
            entries.push((theta, r.v.norm() - 1.0));
        }
        max_residual = max_residual.max(r.residual);
        repeated |= r.multiplicity > 1;
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut thetas: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let defects = entries.iter().map(|e| e.1).collect();
    let zero_at_theta_zero = thetas.iter().any(|&t| t < THETA_ZERO_FLAG || 1.0 - t < THETA_ZERO_FLAG);
    let pairing_defect = symmetrize(&mut thetas);
    Ok(ZeroSet {
        thetas,
        root_magnitude_defects: defects,
        pairing_defect,
        max_residual,
        repeated,
        zero_at_theta_zero,
    })
}

fn normalize_theta(t: f64) -> f64 {
    let t = if t < 0.0 { t + 1.0 } else { t };
    if !(THETA_WRAP..1.0 - THETA_WRAP).contains(&t) {
        0.0
    } else {
        t
    }
}

/// Enforces `theta <-> 1 - theta` on a sorted list, returning the largest
/// pairing discrepancy seen before the adjustment.
fn symmetrize(thetas: &mut [f64]) -> f64 {
    let start = thetas.iter().take_while(|&&t| t == 0.0).count();
    let rest = &mut thetas[start..];
    let m = rest.len();
    let mut defect: f64 = 0.0;
    for k in 0..m / 2 {
        let (a, b) = (rest[k], rest[m - 1 - k]);
        defect = defect.max((a + b - 1.0).abs());
        let t = 0.5 * (a + 1.0 - b);
        rest[k] = t;
        rest[m - 1 - k] = 1.0 - t;
    }
    if m % 2 == 1 {
        defect = defect.max((rest[m / 2] - 0.5).abs() * 2.0);
        rest[m / 2] = 0.5;
    }
    defect
}

/// `sum_j e(-n theta_j)`; real up to rounding because zeros pair up.
pub fn zero_power_sum(ld: &LData, n: usize) -> Complex64 {
    ld.thetas()
        .iter()
        .map(|&t| Complex64::from_polar(1.0, -2.0 * PI * n as f64 * t))
        .sum()
}

/// `| -sum_j e(-n theta_j) - q^(-n/2) psi(n) |`.
pub fn trace_defect(ld: &LData, n: usize, psi_n: i128) -> f64 {
    let lhs = -zero_power_sum(ld, n);
    let rhs = psi_n as f64 / (ld.q() as f64).powf(n as f64 / 2.0);
    (lhs - rhs).norm()
}

/// Trace-formula defects for `n = 1..=2g`.
pub fn trace_check(ld: &LData, trace: &TraceData) -> Vec<f64> {
    (1..=2 * ld.genus()).map(|n| trace_defect(ld, n, trace.psi(n))).collect()
}

/// Affine plus one point at infinity on `y^2 = D(x)` over F_q, against
/// `q + 1 + psi(1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCount {
    pub n1: i128,
    pub psi1: i128,
    /// `|N_1 - q - 1 - psi(1)|`, an exact integer.
    pub defect: i128,
    /// `|N_1 - q - 1 + q^(1/2) sum_j e(-theta_j)|` when zeros are known.
    pub zero_side_defect: Option<f64>,
}

pub fn point_count_check(ld: &LData) -> Result<PointCount> {
    let chi = ld.character();
    let ctx = chi.context();
    let q = ctx.q();
    let d = chi.discriminant();
    let n1: i128 = 1 + (0..q).map(|x| 1 + ctx.eta(d.eval(x)) as i128).sum::<i128>();
    let mut psi1 = 0i128;
    for a in 0..q {
        psi1 += chi.chi(&Poly::new(ctx, vec![a, 1]))? as i128;
    }
    let zero_side_defect = ld.zeros().map(|_| {
        let s = zero_power_sum(ld, 1).re * (q as f64).sqrt();
        (n1 as f64 - q as f64 - 1.0 + s).abs()
    });
    Ok(PointCount { n1, psi1, defect: (n1 - q as i128 - 1 - psi1).abs(), zero_side_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::PrimeTable;

    fn chi(q: u64, s: &str) -> QuadraticCharacter {
        QuadraticCharacter::new(Poly::parse(FqContext::new(q).unwrap(), s).unwrap()).unwrap()
    }

    fn ld(q: u64, s: &str) -> LData {
        compute_zeros(compute_coeffs(&chi(q, s), Budget::DEFAULT).unwrap()).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let c = chi(3, "x^3+2*x+1");
        let l = compute_coeffs(&c, Budget::DEFAULT).unwrap();
        let ctx = c.context();
        let c1: i128 = (0..3)
            .map(|a| c.chi(&Poly::new(ctx, vec![a, 1])).unwrap() as i128)
            .sum();
        assert_eq!(l.coeffs(), &[1, c1, 3]);
        assert_eq!(coeffs_oracle_full(&c, Budget::DEFAULT).unwrap(), l.coeffs());
    }

    #[test]
    fn coefficients_match_factorization_oracle() {
        let c = chi(3, "x^5+2*x+1");
        let table = PrimeTable::build(c.context(), 2, Budget::DEFAULT).unwrap();
        let l = compute_coeffs(&c, Budget::DEFAULT).unwrap();
        for n in 0..=2 {
            let s: i128 = crate::poly::enumerate_monic(c.context(), n)
                .unwrap()
                .map(|f| {
                    crate::characters::jacobi_factored(c.discriminant(), &f, &table).unwrap() as i128
                })
                .sum();
            assert_eq!(l.coeffs()[n], s);
        }
    }

    #[test]
    fn afe_detects_perturbation() {
        let l = compute_coeffs(&chi(3, "x^5+2*x+1"), Budget::DEFAULT).unwrap();
        assert!(afe_check(&l));
        let mut c = l.coeffs().to_vec();
        c[1] += 1;
        assert!(!afe_holds(3, 2, &c));
    }

    #[test]
    fn budget_is_enforced() {
        let c = chi(3, "x^5+2*x+1");
        assert!(matches!(
            coeffs_oracle_full(&c, Budget(10)),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn reflection_is_validated() {
        let c = chi(3, "x^3+2*x+1");
        assert!(LData::from_coeffs(c.clone(), vec![1, 0, 2]).is_err());
        assert!(LData::from_coeffs(c.clone(), vec![2, 0, 6]).is_err());
        assert!(LData::from_coeffs(c, vec![1, 0, 3]).is_ok());
    }

    #[test]
    fn lvalue_examples() {
        let l = ld(3, "x^3+2*x+1");
        assert_eq!(lvalue(&l, Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        let u: f64 = 0.1;
        let termwise: f64 = l.coeffs().iter().enumerate().map(|(n, &c)| c as f64 * u.powi(n as i32)).sum();
        assert!((lvalue(&l, Complex64::new(u, 0.0)).re - termwise).abs() < 1e-14);
        for r in l.zero_set().roots(3) {
            assert!(lvalue(&l, r).norm() < 1e-8 * circle_scale(&l));
        }
    }

    #[test]
    fn zeros_lie_on_the_circle_and_pair_up() {
        for (q, s) in [(3, "x^3+2*x+1"), (3, "x^5+2*x+1"), (5, "x^7+x+2")] {
            let l = ld(q, s);
            let z = l.zero_set();
            assert_eq!(z.thetas.len(), 2 * l.genus());
            assert!(z.max_magnitude_defect() < 1e-10);
            assert!(z.pairing_defect < 1e-9);
            assert!(z.thetas.windows(2).all(|w| w[0] <= w[1]));
            let mut mirrored: Vec<f64> = z.thetas.iter().map(|t| if *t == 0.0 { 0.0 } else { 1.0 - t }).collect();
            mirrored.sort_by(f64::total_cmp);
            for (a, b) in z.thetas.iter().zip(&mirrored) {
                assert!((a - b).abs() < 1e-9);
            }
            // q^g prod (u - u_j) re-expands to c_n
            let mut p = vec![Complex64::new(1.0, 0.0)];
            for r in z.roots(q) {
                let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
                for (i, &c) in p.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= r * c;
                }
                p = next;
            }
            let lead = (q as f64).powi(l.genus() as i32);
            for (n, &c) in l.coeffs().iter().enumerate() {
                let v = p[n] * lead;
                assert!((v.re - c as f64).abs() <= 1e-8 * (c as f64).abs().max(1.0), "{s} c_{n}");
                assert!(v.im.abs() < 1e-8 * lead);
            }
        }
    }

    #[test]
    fn trace_formula_holds() {
        let l = ld(3, "x^5+2*x+1");
        let table = PrimeTable::build(l.character().context(), 4, Budget::DEFAULT).unwrap();
        let trace = TraceData::from_primes(l.character(), &table).unwrap();
        for (n, d) in trace_check(&l, &trace).into_iter().enumerate() {
            assert!(d < 1e-8, "n={} defect {d}", n + 1);
            assert!(zero_power_sum(&l, n + 1).im.abs() < 1e-9);
        }
    }

    #[test]
    fn point_count_agrees() {
        let l = ld(3, "x^3+2*x+1");
        let pc = point_count_check(&l).unwrap();
        assert_eq!(pc.defect, 0);
        assert!(pc.zero_side_defect.unwrap() < 1e-9);
        // y^2 = x^3 + 2x + 1 over F_3: D(0) = 1, D(1) = 1, D(2) = 1
        assert_eq!(pc.n1, 1 + 3 * 2);
    }

    #[test]
    fn json_round_trip() {
        let l = ld(3, "x^5+2*x+1");
        let text = serde_json::to_string(&l.to_record()).unwrap();
        let back = LData::from_record(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.coeffs(), l.coeffs());
        assert_eq!(back.thetas(), l.thetas());
        let again = compute_zeros(LData::from_coeffs(back.character().clone(), back.coeffs().to_vec()).unwrap()).unwrap();
        assert_eq!(again.thetas(), l.thetas());
    }

    #[test]
    fn symmetrize_handles_theta_zero_and_half() {
        let mut t = vec![0.0, 0.2, 0.5 + 1e-15, 0.8 + 1e-14];
        let d = symmetrize(&mut t);
        assert!(d < 1e-13);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[2], 0.5);
        assert!((t[1] + t[3] - 1.0).abs() < 1e-16);
    }
}
