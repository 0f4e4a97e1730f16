//! Truncated Euler products `P_K`, zero-side tails `Z_K`, the factorization
//! `L = P_K Z_K` on the closed disk `|u| <= q^(-1/2)`, and truncation-error
//! profiles.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfunction::{lvalue, LData};
use crate::trace::TraceTable;

/// Distance to a zero below which `Z_K` is taken to vanish exactly.
const SINGULAR: f64 = 1e-14;

/// Default exclusion radius around zeros for boundary checks.
pub const NEAR_ZERO: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridEval {
    pub u: Complex64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: Complex64,
    #[serde(rename = "P_K")]
    pub p_k: Complex64,
    #[serde(rename = "Z_K")]
    pub z_k: Complex64,
    pub defect: f64,
}

/// An L-function with its zeros and cached `psi(k)` for `k <= k_max`.
pub struct Hybrid<'a> {
    ld: &'a LData,
    trace: TraceTable,
    alphas: Vec<Complex64>,
}

impl<'a> Hybrid<'a> {
    /// `ld` must have zeros computed.
    pub fn new(ld: &'a LData, k_max: usize) -> Self {
        let q = ld.q();
        Hybrid {
            ld,
            trace: TraceTable::new(q, ld.coeffs(), k_max),
            alphas: ld.zero_set().alphas(q),
        }
    }

    pub fn ldata(&self) -> &LData {
        self.ld
    }

    pub fn trace(&self) -> &TraceTable {
        &self.trace
    }

    pub fn p_k(&self, u: Complex64, k: usize) -> Complex64 {
        p_k(&self.trace, u, k)
    }

    /// `Z_K(u) = exp(sum_j [Log(1 - alpha_j u) + sum_{k<=K} (alpha_j u)^k / k])`,
    /// exactly 0 at a zero of `L`.
    pub fn z_k(&self, u: Complex64, k: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &a in &self.alphas {
            let w = a * u;
            let one_minus = Complex64::new(1.0, 0.0) - w;
            if one_minus.norm() < SINGULAR {
                return Complex64::new(0.0, 0.0);
            }
            let mut pow = Complex64::new(1.0, 0.0);
            let mut partial = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                pow *= w;
                partial += pow / j as f64;
            }
            acc += one_minus.ln() + partial;
        }
        acc.exp()
    }

    pub fn check(&self, u: Complex64, k: usize) -> HybridEval {
        let l = lvalue(self.ld, u);
        let p_k = self.p_k(u, k);
        let z_k = self.z_k(u, k);
        let defect = (l - p_k * z_k).norm() / l.norm().max(1e-12);
        HybridEval { u, k, l, p_k, z_k, defect }
    }

    /// `min_j |u - u_j|`.
    pub fn distance_to_zeros(&self, u: Complex64) -> f64 {
        let q = self.ld.q();
        self.ld
            .zero_set()
            .roots(q)
            .iter()
            .map(|r| (u - r).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest `K = 2^i <= k_cap` with `|P_K(u) - L(u)| < tol`, if any.
    pub fn convergence_k(&self, u: Complex64, tol: f64, k_cap: usize) -> Option<usize> {
        let l = lvalue(self.ld, u);
        let mut k = 1;
        while k <= k_cap.min(self.trace.k_max()) {
            if (self.p_k(u, k) - l).norm() < tol {
                return Some(k);
            }
            k *= 2;
        }
        None
    }
}

/// `sum_{k<=K} psi(k) u^k / k`, evaluated as `sum t_k (q^(1/2) u)^k / k`.
pub fn log_p_k(trace: &TraceTable, u: Complex64, k: usize) -> Complex64 {
    assert!(k <= trace.k_max(), "K = {k} beyond cached psi table");
    let v = u * (trace.q() as f64).sqrt();
    let mut pow = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 1..=k {
        pow *= v;
        acc += pow * (trace.normalized(j) / j as f64);
    }
    acc
}

/// `P_K(u) = exp(sum_{k<=K} psi(k) u^k / k)`; `P_0 = 1`.
pub fn p_k(trace: &TraceTable, u: Complex64, k: usize) -> Complex64 {
    let p = log_p_k(trace, u, k).exp();
    debug_assert!(p.norm() > 0.0);
    p
}

/// Convenience wrapper for a single evaluation.
pub fn hybrid_check(ld: &LData, u: Complex64, k: usize) -> HybridEval {
    Hybrid::new(ld, k).check(u, k)
}

/// `u = q^(-1/2) e(theta)`.
pub fn circle_point(q: u64, theta: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (q as f64).sqrt(), 2.0 * PI * theta)
}

/// Angles halfway between consecutive distinct zeros (cyclically).
pub fn midpoints(ld: &LData) -> Vec<f64> {
    let d = ld.zero_set().distinct();
    let n = d.len();
    (0..n)
        .map(|i| {
            let a = d[i];
            let b = if i + 1 < n { d[i + 1] } else { d[0] + 1.0 };
            let m = 0.5 * (a + b);
            m - m.floor()
        })
        .collect()
}

/// `n` interior points spread over radii `(0.05..0.95) q^(-1/2)` and a
/// golden-ratio sequence of angles.
pub fn interior_points(q: u64, n: usize) -> Vec<Complex64> {
    let r0 = 1.0 / (q as f64).sqrt();
    (0..n)
        .map(|i| {
            let r = r0 * (0.05 + 0.9 * (i as f64 + 0.5) / n as f64);
            Complex64::from_polar(r, 2.0 * PI * (i as f64 * 0.618_034).fract())
        })
        .collect()
}

/// Up to `n` circle points at angular distance at least `1 / (8 g)` from
/// every zero: midpoints first, then a golden-ratio sequence.
pub fn boundary_points(ld: &LData, n: usize) -> Vec<Complex64> {
    let zs = ld.zero_set().distinct();
    let sep = 1.0 / (8 * ld.genus()) as f64;
    let mut t: Vec<f64> = midpoints(ld)
        .into_iter()
        .filter(|&m| zs.iter().all(|&z| circular_distance(m, z) >= sep))
        .collect();
    let mut i = 0;
    while t.len() < n && i < 64 * n {
        let th = (i as f64 * 0.618_034).fract();
        if zs.iter().all(|&z| circular_distance(th, z) >= sep) {
            t.push(th);
        }
        i += 1;
    }
    t.truncate(n);
    t.into_iter().map(|th| circle_point(ld.q(), th)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileBranch {
    /// `|u| <= q^(-sigma)` with `sigma = 1/2 + C log_q g / K`.
    Disk,
    /// `u = q^(-1/2) e(theta)` with `theta` separated from zeros.
    Circle,
}

/// Measured sup of `|L/P_K - 1|` across a doubling sequence of `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationProfile {
    pub branch: ProfileBranch,
    pub q: u64,
    pub g: usize,
    /// `C` for the disk branch, `c` for the circle branch.
    pub param: f64,
    /// Disk branch only; fixed from the first `K`.
    pub sigma: Option<f64>,
    pub ks: Vec<usize>,
    pub sup_errors: Vec<f64>,
    pub bound_shapes: Vec<f64>,
    /// `sup_error / bound_shape`, the measured constant.
    pub constants: Vec<f64>,
    pub points: usize,
    pub multiple: f64,
    pub monotone: bool,
    pub within_multiple: bool,
}

pub const PROFILE_GRID: usize = 256;

fn finish_profile(
    branch: ProfileBranch,
    ld: &LData,
    param: f64,
    sigma: Option<f64>,
    ks: &[usize],
    sup_errors: Vec<f64>,
    bound_shapes: Vec<f64>,
    points: usize,
    multiple: f64,
) -> TruncationProfile {
    let constants: Vec<f64> = sup_errors.iter().zip(&bound_shapes).map(|(e, b)| e / b).collect();
    // relative slack of a few ulps keeps float noise from breaking ties
    let monotone = sup_errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    let within_multiple = constants.iter().all(|&c| c <= multiple);
    TruncationProfile {
        branch,
        q: ld.q(),
        g: ld.genus(),
        param,
        sigma,
        ks: ks.to_vec(),
        sup_errors,
        bound_shapes,
        constants,
        points,
        multiple,
        monotone,
        within_multiple,
    }
}

/// Disk branch: `sigma` is set from `ks[0]` and kept for every later `K`,
/// so all errors are measured on the same circle `|u| = q^(-sigma)`.
pub fn disk_profile(ld: &LData, c_big: f64, ks: &[usize], multiple: f64) -> Result<TruncationProfile> {
    let g = ld.genus();
    let q = ld.q() as f64;
    if g < 2 {
        return Err(Error::Precondition("disk profile needs g >= 2 (log g > 0)".into()));
    }
    if c_big < 1.0 {
        return Err(Error::Precondition(format!("C = {c_big} < 1")));
    }
    let ln_g = (g as f64).ln();
    let k_min = 2.0 * c_big * ln_g;
    if ks.is_empty() || ks.iter().any(|&k| (k as f64) < k_min) {
        return Err(Error::Precondition(format!("every K must be >= 2 C log g = {k_min:.3}")));
    }
    let sigma = 0.5 + c_big * (g as f64).ln() / q.ln() / ks[0] as f64;
    let radius = q.powf(-sigma);
    let k_max = *ks.iter().max().unwrap();
    let h = Hybrid::new(ld, k_max);
    let grid: Vec<Complex64> = (0..PROFILE_GRID)
        .map(|i| Complex64::from_polar(radius, 2.0 * PI * (i as f64 + 0.5) / PROFILE_GRID as f64))
        .collect();
    let l: Vec<Complex64> = grid.iter().map(|&u| lvalue(ld, u)).collect();
    let sup_errors = ks
        .iter()
        .map(|&k| {
            grid.iter()
                .zip(&l)
                .map(|(&u, &lu)| (lu / h.p_k(u, k) - 1.0).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let shape = 1.0 / (c_big * (g as f64).powf(c_big - 1.0) * ln_g);
    Ok(finish_profile(
        ProfileBranch::Disk,
        ld,
        c_big,
        Some(sigma),
        ks,
        sup_errors,
        vec![shape; ks.len()],
        PROFILE_GRID,
        multiple,
    ))
}

/// Circle branch: grid angles at circular distance `>= c / 2g` from every
/// zero, `K >= g^2 / c`, bound shape `g^2 / (c K)`.
pub fn circle_profile(ld: &LData, c_small: f64, ks: &[usize], multiple: f64) -> Result<TruncationProfile> {
    let g = ld.genus() as f64;
    if c_small <= 0.0 {
        return Err(Error::Precondition(format!("c = {c_small} must be positive")));
    }
    let k_min = g * g / c_small;
    if ks.is_empty() || ks.iter().any(|&k| (k as f64) < k_min) {
        return Err(Error::Precondition(format!("every K must be >= g^2 / c = {k_min:.3}")));
    }
    let sep = c_small / (2.0 * g);
    let zeros = ld.zero_set().thetas.clone();
    let thetas: Vec<f64> = (0..PROFILE_GRID)
        .map(|i| (i as f64 + 0.5) / PROFILE_GRID as f64)
        .filter(|&t| zeros.iter().all(|&z| circular_distance(t, z) >= sep))
        .collect();
    if thetas.is_empty() {
        return Err(Error::Precondition(format!("no grid angle is {sep:.4} away from all zeros")));
    }
    let k_max = *ks.iter().max().unwrap();
    let h = Hybrid::new(ld, k_max);
    let q = ld.q();
    let pts: Vec<(Complex64, Complex64)> = thetas
        .iter()
        .map(|&t| {
            let u = circle_point(q, t);
            (u, lvalue(ld, u))
        })
        .collect();
    let sup_errors = ks
        .iter()
        .map(|&k| {
            pts.iter()
                .map(|&(u, lu)| (lu / h.p_k(u, k) - 1.0).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let shapes = ks.iter().map(|&k| g * g / (c_small * k as f64)).collect();
    Ok(finish_profile(
        ProfileBranch::Circle,
        ld,
        c_small,
        None,
        ks,
        sup_errors,
        shapes,
        thetas.len(),
        multiple,
    ))
}

/// `||x - y||`, distance on R/Z.
pub fn circular_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// `K_0, 2 K_0, ...` up to and including `k_max`.
pub fn doubling(k0: usize, k_max: usize) -> Vec<usize> {
    std::iter::successors(Some(k0.max(1)), |&k| Some(k * 2))
        .take_while(|&k| k <= k_max)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::QuadraticCharacter;
    use crate::ff::FqContext;
    use crate::lfunction::{compute_coeffs, compute_zeros};
    use crate::poly::{Budget, Poly};
    use crate::primes::PrimeTable;
    use crate::trace::PrimeCharacterSums;

    fn ld(q: u64, s: &str) -> LData {
        let chi = QuadraticCharacter::new(Poly::parse(FqContext::new(q).unwrap(), s).unwrap()).unwrap();
        compute_zeros(compute_coeffs(&chi, Budget::DEFAULT).unwrap()).unwrap()
    }

    #[test]
    fn newton_trace_matches_prime_sums_beyond_2g() {
        let l = ld(3, "x^3+2*x+1");
        let table = PrimeTable::build(l.character().context(), 8, Budget::DEFAULT).unwrap();
        let sums = PrimeCharacterSums::compute(l.character(), &table, 8).unwrap();
        let t = TraceTable::new(3, l.coeffs(), 8);
        for k in 1..=8 {
            assert_eq!(t.psi_i128(k), Some(sums.psi(k)), "k={k}");
        }
    }

    #[test]
    fn p_k_trivial_cases() {
        let l = ld(3, "x^5+2*x+1");
        let h = Hybrid::new(&l, 10);
        assert_eq!(h.p_k(Complex64::new(0.3, 0.1), 0), Complex64::new(1.0, 0.0));
        assert_eq!(h.p_k(Complex64::new(0.0, 0.0), 7), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn p_1_against_linear_euler_factors() {
        let l = ld(3, "x^3+2*x+1");
        let h = Hybrid::new(&l, 1);
        let u = 0.1;
        let chi = l.character();
        let ctx = chi.context();
        // prod (1 - chi(P) u)^(-1) = exp(psi(1) u + O(u^2)), |O(u^2)| <= 3 u^2 / (1 - u)
        let prod: f64 = (0..3)
            .map(|a| 1.0 / (1.0 - chi.chi(&Poly::new(ctx, vec![a, 1])).unwrap() as f64 * u))
            .product();
        let p1 = h.p_k(Complex64::new(u, 0.0), 1).re;
        assert!((prod.ln() - p1.ln()).abs() <= 3.0 * u * u / (1.0 - u));
    }

    #[test]
    fn z_0_is_l_and_vanishes_at_zeros() {
        let l = ld(3, "x^5+2*x+1");
        let h = Hybrid::new(&l, 10);
        for i in 0..20 {
            let u = Complex64::from_polar(0.5 / 3f64.sqrt(), i as f64 * 0.31);
            let lu = lvalue(&l, u);
            assert!((h.z_k(u, 0) - lu).norm() < 1e-10 * lu.norm());
        }
        for r in l.zero_set().roots(3) {
            assert!(h.z_k(r, 3).norm() < 1e-6);
        }
    }

    #[test]
    fn z_k_tail_bound() {
        let l = ld(3, "x^5+2*x+1");
        let g = 2.0;
        let h = Hybrid::new(&l, 8);
        let r = 3f64.powf(-0.75);
        let x: f64 = 3f64.powf(-0.25);
        let bound = 2.0 * g * x.powi(9) / (9.0 * (1.0 - x));
        for i in 0..32 {
            let u = Complex64::from_polar(r, i as f64 * 0.2);
            assert!((h.z_k(u, 8) - 1.0).norm() <= bound * 1.05 + 1e-15);
        }
    }

    #[test]
    fn hybrid_identity_examples() {
        let l = ld(3, "x^5+2*x+1");
        let h = Hybrid::new(&l, 10);
        let u = Complex64::new(0.5 / 3f64.sqrt(), 0.0);
        assert!(h.check(u, 3).defect < 1e-9);
        for t in midpoints(&l) {
            assert!(h.check(circle_point(3, t), 10).defect < 1e-9);
        }
        assert!(h.check(u, 0).defect < 1e-12);
    }

    #[test]
    fn p_k_converges_inside() {
        let l = ld(3, "x^5+2*x+1");
        let h = Hybrid::new(&l, 4096);
        let u = Complex64::from_polar(0.8 / 3f64.sqrt(), 1.0);
        assert!(h.convergence_k(u, 1e-6, 4096).is_some());
    }

    #[test]
    fn profiles_are_monotone_and_bounded() {
        let l = ld(3, "x^9+x+1");
        let k0 = (2.0 * 4f64.ln()).ceil() as usize;
        let p = disk_profile(&l, 1.0, &doubling(k0, 64), 10.0).unwrap();
        assert!(p.monotone, "{:?}", p.sup_errors);
        assert!(p.within_multiple, "{:?}", p.constants);
        let c = 0.5;
        let k = (16.0 / c * 2.0) as usize;
        let p = circle_profile(&l, c, &doubling(k, 4 * k), 10.0).unwrap();
        assert!(p.within_multiple, "{:?}", p.constants);
        assert!(disk_profile(&l, 0.5, &[8], 10.0).is_err());
        assert!(circle_profile(&l, c, &[4], 10.0).is_err());
    }
}
