//! The argument function `S(theta)` on the critical circle, its truncation
//! `S_K`, the counting function `N(theta)`, and the gap bound between them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::hybrid::circular_distance;
use crate::lfunction::LData;
use crate::trace::TraceTable;

/// Values within this of an integer are treated as integers.
pub const INTEGER_TOL: f64 = 1e-12;

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() <= INTEGER_TOL
}

/// `s(x) = {x} - 1/2` off the integers, `0` on them.
pub fn sawtooth(x: f64) -> f64 {
    if near_integer(x) {
        0.0
    } else {
        x - x.floor() - 0.5
    }
}

/// Right limit `s(x+) = {x} - 1/2`, i.e. `-1/2` at integers.
pub fn sawtooth_right(x: f64) -> f64 {
    if near_integer(x) {
        -0.5
    } else {
        x - x.floor() - 0.5
    }
}

/// `S(theta)` normalized to be right-continuous, so that
/// `N(theta) = 2g theta + S(theta)` holds at the zeros as well.
pub fn s_theta(ld: &LData, theta: f64) -> f64 {
    -ld.thetas().iter().map(|&t| sawtooth_right(theta - t)).sum::<f64>()
}

/// `-sum_j s(theta - theta_j)`; the average of the one-sided limits at a zero.
pub fn s_theta_sawtooth(ld: &LData, theta: f64) -> f64 {
    -ld.thetas().iter().map(|&t| sawtooth(theta - t)).sum::<f64>()
}

/// `sum_j (s(-theta_j) - s(theta - theta_j))`.
pub fn s_theta_two_term(ld: &LData, theta: f64) -> f64 {
    ld.thetas().iter().map(|&t| sawtooth(-t) - sawtooth(theta - t)).sum()
}

/// `sum_j s(-theta_j)`, zero when the angles pair up as `theta, 1 - theta`.
pub fn pairing_sum(ld: &LData) -> f64 {
    ld.thetas().iter().map(|&t| sawtooth(-t)).sum()
}

/// `sum_j sum_{k<=K} sin(2 pi k (theta - theta_j)) / (pi k)`.
pub fn s_k_from_zeros(ld: &LData, theta: f64, k: usize) -> f64 {
    let mut acc = 0.0;
    for &t in ld.thetas() {
        let x = 2.0 * PI * (theta - t);
        for j in 1..=k {
            acc += (j as f64 * x).sin() / (PI * j as f64);
        }
    }
    acc
}

/// `-(1/pi) Im sum_{k<=K} e(k theta) q^(-k/2) psi(k) / k`.
pub fn s_k_from_primes(trace: &TraceTable, theta: f64, k: usize) -> f64 {
    let theta = theta.rem_euclid(1.0);
    let mut acc = 0.0;
    for j in 1..=k {
        acc += (2.0 * PI * j as f64 * theta).sin() * trace.normalized(j) / j as f64;
    }
    -acc / PI
}

/// `sum_j min(1/2, 1 / (4 pi K ||theta - theta_j||))`.
pub fn gap_bound(ld: &LData, theta: f64, k: usize) -> f64 {
    ld.thetas()
        .iter()
        .map(|&t| {
            let d = circular_distance(theta, t);
            if d == 0.0 {
                0.5
            } else {
                (1.0 / (4.0 * PI * k as f64 * d)).min(0.5)
            }
        })
        .sum()
}

/// `#{j : theta_j <= theta}` for `theta` in `[0, 1]`.
pub fn n_theta(ld: &LData, theta: f64) -> usize {
    ld.thetas().iter().filter(|&&t| t <= theta + INTEGER_TOL).count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S_K")]
    pub s_k: f64,
    #[serde(rename = "S_K_zeros")]
    pub s_k_zeros: f64,
    pub gap_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgEval {
    pub theta: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// `|N - (2g theta + S)|`.
    pub identity_defect: f64,
    pub rows: Vec<SkRow>,
}

pub fn arg_eval(ld: &LData, trace: &TraceTable, theta: f64, ks: &[usize]) -> ArgEval {
    let s = s_theta(ld, theta);
    let n = n_theta(ld, theta);
    let g = ld.genus() as f64;
    let rows = ks
        .iter()
        .map(|&k| SkRow {
            k,
            s_k: s_k_from_primes(trace, theta, k),
            s_k_zeros: s_k_from_zeros(ld, theta, k),
            gap_bound: gap_bound(ld, theta, k),
        })
        .collect();
    ArgEval { theta, s, n, identity_defect: (n as f64 - 2.0 * g * theta - s).abs(), rows }
}

pub const SCAN_GRID: usize = 4096;

/// `Phi(g) = g / log_q g`; `None` for `g = 1`.
pub fn phi_default(q: u64, g: usize) -> Option<f64> {
    let l = (g as f64).ln() / (q as f64).ln();
    (l > 0.0).then(|| g as f64 / l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SBoundScan {
    pub q: u64,
    pub g: usize,
    pub grid: usize,
    pub sup_s: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub sup_s_k: f64,
    pub sup_gap_bound: f64,
    pub phi: Option<f64>,
    pub ratio_s: Option<f64>,
    pub ratio_s_k: Option<f64>,
}

impl SBoundScan {
    /// `sup |S| <= g`, `sup |S_K| <= sup |S| + sup gap`, and all finite.
    pub fn structural_ok(&self) -> bool {
        self.sup_s.is_finite()
            && self.sup_s_k.is_finite()
            && self.sup_s <= self.g as f64 + 1e-9
            && self.sup_s_k <= self.sup_s + self.sup_gap_bound + 1e-9
    }
}

/// `K = ceil(log_q g * log g)`, at least 1.
pub fn scan_k(q: u64, g: usize) -> usize {
    let gf = g as f64;
    ((gf.ln() / (q as f64).ln()) * gf.ln()).ceil().max(1.0) as usize
}

pub fn s_bound_scan(ld: &LData, trace: &TraceTable) -> SBoundScan {
    let q = ld.q();
    let g = ld.genus();
    let k = scan_k(q, g);
    let mut sup_s: f64 = 0.0;
    let mut sup_s_k: f64 = 0.0;
    let mut sup_gap: f64 = 0.0;
    for i in 0..SCAN_GRID {
        let theta = i as f64 / SCAN_GRID as f64;
        sup_s = sup_s.max(s_theta(ld, theta).abs());
        sup_s_k = sup_s_k.max(s_k_from_primes(trace, theta, k).abs());
        sup_gap = sup_gap.max(gap_bound(ld, theta, k));
    }
    let phi = phi_default(q, g);
    SBoundScan {
        q,
        g,
        grid: SCAN_GRID,
        sup_s,
        k,
        sup_s_k,
        sup_gap_bound: sup_gap,
        phi,
        ratio_s: phi.map(|p| sup_s / p),
        ratio_s_k: phi.map(|p| sup_s_k / p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::QuadraticCharacter;
    use crate::ff::FqContext;
    use crate::lfunction::{compute_coeffs, compute_zeros};
    use crate::poly::{Budget, Poly};
    use proptest::prelude::*;

    fn ld(q: u64, s: &str) -> LData {
        let chi = QuadraticCharacter::new(Poly::parse(FqContext::new(q).unwrap(), s).unwrap()).unwrap();
        compute_zeros(compute_coeffs(&chi, Budget::DEFAULT).unwrap()).unwrap()
    }

    #[test]
    fn sawtooth_examples() {
        assert_eq!(sawtooth(0.0), 0.0);
        assert_eq!(sawtooth(0.25), -0.25);
        assert_eq!(sawtooth(-0.25), 0.25);
        assert_eq!(sawtooth(3.0 + 1e-13), 0.0);
        assert_eq!(sawtooth_right(2.0), -0.5);
    }

    #[test]
    fn s_vanishes_at_zero_and_one() {
        for (q, s) in [(3, "x^3+2*x+1"), (3, "x^5+2*x+1"), (5, "x^7+x+2")] {
            let l = ld(q, s);
            assert!(pairing_sum(&l).abs() < 1e-9);
            assert!(s_theta(&l, 0.0).abs() < 1e-9);
            assert_eq!(n_theta(&l, 1.0), 2 * l.genus());
            assert!(s_theta(&l, 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn counting_identity_at_the_zeros() {
        let l = ld(5, "x^7+x+2");
        let g = l.genus() as f64;
        for &t in l.thetas() {
            let n = n_theta(&l, t) as f64;
            assert!((n - 2.0 * g * t - s_theta(&l, t)).abs() < 1e-8);
            // the symmetric form sits halfway through the jump
            assert!((s_theta(&l, t) - s_theta_sawtooth(&l, t) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn s_is_piecewise_linear_with_unit_jumps() {
        let l = ld(3, "x^5+2*x+1");
        let g = l.genus() as f64;
        let h = 1e-6;
        for i in 1..500 {
            let t = i as f64 / 500.0;
            let near = l.thetas().iter().any(|&z| circular_distance(t, z) < 2.0 * h);
            if !near {
                let slope = (s_theta(&l, t + h) - s_theta(&l, t - h)) / (2.0 * h);
                assert!((slope + 2.0 * g).abs() < 1e-4);
            }
        }
        for &z in l.thetas() {
            assert!((s_theta(&l, z + h) - s_theta(&l, z - h) - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn s_k_forms_agree() {
        let l = ld(3, "x^5+2*x+1");
        let trace = TraceTable::new(3, l.coeffs(), 64);
        for &k in &[1, 5, 20, 64] {
            for i in 0..64 {
                let t = i as f64 / 64.0 + 0.003;
                let a = s_k_from_zeros(&l, t, k);
                let b = s_k_from_primes(&trace, t, k);
                assert!((a - b).abs() < 1e-9, "K={k} theta={t}: {a} vs {b}");
            }
        }
        // K=1 at theta_1: the j=1 term is sin(0)
        let t1 = l.thetas()[0];
        let others: f64 = l.thetas()[1..].iter().map(|&t| (2.0 * PI * (t1 - t)).sin() / PI).sum();
        assert!((s_k_from_zeros(&l, t1, 1) - others).abs() < 1e-15);
    }

    #[test]
    fn gap_bound_examples() {
        let l = ld(3, "x^5+2*x+1");
        let t1 = l.thetas()[0];
        assert!(gap_bound(&l, t1, 1) >= 0.5);
        assert!(gap_bound(&l, 0.37, 3) <= l.genus() as f64 * 2.0 * 0.5);
        let far = crate::hybrid::midpoints(&l)[0];
        let mut direct = 0.0;
        for &z in l.thetas() {
            let d = ((far - z) - (far - z).round()).abs();
            direct += f64::min(0.5, 1.0 / (4.0 * PI * 100.0 * d));
        }
        assert!((gap_bound(&l, far, 100) - direct).abs() < 1e-15);
    }

    #[test]
    fn s_k_converges_away_from_zeros() {
        let l = ld(3, "x^5+2*x+1");
        let trace = TraceTable::new(3, l.coeffs(), 1024);
        let theta = crate::hybrid::midpoints(&l)
            .into_iter()
            .find(|&t| l.thetas().iter().all(|&z| circular_distance(t, z) > 0.05))
            .unwrap();
        let s = s_theta(&l, theta);
        let mut last = f64::INFINITY;
        let mut k = 16;
        while k <= 1024 {
            let e = (s - s_k_from_primes(&trace, theta, k)).abs();
            assert!(e <= gap_bound(&l, theta, k) + 1e-12);
            last = last.min(e);
            k *= 2;
        }
        assert!(last < 0.01);
    }

    #[test]
    fn scan_structure() {
        let l = ld(3, "x^5+2*x+1");
        let trace = TraceTable::new(3, l.coeffs(), 16);
        let s = s_bound_scan(&l, &trace);
        assert!(s.structural_ok());
        assert!(s.ratio_s.is_some());
        let one = ld(3, "x^3+2*x+1");
        let s1 = s_bound_scan(&one, &TraceTable::new(3, one.coeffs(), 4));
        assert!(s1.ratio_s.is_none());
    }

    proptest! {
        #[test]
        fn identities_at_random_theta(theta in 0.0f64..1.0, k in 1usize..40) {
            let l = ld(3, "x^9+x+1");
            let trace = TraceTable::new(3, l.coeffs(), 40);
            let e = arg_eval(&l, &trace, theta, &[k]);
            prop_assert!(e.identity_defect < 1e-8);
            let r = &e.rows[0];
            prop_assert!((r.s_k - r.s_k_zeros).abs() < 1e-9);
            prop_assert!((s_theta_sawtooth(&l, theta) - r.s_k).abs() <= r.gap_bound + 1e-12);
            prop_assert!((s_theta_two_term(&l, theta) - s_theta_sawtooth(&l, theta)).abs() < 1e-10);
        }
    }
}
