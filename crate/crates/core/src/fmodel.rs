//! The harmonic combination `F(u) = (L(u) + (q u^2)^g L(conj u)) / 2`, its
//! model `F_K` built from `P_K`, and the zeros of `F_K` on the critical
//! circle, which are the solutions of `f_K(phi) = 2g phi + S_K(phi) = 1/2 mod 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::argument::{phi_default, s_k_from_primes};
use crate::error::{Error, Result};
use crate::hybrid::{circle_point, circular_distance, p_k};
use crate::lfunction::{circle_scale, lvalue, LData};
use crate::trace::TraceTable;

/// Accepted residual `|f_K(phi) - level|` for a tangential zero.
pub const TANGENT_RESIDUAL: f64 = 1e-9;
const TANGENT_WIDTH: f64 = 1e-12;
const DEDUPE: f64 = 1e-10;

fn conj_term(q: u64, g: usize, u: Complex64) -> Complex64 {
    (u * u * q as f64).powu(g as u32)
}

/// `F(u)`.
pub fn f_value(ld: &LData, u: Complex64) -> Complex64 {
    0.5 * (lvalue(ld, u) + conj_term(ld.q(), ld.genus(), u) * lvalue(ld, u.conj()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FEval {
    pub u: Complex64,
    #[serde(rename = "F")]
    pub f: Complex64,
    #[serde(rename = "F_K")]
    pub f_k: Complex64,
}

/// `max |F - L| / scale` over `n` equally spaced points of the critical circle.
pub fn f_equals_l_on_circle(ld: &LData, n: usize) -> f64 {
    let scale = circle_scale(ld);
    (0..n)
        .map(|i| {
            let u = circle_point(ld.q(), (i as f64 + 0.5) / n as f64);
            (f_value(ld, u) - lvalue(ld, u)).norm() / scale
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FZeroReport {
    pub radii: Vec<f64>,
    /// `min |F|` over the interior annulus grid.
    pub interior_min: f64,
    /// `max |F(u_j)| / scale` over the zeros of `L`.
    pub max_at_zeros: f64,
    pub f_at_origin: Complex64,
}

/// Samples `|F|` at `|u| in {0.5, 0.8, 0.95} q^(-1/2)` and at the zeros of `L`.
pub fn f_zero_equivalence(ld: &LData, grid: usize) -> FZeroReport {
    let q = ld.q();
    let radii = vec![0.5, 0.8, 0.95];
    let r0 = 1.0 / (q as f64).sqrt();
    let mut interior_min = f64::INFINITY;
    for &r in &radii {
        for i in 0..grid {
            let u = Complex64::from_polar(r * r0, 2.0 * PI * i as f64 / grid as f64);
            interior_min = interior_min.min(f_value(ld, u).norm());
        }
    }
    let scale = circle_scale(ld);
    let max_at_zeros = ld
        .zero_set()
        .roots(q)
        .iter()
        .map(|&u| f_value(ld, u).norm() / scale)
        .fold(0.0, f64::max);
    FZeroReport { radii, interior_min, max_at_zeros, f_at_origin: f_value(ld, Complex64::new(0.0, 0.0)) }
}

/// `F_K` and `f_K` for one L-function at a fixed truncation `K`.
///
/// `psi(k)` comes from the L-polynomial coefficients, so the model needs no
/// zeros.
pub struct FkModel {
    q: u64,
    g: usize,
    k: usize,
    trace: TraceTable,
}

impl FkModel {
    pub fn new(ld: &LData, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("F_K needs K >= 1".into()));
        }
        Ok(Self::from_trace(TraceTable::new(ld.q(), ld.coeffs(), k), ld.genus(), k))
    }

    pub fn from_trace(trace: TraceTable, g: usize, k: usize) -> Self {
        assert!(k <= trace.k_max());
        Self { q: trace.q(), g, k, trace }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn trace(&self) -> &TraceTable {
        &self.trace
    }

    pub fn p_k(&self, u: Complex64) -> Complex64 {
        p_k(&self.trace, u, self.k)
    }

    /// `F_K(u) = (P_K(u) + (q u^2)^g P_K(conj u)) / 2`.
    pub fn f_k_value(&self, u: Complex64) -> Complex64 {
        0.5 * (self.p_k(u) + conj_term(self.q, self.g, u) * self.p_k(u.conj()))
    }

    /// `f_K(theta) = 2g theta + S_K(theta)` from the prime side.
    pub fn f_arg(&self, theta: f64) -> f64 {
        2.0 * self.g as f64 * theta + s_k_from_primes(&self.trace, theta, self.k)
    }

    /// `f_K'(theta) = 2g - 2 sum_k t_k cos(2 pi k theta)`.
    pub fn f_deriv(&self, theta: f64) -> f64 {
        let mut acc = 0.0;
        for j in 1..=self.k {
            acc += self.trace.normalized(j) * (2.0 * PI * j as f64 * theta).cos();
        }
        2.0 * self.g as f64 - 2.0 * acc
    }

    /// `2g (1 + 2K)`, a global bound for `|f_K'|`.
    pub fn slope_bound(&self) -> f64 {
        2.0 * self.g as f64 * (1.0 + 2.0 * self.k as f64)
    }

    /// `4 pi g K (K + 1)`, a global bound for `|f_K''|`.
    pub fn curvature_bound(&self) -> f64 {
        4.0 * PI * self.g as f64 * self.k as f64 * (self.k as f64 + 1.0)
    }
}

/// `f_K'` from the zeros: `2g + 2 sum_j sum_{k<=K} cos(2 pi k (theta - theta_j))`.
pub fn f_k_deriv_from_zeros(ld: &LData, theta: f64, k: usize) -> f64 {
    let mut acc = 0.0;
    for &t in ld.thetas() {
        let x = 2.0 * PI * (theta - t);
        for j in 1..=k {
            acc += (j as f64 * x).cos();
        }
    }
    2.0 * ld.genus() as f64 + 2.0 * acc
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelZeroSet {
    #[serde(rename = "K")]
    pub k: usize,
    pub phis: Vec<f64>,
    pub derivs: Vec<f64>,
    pub brackets: Vec<[f64; 2]>,
    /// The half-integer `m + 1/2` that `f_K` meets at each zero.
    pub levels: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Met without a sign change; counted once.
    pub tangential: Vec<bool>,
    pub count: usize,
}

impl ModelZeroSet {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }

    /// `N_K(theta) = #{phi_j <= theta}`.
    pub fn n_k(&self, theta: f64) -> usize {
        self.phis.iter().filter(|&&p| p <= theta).count()
    }
}

struct Scan<'a> {
    model: &'a FkModel,
    m1: f64,
    m2: f64,
    out: Vec<Found>,
}

struct Found {
    phi: f64,
    level: f64,
    bracket: [f64; 2],
    tangential: bool,
}

/// Half-integers `m + 1/2` in `[lo, hi]`.
fn levels_in(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let first = (lo - 0.5).ceil() as i64;
    let last = (hi - 0.5).floor() as i64;
    (first..=last).map(|m| m as f64 + 0.5)
}

impl Scan<'_> {
    fn visit(&mut self, a: f64, b: f64, fa: f64, fb: f64) {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let d = self.model.f_deriv(mid);
        if d.abs() > self.m2 * half {
            self.monotone(a, b, fa, fb);
            return;
        }
        let lip = self.m1.min(d.abs() + self.m2 * half);
        let lo = 0.5 * (fa + fb - lip * (b - a));
        let hi = 0.5 * (fa + fb + lip * (b - a));
        if levels_in(lo, hi).next().is_none() {
            return;
        }
        if b - a < TANGENT_WIDTH {
            let fm = self.model.f_arg(mid);
            let level = (fm - 0.5).round() + 0.5;
            if (fm - level).abs() < TANGENT_RESIDUAL {
                let sign_change = (fa - level) * (fb - level) < 0.0;
                self.out.push(Found { phi: mid, level, bracket: [a, b], tangential: !sign_change });
            }
            return;
        }
        let fm = self.model.f_arg(mid);
        self.visit(a, mid, fa, fm);
        self.visit(mid, b, fm, fb);
    }

    /// `f` is strictly monotone on `[a, b]`: each level in the half-open
    /// value range `[fa, fb)` (or `(fb, fa]`) is met exactly once.
    fn monotone(&mut self, a: f64, b: f64, fa: f64, fb: f64) {
        let increasing = fb > fa;
        let (lo, hi) = if increasing { (fa, fb) } else { (fb, fa) };
        for level in levels_in(lo, hi) {
            let keep = if increasing { level >= fa && level < fb } else { level > fb && level <= fa };
            if !keep {
                continue;
            }
            let (mut x0, mut x1) = (a, b);
            for _ in 0..200 {
                let xm = 0.5 * (x0 + x1);
                if xm <= x0 || xm >= x1 {
                    break;
                }
                let below = self.model.f_arg(xm) < level;
                if below == increasing {
                    x0 = xm;
                } else {
                    x1 = xm;
                }
            }
            let phi = if (self.model.f_arg(x0) - level).abs() <= (self.model.f_arg(x1) - level).abs() {
                x0
            } else {
                x1
            };
            self.out.push(Found { phi, level, bracket: [x0, x1], tangential: false });
        }
    }
}

/// All `phi in [0, 1)` with `f_K(phi) = 1/2 mod 1`.
///
/// The interval is cut into steps of `1 / (4 M)` with `M = 2g(1 + 2K)`.
/// A sub-interval whose midpoint slope exceeds the curvature bound times
/// its half-width is monotone and each level is bracketed and bisected.
/// Otherwise it is discarded when a Lipschitz envelope misses every level
/// and split when it does not; pieces below `1e-12` are accepted as
/// tangential zeros when the residual is below `1e-9`.
pub fn find_fk_zeros(model: &FkModel) -> Result<ModelZeroSet> {
    let m1 = model.slope_bound();
    let steps = (4.0 * m1).ceil() as usize;
    let mut scan = Scan { model, m1, m2: model.curvature_bound(), out: Vec::new() };
    let mut fa = model.f_arg(0.0);
    for i in 0..steps {
        let a = i as f64 / steps as f64;
        let b = (i + 1) as f64 / steps as f64;
        let fb = model.f_arg(b);
        scan.visit(a, b, fa, fb);
        fa = fb;
    }
    let mut found = scan.out;
    found.retain(|f| f.phi < 1.0);
    found.sort_by(|x, y| x.phi.total_cmp(&y.phi));
    let mut uniq: Vec<Found> = Vec::with_capacity(found.len());
    for f in found {
        match uniq.last() {
            Some(prev) if f.phi - prev.phi < DEDUPE && f.level == prev.level => {}
            _ => uniq.push(f),
        }
    }
    check_parity(model, &uniq)?;
    let derivs = uniq.iter().map(|f| model.f_deriv(f.phi)).collect();
    let residuals = uniq
        .iter()
        .map(|f| {
            let v = model.f_arg(f.phi);
            (v - v.floor() - 0.5).abs()
        })
        .collect();
    Ok(ModelZeroSet {
        k: model.k(),
        count: uniq.len(),
        phis: uniq.iter().map(|f| f.phi).collect(),
        derivs,
        brackets: uniq.iter().map(|f| f.bracket).collect(),
        levels: uniq.iter().map(|f| f.level).collect(),
        residuals,
        tangential: uniq.iter().map(|f| f.tangential).collect(),
    })
}

/// A level strictly inside `[f(0), f(1))` must be crossed an odd number of
/// times on `[0, 1)`, any other level an even number.
fn check_parity(model: &FkModel, found: &[Found]) -> Result<()> {
    let f0 = model.f_arg(0.0);
    let f1 = f0 + 2.0 * model.genus() as f64;
    let mut levels: Vec<f64> = found.iter().filter(|f| !f.tangential).map(|f| f.level).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    for level in levels_in(f0, f1).chain(levels.iter().copied()) {
        let crossings = found.iter().filter(|f| !f.tangential && f.level == level).count();
        let inside = level >= f0 && level < f1;
        if (crossings % 2 == 1) != inside {
            return Err(Error::MissedCrossing {
                level,
                detail: format!("{crossings} crossings, f(0) = {f0}, f(1) = {f1}"),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhReport {
    #[serde(rename = "K")]
    pub k: usize,
    /// `max | |P_K(conj u) / P_K(u)| - 1 |` on the circle.
    pub modulus_defect: f64,
    pub annulus_radius: f64,
    /// `min |F_K|` on `|u| = annulus_radius`.
    pub annulus_min: f64,
    pub f_k_origin: Complex64,
}

pub fn rh_check_fk(model: &FkModel, samples: usize, annulus: f64) -> RhReport {
    let q = model.q;
    let mut modulus_defect: f64 = 0.0;
    let mut annulus_min = f64::INFINITY;
    let r = annulus / (q as f64).sqrt();
    for i in 0..samples {
        let t = (i as f64 + 0.5) / samples as f64;
        let u = circle_point(q, t);
        let ratio = model.p_k(u.conj()) / model.p_k(u);
        modulus_defect = modulus_defect.max((ratio.norm() - 1.0).abs());
        let w = Complex64::from_polar(r, 2.0 * PI * t);
        annulus_min = annulus_min.min(model.f_k_value(w).norm());
    }
    RhReport {
        k: model.k(),
        modulus_defect,
        annulus_radius: annulus,
        annulus_min,
        f_k_origin: model.f_k_value(Complex64::new(0.0, 0.0)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    #[serde(rename = "K")]
    pub k: usize,
    pub delta: f64,
    pub intervals: Vec<[f64; 2]>,
    /// Model zeros found inside some interval.
    pub offenders: Vec<f64>,
    pub pass: bool,
}

/// No zero of `F_K` lies in `[theta_i + delta, theta_{i+1} - delta]` for
/// consecutive distinct zeros of `L` (cyclically), given `delta < gap / 2`
/// and `K > g / (pi delta)`.
pub fn clustering_check(ld: &LData, zeros: &ModelZeroSet, delta: f64) -> Result<ClusteringResult> {
    let z = ld.zero_set();
    let gap = z.min_gap();
    if delta <= 0.0 || delta >= 0.5 * gap {
        return Err(Error::Precondition(format!("delta = {delta} must lie in (0, {})", 0.5 * gap)));
    }
    let g = ld.genus() as f64;
    let k_min = g / (PI * delta);
    if zeros.k as f64 <= k_min {
        return Err(Error::Precondition(format!("K = {} must exceed g / (pi delta) = {k_min:.3}", zeros.k)));
    }
    let d = z.distinct();
    let n = d.len();
    let intervals: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let next = if i + 1 < n { d[i + 1] } else { d[0] + 1.0 };
            [d[i] + delta, next - delta]
        })
        .collect();
    let offenders: Vec<f64> = zeros
        .phis
        .iter()
        .copied()
        .filter(|&p| {
            intervals.iter().any(|&[a, b]| {
                let x = (p - a).rem_euclid(1.0);
                x <= b - a
            })
        })
        .collect();
    Ok(ClusteringResult { k: zeros.k, delta, intervals, pass: offenders.is_empty(), offenders })
}

/// Fraction of model zeros with `|f_K'| <= tol`.
pub fn multiple_fraction(zeros: &ModelZeroSet, tol: f64) -> f64 {
    if zeros.count == 0 {
        return 0.0;
    }
    zeros.derivs.iter().filter(|d| d.abs() <= tol).count() as f64 / zeros.count as f64
}

/// Fraction of model zeros with `|f_K'| > tol`.
pub fn simplicity_stats(zeros: &ModelZeroSet, tol: f64) -> f64 {
    1.0 - multiple_fraction(zeros, tol)
}

pub const SIMPLICITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NkMonitor {
    /// `sup_theta |N_K(theta) - 2g theta|` over a grid.
    pub max_deviation: f64,
    pub phi: Option<f64>,
    pub ratio: Option<f64>,
}

pub fn n_k_monitor(zeros: &ModelZeroSet, q: u64, g: usize, grid: usize) -> NkMonitor {
    let max_deviation = (0..=grid)
        .map(|i| {
            let t = i as f64 / grid as f64;
            (zeros.n_k(t) as f64 - 2.0 * g as f64 * t).abs()
        })
        .fold(0.0, f64::max);
    let phi = phi_default(q, g);
    NkMonitor { max_deviation, phi, ratio: phi.map(|p| max_deviation / p) }
}

/// Circular Hausdorff distance between two point sets on R/Z.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one_way = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|&p| y.iter().map(|&t| circular_distance(p, t)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::QuadraticCharacter;
    use crate::ff::FqContext;
    use crate::lfunction::{compute_coeffs, compute_zeros};
    use crate::poly::{Budget, Poly};

    fn ld(q: u64, s: &str) -> LData {
        let chi = QuadraticCharacter::new(Poly::parse(FqContext::new(q).unwrap(), s).unwrap()).unwrap();
        compute_zeros(compute_coeffs(&chi, Budget::DEFAULT).unwrap()).unwrap()
    }

    #[test]
    fn f_basic_values() {
        let l = ld(3, "x^5+2*x+1");
        // on the real axis conj u = u, so F = L (1 + (q u^2)^g) / 2
        let u = Complex64::new(0.2, 0.0);
        let expected = lvalue(&l, u) * 0.5 * (1.0 + (3.0f64 * 0.04).powi(2));
        assert!((f_value(&l, u) - expected).norm() < 1e-15);
        assert_eq!(f_value(&l, u).im, 0.0);
        let edge = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
        assert!((f_value(&l, edge) - lvalue(&l, edge)).norm() < 1e-14);
        assert_eq!(f_value(&l, Complex64::new(0.0, 0.0)), Complex64::new(0.5, 0.0));
        assert!(f_equals_l_on_circle(&l, 1024) < 1e-10);
        let rep = f_zero_equivalence(&l, 256);
        assert!(rep.interior_min > 1e-6);
        assert!(rep.max_at_zeros < 1e-8);
    }

    #[test]
    fn f_k_basic_values() {
        let l = ld(3, "x^5+2*x+1");
        let m = FkModel::new(&l, 8).unwrap();
        assert_eq!(m.f_k_value(Complex64::new(0.0, 0.0)), Complex64::new(0.5, 0.0));
        assert!(m.f_k_value(Complex64::new(0.3, 0.0)).im.abs() < 1e-15);
        assert!((m.f_arg(1.0) - m.f_arg(0.0) - 4.0).abs() < 1e-12);
        assert_eq!(m.f_arg(0.0), s_k_from_primes(m.trace(), 0.0, 8));
        let h = 1e-6;
        for i in 0..64 {
            let t = (i as f64 + 0.3) / 64.0;
            assert!((m.f_arg(t + h) - m.f_arg(t)).abs() <= m.slope_bound() * h);
            let fd = (m.f_arg(t + 1e-7) - m.f_arg(t - 1e-7)) / 2e-7;
            assert!((fd - m.f_deriv(t)).abs() < 1e-4);
            assert!((m.f_deriv(t) - f_k_deriv_from_zeros(&l, t, 8)).abs() < 1e-9);
        }
        let avg: f64 = (0..1000).map(|i| m.f_deriv(i as f64 / 1000.0)).sum::<f64>() / 1000.0;
        assert!((avg - 4.0).abs() < 1e-9);
    }

    #[test]
    fn model_zeros_have_small_residuals() {
        for s in ["x^5+2*x+1", "x^9+x+1"] {
            let l = ld(3, s);
            for k in [1, 4, 16, 64] {
                let m = FkModel::new(&l, k).unwrap();
                let z = find_fk_zeros(&m).unwrap();
                assert!(z.count >= 2 * l.genus(), "{s} K={k}: {} zeros", z.count);
                assert!(z.max_residual() < 1e-9);
                assert!(z.phis.windows(2).all(|w| w[0] < w[1]));
                let mults = z.derivs.iter().filter(|d| d.abs() <= SIMPLICITY_TOL).count();
                assert!(mults <= 2 * k);
                assert_eq!(z.n_k(1.0), z.count);
            }
        }
    }

    #[test]
    fn model_zeros_approach_true_zeros() {
        let l = ld(3, "x^7+2*x+1");
        let c = l.zero_set().min_gap() * 2.0 * l.genus() as f64;
        let g2 = (l.genus() * l.genus()) as f64;
        let k = ((g2 / c) * 2.0).ceil() as usize;
        let z = find_fk_zeros(&FkModel::new(&l, k).unwrap()).unwrap();
        let d = hausdorff(&z.phis, l.thetas());
        assert!(d < c / (2.0 * l.genus() as f64), "{d}");
    }

    #[test]
    fn rh_mechanism() {
        let l = ld(3, "x^7+2*x+1");
        let r = rh_check_fk(&FkModel::new(&l, 16).unwrap(), 512, 0.9);
        assert!(r.modulus_defect < 1e-12);
        assert!(r.annulus_min > 0.0);
        assert_eq!(r.f_k_origin, Complex64::new(0.5, 0.0));
    }

    #[test]
    fn clustering_preconditions() {
        let l = ld(3, "x^7+2*x+1");
        let gap = l.zero_set().min_gap();
        let delta = 0.45 * gap;
        let k = (l.genus() as f64 / (PI * delta)).floor() as usize + 1;
        let z = find_fk_zeros(&FkModel::new(&l, k).unwrap()).unwrap();
        assert!(clustering_check(&l, &z, delta).unwrap().pass);
        assert!(clustering_check(&l, &z, gap).is_err());
        let small = find_fk_zeros(&FkModel::new(&l, 1).unwrap()).unwrap();
        assert!(clustering_check(&l, &small, delta).is_err());
    }

    #[test]
    fn levels_helper() {
        let v: Vec<f64> = levels_in(0.2, 2.5).collect();
        assert_eq!(v, vec![0.5, 1.5, 2.5]);
        assert_eq!(levels_in(0.6, 1.4).count(), 0);
    }
}
