//! Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use hyperell::argument::{gap_bound, n_theta, s_k_from_primes, s_k_from_zeros, s_theta};
use hyperell::characters::QuadraticCharacter;
use hyperell::ensemble::{enumerate_h, rng, sample_many};
use hyperell::ff::FqContext;
use hyperell::fmodel::{
    clustering_check, f_equals_l_on_circle, f_zero_equivalence, find_fk_zeros, rh_check_fk, simplicity_stats, FkModel,
    SIMPLICITY_TOL,
};
use hyperell::hybrid::{boundary_points, circle_profile, disk_profile, doubling, interior_points, Hybrid};
use hyperell::lfunction::{afe_holds, coeffs_oracle_full, compute_coeffs, compute_zeros, lvalue, trace_check, LData};
use hyperell::poly::{enumerate_monic, Budget, Poly};
use hyperell::primes::{prime_count, PrimeTable};
use hyperell::trace::TraceData;
use rand::Rng;
use rayon::prelude::*;

const BUDGET: Budget = Budget::DEFAULT;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ctx(q: u64) -> FqContext {
    FqContext::new(q).unwrap()
}

fn ldata(d: &Poly) -> LData {
    let chi = QuadraticCharacter::new(d.clone()).unwrap();
    compute_zeros(compute_coeffs(&chi, BUDGET).unwrap()).unwrap()
}

/// Criterion 1 and 2 sets: all of H_{3,3}, 25 each of H_{5,3}, H_{7,3}, H_{5,5}.
fn small_sets() -> Vec<Poly> {
    let mut out: Vec<Poly> = enumerate_h(ctx(3), 1, BUDGET).unwrap().collect();
    for (q, g, seed) in [(5u64, 1usize, 101u64), (7, 1, 102), (5, 2, 103)] {
        out.extend(sample_many(ctx(q), g, 25, seed).unwrap());
    }
    out
}

/// Criterion 3 set: 50 random D for each q in {3, 5} and g in 1..=5.
fn rh_sets() -> Vec<Vec<Poly>> {
    let mut out = Vec::new();
    for q in [3u64, 5] {
        for g in 1..=5 {
            out.push(sample_many(ctx(q), g, 50, 1000 * q + g as u64).unwrap());
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut bad = Vec::new();
    let sets = small_sets();
    for d in &sets {
        let chi = QuadraticCharacter::new(d.clone()).unwrap();
        let c = coeffs_oracle_full(&chi, BUDGET).unwrap();
        let (q, g) = (chi.q() as i128, chi.genus());
        let reflect = (0..=g).all(|n| c[2 * g - n] == q.pow((g - n) as u32) * c[n]);
        if !reflect || !afe_holds(chi.q(), g, &c) {
            bad.push(d.to_string());
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("{} D checked, {} failures {:?}", sets.len(), bad.len(), bad) }
}

fn criterion_2() -> Outcome {
    let sets = small_sets();
    let bad: Vec<String> = sets
        .iter()
        .filter(|d| {
            let chi = QuadraticCharacter::new((*d).clone()).unwrap();
            compute_coeffs(&chi, BUDGET).unwrap().coeffs() != coeffs_oracle_full(&chi, BUDGET).unwrap().as_slice()
        })
        .map(|d| d.to_string())
        .collect();
    Outcome { pass: bad.is_empty(), detail: format!("{} D checked, mismatches {:?}", sets.len(), bad) }
}

fn criterion_3(sets: &[Vec<LData>]) -> Outcome {
    let worst = sets.iter().flatten().map(|l| l.zero_set().max_magnitude_defect()).fold(0.0, f64::max);
    let n: usize = sets.iter().map(Vec::len).sum();
    Outcome { pass: worst < 1e-8, detail: format!("{n} D, max magnitude defect {worst:.2e} (tol 1e-8)") }
}

fn criterion_4(sets: &[Vec<LData>]) -> Outcome {
    let mut worst: f64 = 0.0;
    for set in sets {
        let c = set[0].character().context();
        let table = PrimeTable::build(c, 2 * set[0].genus(), BUDGET).unwrap();
        worst = set
            .par_iter()
            .map(|l| {
                let tr = TraceData::from_primes(l.character(), &table).unwrap();
                trace_check(l, &tr).into_iter().fold(0.0, f64::max)
            })
            .reduce(|| worst, f64::max);
    }
    Outcome { pass: worst < 1e-8, detail: format!("max trace defect {worst:.2e} over 1 <= n <= 2g (tol 1e-8)") }
}

fn criterion_5(sets: &[Vec<LData>]) -> Outcome {
    let ks = [0, 1, 2, 5, 10];
    let (mut worst, mut worst_z0) = (0.0f64, 0.0f64);
    let mut boundary_short = 0;
    for l in sets.iter().flatten() {
        let h = Hybrid::new(l, 10);
        let inner = interior_points(l.q(), 64);
        let outer = boundary_points(l, 64);
        boundary_short += (outer.len() < 64) as usize;
        for &u in inner.iter().chain(&outer) {
            for k in ks {
                worst = worst.max(h.check(u, k).defect);
            }
        }
        for &u in &inner {
            let lv = lvalue(l, u);
            worst_z0 = worst_z0.max((h.z_k(u, 0) - lv).norm() / lv.norm());
        }
    }
    Outcome {
        pass: worst < 1e-9 && worst_z0 < 1e-10 && boundary_short == 0,
        detail: format!(
            "max defect {worst:.2e} (tol 1e-9), Z_0 = L {worst_z0:.2e} (tol 1e-10), D short of boundary points {boundary_short}"
        ),
    }
}

fn criterion_6(sets: &[Vec<LData>]) -> Outcome {
    let ks = [1usize, 2, 5, 10, 20, 50];
    let (mut two_form, mut excess, mut ident) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    let mut r = rng(6);
    for l in sets.iter().flatten() {
        let h = Hybrid::new(l, 50);
        let g = l.genus() as f64;
        for i in 0..256 {
            let t = i as f64 / 256.0;
            let s = s_theta(l, t);
            for &k in &ks {
                let sp = s_k_from_primes(h.trace(), t, k);
                two_form = two_form.max((sp - s_k_from_zeros(l, t, k)).abs());
                excess = excess.max((s - sp).abs() - gap_bound(l, t, k));
            }
        }
        for _ in 0..1000 {
            let t: f64 = r.random();
            ident = ident.max((n_theta(l, t) as f64 - 2.0 * g * t - s_theta(l, t)).abs());
        }
    }
    Outcome {
        pass: two_form < 1e-9 && excess <= 1e-12 && ident < 1e-8,
        detail: format!(
            "S_K two forms {two_form:.2e} (tol 1e-9), max |S - S_K| - bound {excess:.2e} (slack 1e-12), N identity {ident:.2e} (tol 1e-8)"
        ),
    }
}

fn criterion_7(sets: &[Vec<LData>]) -> Outcome {
    let (mut worst, mut margin) = (0.0f64, f64::INFINITY);
    for l in sets.iter().flatten() {
        worst = worst.max(f_equals_l_on_circle(l, 1024));
        margin = margin.min(f_zero_equivalence(l, 64).interior_min);
    }
    Outcome {
        pass: worst < 1e-10 && margin > 0.0,
        detail: format!("F = L relative {worst:.2e} (tol 1e-10), min |F| on interior annuli {margin:.3e}"),
    }
}

fn criterion_8() -> Outcome {
    let (mut modulus, mut resid) = (0.0f64, 0.0f64);
    let mut short = Vec::new();
    let mut runs = 0;
    for g in [2usize, 3, 4] {
        for d in sample_many(ctx(3), g, 10, 800 + g as u64).unwrap() {
            let l = ldata(&d);
            for k in [4usize, 8, 16, 32, 64] {
                let m = FkModel::new(&l, k).unwrap();
                modulus = modulus.max(rh_check_fk(&m, 512, 0.9).modulus_defect);
                match find_fk_zeros(&m) {
                    Ok(z) => {
                        resid = resid.max(z.max_residual());
                        if z.count < 2 * g {
                            short.push(format!("{d} K={k}: {}", z.count));
                        }
                    }
                    Err(e) => short.push(format!("{d} K={k}: {e}")),
                }
                runs += 1;
            }
        }
    }
    Outcome {
        pass: modulus < 1e-12 && resid < 1e-9 && short.is_empty(),
        detail: format!(
            "{runs} (D, K) runs, modulus defect {modulus:.2e} (tol 1e-12), level residual {resid:.2e} (tol 1e-9), short {short:?}"
        ),
    }
}

fn criterion_9() -> Outcome {
    let delta = 0.02;
    let (mut skipped, mut passed, mut failed) = (0, 0, Vec::new());
    for d in sample_many(ctx(3), 3, 20, 909).unwrap() {
        let l = ldata(&d);
        if l.zero_set().min_gap() < 2.0 * delta {
            skipped += 1;
            continue;
        }
        let z = find_fk_zeros(&FkModel::new(&l, 64).unwrap()).unwrap();
        match clustering_check(&l, &z, delta) {
            Ok(c) if c.pass => passed += 1,
            Ok(c) => failed.push(format!("{d}: offenders {:?}", c.offenders)),
            Err(e) => failed.push(format!("{d}: {e}")),
        }
    }
    Outcome {
        pass: failed.is_empty() && passed > 0,
        detail: format!("{passed} passed, {skipped} skipped (min gap < 2 delta), failures {failed:?}"),
    }
}

fn criterion_10() -> Outcome {
    let (q, g) = (3u64, 8usize);
    let gf = g as f64;
    let k = (gf.ln() * gf.ln() / (q as f64).ln()).ceil() as usize;
    let threshold = 0.1;
    let mut fractions = Vec::new();
    for d in sample_many(ctx(q), g, 20, 1010).unwrap() {
        let z = find_fk_zeros(&FkModel::new(&ldata(&d), k).unwrap()).unwrap();
        fractions.push(1.0 - simplicity_stats(&z, SIMPLICITY_TOL));
    }
    let worst = fractions.iter().copied().fold(0.0, f64::max);
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    Outcome {
        pass: worst < threshold,
        detail: format!(
            "K = {k}, fraction with |f_K'| <= 1e-6: max {worst:.4}, mean {mean:.4} over {} D (threshold {threshold})",
            fractions.len()
        ),
    }
}

fn criterion_11() -> Outcome {
    let mut bad = Vec::new();
    for q in [3u64, 5] {
        for n in 1..=6 {
            let counted = enumerate_monic(ctx(q), n).unwrap().filter(|f| f.is_irreducible().unwrap()).count();
            if prime_count(q, n).unwrap() != counted as i128 {
                bad.push(format!("pi_{q}({n})"));
            }
        }
    }
    for g in 1..=2 {
        let counted = enumerate_h(ctx(3), g, BUDGET).unwrap().count() as u64;
        if counted != 3u64.pow(2 * g as u32 + 1) - 3u64.pow(2 * g as u32) {
            bad.push(format!("|H| g={g}"));
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("prime and ensemble counts, mismatches {bad:?}") }
}

fn criterion_12() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in sample_many(ctx(3), 4, 5, 1212).unwrap() {
        let l = ldata(&d);
        let k0 = (2.0 * 4f64.ln()).ceil() as usize;
        match disk_profile(&l, 1.0, &doubling(k0, 64), 10.0) {
            Ok(p) => {
                pass &= p.monotone && p.within_multiple;
                lines.push(format!("disk {d}: constants {:.3e}..{:.3e}", min(&p.constants), max(&p.constants)));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("disk {d}: {e}"));
            }
        }
    }
    for (g, seed) in [(2usize, 1213u64), (3, 1214)] {
        for d in sample_many(ctx(3), g, 5, seed).unwrap() {
            let l = ldata(&d);
            let c = 0.25;
            let k0 = ((g * g) as f64 / c).ceil() as usize * 2;
            match circle_profile(&l, c, &doubling(k0, 16 * k0), 10.0) {
                Ok(p) => {
                    pass &= p.monotone && p.within_multiple;
                    lines.push(format!("circle {d}: constants {:.3e}..{:.3e}", min(&p.constants), max(&p.constants)));
                }
                Err(e) => {
                    pass = false;
                    lines.push(format!("circle {d}: {e}"));
                }
            }
        }
    }
    Outcome { pass, detail: lines.join("; ") }
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let t = Instant::now();
    let o = f();
    (o, t.elapsed())
}

fn main() {
    // criteria 3-7 share the same computed L-data; the build time is
    // charged to criterion 3
    let mut sets: Vec<Vec<LData>> = Vec::new();
    let limits: [(usize, Option<u64>); 12] = [
        (1, Some(60)),
        (2, Some(120)),
        (3, Some(120)),
        (4, None),
        (5, None),
        (6, None),
        (7, None),
        (8, None),
        (9, Some(180)),
        (10, None),
        (11, None),
        (12, None),
    ];
    let mut failed = 0;
    for (id, limit) in limits {
        let (o, dt) = match id {
            1 => timed(criterion_1),
            2 => timed(criterion_2),
            3 => timed(|| {
                sets = rh_sets().iter().map(|s| s.iter().map(ldata).collect()).collect();
                criterion_3(&sets)
            }),
            4 => timed(|| criterion_4(&sets)),
            5 => timed(|| criterion_5(&sets)),
            6 => timed(|| criterion_6(&sets)),
            7 => timed(|| criterion_7(&sets)),
            8 => timed(criterion_8),
            9 => timed(criterion_9),
            10 => timed(criterion_10),
            11 => timed(criterion_11),
            _ => timed(criterion_12),
        };
        let in_time = limit.is_none_or(|s| dt.as_secs_f64() < s as f64);
        let pass = o.pass && in_time;
        failed += (!pass) as usize;
        let limit_text = limit.map(|s| format!(" (limit {s}s)")).unwrap_or_default();
        println!(
            "criterion {id:>2}: {} [{:.2}s{limit_text}] {}",
            if pass { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
