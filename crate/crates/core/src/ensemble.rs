//! Sampling and enumerating the ensemble of monic square-free `D` of degree
//! `2g + 1`, and the batch pipeline that runs every check on each `D` and
//! appends one JSON line per result.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::argument::{n_theta, s_bound_scan, s_theta};
use crate::characters::QuadraticCharacter;
use crate::error::{Error, Result};
use crate::ff::FqContext;
use crate::fmodel::{clustering_check, f_equals_l_on_circle, find_fk_zeros, hausdorff, simplicity_stats, FkModel, SIMPLICITY_TOL};
use crate::hybrid::{boundary_points, interior_points, Hybrid, TruncationProfile};
use crate::lfunction::{afe_check, compute_coeffs, compute_zeros, trace_check};
use crate::poly::{Budget, MonicIter, Poly};
use crate::primes::PrimeTable;
use crate::trace::TraceData;

pub const RNG_ID: &str = "chacha8";
pub const ENSEMBLE_SCHEMA: &str = "hyperell.ensemble/1";
const MAX_TRIES: u32 = 10_000;

/// Parameters of a batch run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub q: u64,
    pub g: usize,
    pub sample_count: usize,
    pub seed: u64,
    #[serde(rename = "K_list")]
    pub k_list: Vec<usize>,
    pub budget: u128,
    /// Clustering half-width; checked only where its preconditions hold.
    pub delta: Option<f64>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<FqContext> {
        let ctx = FqContext::new(self.q)?;
        if self.g == 0 {
            return Err(Error::Precondition("g must be >= 1".into()));
        }
        if self.sample_count == 0 {
            return Err(Error::Precondition("sample_count must be >= 1".into()));
        }
        if self.k_list.contains(&0) {
            return Err(Error::Precondition("K values must be >= 1".into()));
        }
        Ok(ctx)
    }
}

/// Seeded generator used everywhere in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniformly random monic polynomial of degree `2g + 1`.
pub fn draw_candidate(ctx: FqContext, g: usize, rng: &mut impl Rng) -> Poly {
    let n = 2 * g + 1;
    let mut c: Vec<u64> = (0..n).map(|_| rng.random_range(0..ctx.q())).collect();
    c.push(1);
    Poly::new(ctx, c)
}

/// Uniform member of the ensemble by rejection sampling.
pub fn sample_d(ctx: FqContext, g: usize, rng: &mut impl Rng) -> Result<Poly> {
    for _ in 0..MAX_TRIES {
        let d = draw_candidate(ctx, g, rng);
        if d.is_squarefree()? {
            return Ok(d);
        }
    }
    Err(Error::Precondition(format!("no square-free draw in {MAX_TRIES} tries")))
}

/// `count` samples from one seeded stream.
pub fn sample_many(ctx: FqContext, g: usize, count: usize, seed: u64) -> Result<Vec<Poly>> {
    let mut r = rng(seed);
    (0..count).map(|_| sample_d(ctx, g, &mut r)).collect()
}

/// Every monic square-free `D` of degree `2g + 1`, in monic-index order.
pub fn enumerate_h(ctx: FqContext, g: usize, budget: Budget) -> Result<impl Iterator<Item = Poly>> {
    budget.check_pow(ctx.q(), 2 * g + 1)?;
    Ok(MonicIter::new(ctx, 2 * g + 1)?.filter(|d| d.is_squarefree().unwrap_or(false)))
}

/// Tolerances every record is held to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rh: f64,
    pub trace: f64,
    pub hybrid: f64,
    pub n_identity: f64,
    pub f_equals_l: f64,
    pub fk_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rh: 1e-8, trace: 1e-8, hybrid: 1e-9, n_identity: 1e-8, f_equals_l: 1e-10, fk_residual: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: String,
    pub q: u64,
    pub g: usize,
    pub seed: u64,
    pub rng_id: String,
    pub code_version: String,
    pub tolerances: Tolerances,
    pub sample_count: usize,
    #[serde(rename = "K_list")]
    pub k_list: Vec<usize>,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    #[serde(rename = "K")]
    pub k: usize,
    pub fk_zero_count: usize,
    pub simple_fraction: f64,
    pub max_residual: f64,
    /// Circular Hausdorff distance between model zeros and zeros of `L`.
    pub hausdorff: f64,
    /// `None` when the clustering preconditions fail for this `D` and `K`.
    pub clustering_pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub q: u64,
    pub g: usize,
    #[serde(rename = "D")]
    pub d: Vec<u64>,
    #[serde(rename = "D_text")]
    pub d_text: String,
    pub coeffs: Vec<String>,
    pub thetas: Vec<f64>,
    pub afe_ok: bool,
    pub rh_defect: f64,
    pub trace_defect_max: f64,
    pub hybrid_defect_max: f64,
    pub n_identity_defect_max: f64,
    pub f_equals_l_defect: f64,
    #[serde(rename = "sup_S")]
    pub sup_s: f64,
    #[serde(rename = "sup_S_K")]
    pub sup_s_k: f64,
    pub s_ratio: Option<f64>,
    pub s_k_ratio: Option<f64>,
    pub repeated_zeros: bool,
    pub zero_at_theta_zero: bool,
    pub per_k: Vec<KRecord>,
    /// Tolerance breaches, empty when every check passed.
    pub breaches: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    #[serde(rename = "D")]
    pub d: Vec<u64>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Line {
    Header(Header),
    Record(RunRecord),
    Failure(Failure),
    Profile(TruncationProfile),
}

const HYBRID_KS: [usize; 5] = [0, 1, 2, 5, 10];
const HYBRID_POINTS: usize = 8;
const N_SAMPLES: usize = 64;
const F_POINTS: usize = 256;

/// Full pipeline on one discriminant.
pub fn run_one(
    cfg: &EnsembleConfig,
    table: &PrimeTable,
    tol: &Tolerances,
    index: usize,
    d: &Poly,
) -> Result<RunRecord> {
    let chi = QuadraticCharacter::new(d.clone())?;
    let g = chi.genus();
    let q = chi.q();
    let ld = compute_zeros(compute_coeffs(&chi, Budget(cfg.budget))?)?;
    let zeros = ld.zero_set();
    let trace = TraceData::from_primes(&chi, table)?;
    let trace_defect_max = trace_check(&ld, &trace).into_iter().fold(0.0, f64::max);

    let k_max = cfg.k_list.iter().copied().chain(HYBRID_KS).max().unwrap_or(10);
    let hybrid = Hybrid::new(&ld, k_max);
    let mut pts = interior_points(q, HYBRID_POINTS);
    pts.extend(boundary_points(&ld, HYBRID_POINTS));
    let mut hybrid_defect_max: f64 = 0.0;
    for &u in &pts {
        for k in HYBRID_KS {
            hybrid_defect_max = hybrid_defect_max.max(hybrid.check(u, k).defect);
        }
    }

    let mut r = rng(cfg.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n_identity_defect_max = (0..N_SAMPLES)
        .map(|_| {
            let t: f64 = r.random();
            (n_theta(&ld, t) as f64 - 2.0 * g as f64 * t - s_theta(&ld, t)).abs()
        })
        .fold(0.0, f64::max);
    let scan = s_bound_scan(&ld, hybrid.trace());
    let f_equals_l_defect = f_equals_l_on_circle(&ld, F_POINTS);

    let mut per_k = Vec::new();
    for &k in &cfg.k_list {
        let model = FkModel::new(&ld, k)?;
        let fz = find_fk_zeros(&model)?;
        let clustering_pass = cfg
            .delta
            .and_then(|delta| clustering_check(&ld, &fz, delta).ok())
            .map(|c| c.pass);
        per_k.push(KRecord {
            k,
            fk_zero_count: fz.count,
            simple_fraction: simplicity_stats(&fz, SIMPLICITY_TOL),
            max_residual: fz.max_residual(),
            hausdorff: hausdorff(&fz.phis, &zeros.thetas),
            clustering_pass,
        });
    }

    let afe_ok = afe_check(&ld);
    let rh_defect = zeros.max_magnitude_defect();
    let mut breaches = Vec::new();
    let check = |b: &mut Vec<String>, name: &str, v: f64, lim: f64| {
        if !(v < lim) {
            b.push(format!("{name} = {v:e} >= {lim:e}"));
        }
    };
    check(&mut breaches, "rh_defect", rh_defect, tol.rh);
    check(&mut breaches, "trace_defect_max", trace_defect_max, tol.trace);
    check(&mut breaches, "hybrid_defect_max", hybrid_defect_max, tol.hybrid);
    check(&mut breaches, "n_identity_defect_max", n_identity_defect_max, tol.n_identity);
    check(&mut breaches, "f_equals_l_defect", f_equals_l_defect, tol.f_equals_l);
    for kr in &per_k {
        check(&mut breaches, &format!("fk_residual[K={}]", kr.k), kr.max_residual, tol.fk_residual);
        if kr.fk_zero_count < 2 * g {
            breaches.push(format!("fk_zero_count[K={}] = {} < 2g", kr.k, kr.fk_zero_count));
        }
        if kr.clustering_pass == Some(false) {
            breaches.push(format!("clustering[K={}] failed", kr.k));
        }
    }
    if !afe_ok {
        breaches.push("approximate functional equation failed".into());
    }
    if !scan.structural_ok() {
        breaches.push("S bound scan structural check failed".into());
    }

    let rec = ld.to_record();
    Ok(RunRecord {
        index,
        q,
        g,
        d: rec.d,
        d_text: rec.d_text,
        coeffs: rec.coeffs,
        thetas: zeros.thetas.clone(),
        afe_ok,
        rh_defect,
        trace_defect_max,
        hybrid_defect_max,
        n_identity_defect_max,
        f_equals_l_defect,
        sup_s: scan.sup_s,
        sup_s_k: scan.sup_s_k,
        s_ratio: scan.ratio_s,
        s_k_ratio: scan.ratio_s_k,
        repeated_zeros: zeros.repeated,
        zero_at_theta_zero: zeros.zero_at_theta_zero,
        per_k,
        breaches,
    })
}

/// Contents of a JSON-lines batch file.
#[derive(Clone, Debug, Default)]
pub struct BatchFile {
    pub header: Option<Header>,
    pub records: Vec<RunRecord>,
    pub failures: Vec<Failure>,
    pub profiles: Vec<TruncationProfile>,
}

pub fn read_batch(path: &Path) -> Result<BatchFile> {
    let mut out = BatchFile::default();
    let reader = BufReader::new(File::open(path)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line)
            .map_err(|e| Error::Schema(format!("{}:{}: {e}", path.display(), i + 1)))?;
        match parsed {
            Line::Header(h) => {
                if h.schema != ENSEMBLE_SCHEMA {
                    return Err(Error::Schema(format!("expected {ENSEMBLE_SCHEMA}, found {}", h.schema)));
                }
                out.header = Some(h);
            }
            Line::Record(r) => out.records.push(r),
            Line::Failure(f) => out.failures.push(f),
            Line::Profile(p) => out.profiles.push(p),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub written: usize,
    pub skipped: usize,
    pub failed: usize,
    pub breached: usize,
}

fn header_for(cfg: &EnsembleConfig, tol: &Tolerances) -> Header {
    Header {
        schema: ENSEMBLE_SCHEMA.into(),
        q: cfg.q,
        g: cfg.g,
        seed: cfg.seed,
        rng_id: RNG_ID.into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        tolerances: *tol,
        sample_count: cfg.sample_count,
        k_list: cfg.k_list.clone(),
        delta: cfg.delta,
    }
}

/// Runs the pipeline over the seeded sample and appends to `path`.
///
/// Samples whose index already has a record or failure line are skipped,
/// so an interrupted run can be restarted with the same configuration.
pub fn batch_run(cfg: &EnsembleConfig, path: &Path) -> Result<BatchSummary> {
    let ctx = cfg.validate()?;
    let tol = Tolerances::default();
    let header = header_for(cfg, &tol);
    let samples = sample_many(ctx, cfg.g, cfg.sample_count, cfg.seed)?;

    let mut done: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    let exists = path.exists() && std::fs::metadata(path)?.len() > 0;
    if exists {
        let prev = read_batch(path)?;
        let h = prev.header.ok_or_else(|| Error::Schema("existing file has no header".into()))?;
        if (h.q, h.g, h.seed, &h.k_list, h.delta) != (cfg.q, cfg.g, cfg.seed, &cfg.k_list, cfg.delta) {
            return Err(Error::Schema("existing file was written with a different configuration".into()));
        }
        for r in prev.records {
            done.insert(r.index, r.d);
        }
        for f in prev.failures {
            done.insert(f.index, f.d);
        }
        for (&i, d) in &done {
            if samples.get(i).map(|s| s.coeffs()) != Some(d.as_slice()) {
                return Err(Error::Schema(format!("record {i} does not match the seeded sample")));
            }
        }
    }
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if !exists {
        writeln!(file, "{}", serde_json::to_string(&Line::Header(header))?)?;
    }

    let table = PrimeTable::build(ctx, 2 * cfg.g, Budget(cfg.budget))?;
    let pending: Vec<(usize, &Poly)> =
        samples.iter().enumerate().filter(|(i, _)| !done.contains_key(i)).collect();
    let mut summary = BatchSummary { skipped: done.len(), ..Default::default() };
    let chunk = 2 * rayon::current_num_threads();
    for block in pending.chunks(chunk) {
        let lines: Vec<Line> = block
            .par_iter()
            .map(|&(i, d)| match run_one(cfg, &table, &tol, i, d) {
                Ok(r) => Line::Record(r),
                Err(e) => Line::Failure(Failure { index: i, d: d.coeffs().to_vec(), reason: e.to_string() }),
            })
            .collect();
        for line in lines {
            match &line {
                Line::Record(r) => {
                    summary.written += 1;
                    summary.breached += (!r.breaches.is_empty()) as usize;
                }
                Line::Failure(_) => summary.failed += 1,
                Line::Header(_) | Line::Profile(_) => {}
            }
            writeln!(file, "{}", serde_json::to_string(&line)?)?;
        }
        file.flush()?;
    }
    Ok(summary)
}
