//! Command-line front end. `run` parses arguments, dispatches, and maps
//! errors to exit codes: 1 invariant breach, 2 usage, 3 budget.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::argument::{arg_eval, gap_bound, n_theta, s_k_from_primes, s_k_from_zeros, s_theta};
use crate::characters::{jacobi, QuadraticCharacter};
use crate::ensemble::{batch_run, rng, run_one, sample_d, EnsembleConfig, Line, Tolerances};
use crate::error::{Error, Result};
use crate::ff::FqContext;
use crate::fmodel::{
    clustering_check, f_zero_equivalence, find_fk_zeros, rh_check_fk, FkModel,
};
use crate::hybrid::{boundary_points, circle_profile, disk_profile, doubling, interior_points, Hybrid};
use crate::lfunction::{
    coeffs_oracle_full, compute_coeffs, compute_zeros, find_zeros, point_count_check, LData, LDataRecord,
    ZeroSet,
};
use crate::poly::{Budget, Poly};
use crate::primes::PrimeTable;
use crate::report::{build_report, render, Format as ReportFormat};
use crate::trace::TraceData;

pub const EXIT_BREACH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "hyperell", version, about = "L-functions of quadratic characters over F_q[x]")]
pub struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    pub format: OutFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
    Table,
}

/// Selects `D`: explicit with `--D`, otherwise sampled from `--seed`.
#[derive(Args, Debug, Clone)]
pub struct DArgs {
    #[arg(long, default_value_t = 3)]
    pub q: u64,
    /// Genus; inferred from `--D` when that is given.
    #[arg(long)]
    pub g: Option<usize>,
    #[arg(long = "D")]
    pub d: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Coefficients and zeros of L(u, chi_D).
    Lpoly(DArgs),
    /// Zeros from an lpoly JSON file or a fresh D.
    Zeros {
        #[arg(long)]
        from_file: Option<PathBuf>,
        #[command(flatten)]
        d: DArgs,
    },
    /// Prime-side traces against zero power sums for n = 1..2g.
    TraceCheck(DArgs),
    /// L = P_K Z_K at interior and boundary points, or a truncation profile.
    HybridCheck {
        #[command(flatten)]
        d: DArgs,
        /// Defaults to 0,1,2,5,10, or a doubling run from the smallest
        /// admissible K when profiling.
        #[arg(long = "K", value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        /// Interior and boundary points each.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, value_enum)]
        profile: Option<ProfileArg>,
        /// `C` for the disk profile (default 1), `c` for the circle
        /// profile (default 0.25).
        #[arg(long)]
        param: Option<f64>,
    },
    /// S, S_K and N on a theta grid; CSV columns theta,S,S_K,N,f_K.
    Arg {
        #[command(flatten)]
        d: DArgs,
        #[arg(long = "K", value_delimiter = ',', default_value = "8")]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, value_delimiter = ',')]
        theta: Vec<f64>,
    },
    /// N(theta) table.
    Count {
        #[command(flatten)]
        d: DArgs,
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
    /// Zeros of the model F_K on the circle.
    FmodelZeros {
        #[command(flatten)]
        d: DArgs,
        #[arg(long = "K", default_value_t = 16)]
        k: usize,
        #[arg(long, value_enum)]
        emit: Option<EmitArg>,
    },
    /// No F_K zeros between clusters around consecutive zeros of L.
    ClusteringCheck {
        #[command(flatten)]
        d: DArgs,
        #[arg(long = "K", default_value_t = 64)]
        k: usize,
        #[arg(long)]
        delta: f64,
    },
    /// Seeded batch over the ensemble, appended as JSON lines to --out.
    Ensemble {
        #[arg(long, default_value_t = 3)]
        q: u64,
        #[arg(long, default_value_t = 2)]
        g: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "K", value_delimiter = ',', default_value = "4,8,16")]
        ks: Vec<usize>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Every invariant on one D; exit 1 on any breach.
    Verify {
        #[command(flatten)]
        d: DArgs,
        #[arg(long = "K", value_delimiter = ',', default_value = "4,8,16")]
        ks: Vec<usize>,
    },
    /// Jacobi symbol (a / b).
    Symbol {
        #[arg(long, default_value_t = 3)]
        q: u64,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Aggregate batch files.
    Report {
        #[arg(required = false)]
        inputs: Vec<PathBuf>,
        #[arg(long = "as", value_enum, default_value_t = ReportArg::Markdown)]
        as_: ReportArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Disk,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmitArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportArg {
    Markdown,
    Csv,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::NoConvergence { .. } | Error::MissedCrossing { .. } | Error::Overflow(_) => EXIT_BREACH,
        _ => EXIT_USAGE,
    }
}

struct Output {
    text: String,
    breach: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, breach: false }
    }
}

fn tabulate(format: OutFormat, head: &[&str], rows: &[Vec<String>], json_value: Value) -> String {
    match format {
        OutFormat::Json => serde_json::to_string_pretty(&json_value).unwrap_or_default() + "\n",
        OutFormat::Csv => {
            let mut s = head.join(",") + "\n";
            for r in rows {
                s += &(r.join(",") + "\n");
            }
            s
        }
        OutFormat::Table => {
            let mut w: Vec<usize> = head.iter().map(|h| h.len()).collect();
            for r in rows {
                for (i, c) in r.iter().enumerate() {
                    w[i] = w[i].max(c.len());
                }
            }
            let line = |cells: Vec<&str>| {
                cells.iter().enumerate().map(|(i, c)| format!("{c:>width$}", width = w[i])).collect::<Vec<_>>().join("  ")
                    + "\n"
            };
            let mut s = line(head.to_vec());
            for r in rows {
                s += &line(r.iter().map(String::as_str).collect());
            }
            s
        }
    }
}

fn with_schema<T: Serialize>(schema: &str, v: &T) -> Result<Value> {
    let mut v = serde_json::to_value(v)?;
    match v.as_object_mut() {
        Some(m) => {
            m.insert("schema".into(), json!(schema));
            Ok(v)
        }
        None => Ok(json!({ "schema": schema, "value": v })),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

fn resolve_d(a: &DArgs) -> Result<Poly> {
    let ctx = FqContext::new(a.q)?;
    match &a.d {
        Some(text) => {
            let d = Poly::parse(ctx, text)?;
            let deg = d.degree().unwrap_or(0);
            if let Some(g) = a.g {
                if deg != 2 * g + 1 {
                    return Err(Error::Precondition(format!("--D has degree {deg}, expected {}", 2 * g + 1)));
                }
            }
            Ok(d)
        }
        None => sample_d(ctx, a.g.unwrap_or(2), &mut rng(a.seed)),
    }
}

fn ldata_for(a: &DArgs, budget: Budget) -> Result<LData> {
    let chi = QuadraticCharacter::new(resolve_d(a)?)?;
    compute_zeros(compute_coeffs(&chi, budget)?)
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| i as f64 / n as f64)
}

fn dispatch(cli: &Cli) -> Result<Output> {
    let budget = Budget::from_env();
    let fmt = cli.format;
    match &cli.command {
        Command::Lpoly(a) => {
            let ld = ldata_for(a, budget)?;
            Ok(Output::ok(pretty(&serde_json::to_value(ld.to_record())?)))
        }
        Command::Zeros { from_file, d } => {
            let (q, coeffs, d_text) = match from_file {
                Some(p) => {
                    let rec: LDataRecord = serde_json::from_str(&std::fs::read_to_string(p)?)
                        .map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
                    let ld = LData::from_record(&rec)?;
                    (ld.q(), ld.coeffs().to_vec(), rec.d_text)
                }
                None => {
                    let ld = ldata_for(d, budget)?;
                    (ld.q(), ld.coeffs().to_vec(), ld.character().discriminant().to_string())
                }
            };
            let zs: ZeroSet = find_zeros(&coeffs, q)?;
            let rows: Vec<Vec<String>> = zs
                .thetas
                .iter()
                .zip(&zs.root_magnitude_defects)
                .map(|(t, m)| vec![format!("{t:.17}"), format!("{m:.3e}")])
                .collect();
            let mut v = with_schema("hyperell.zeros/1", &zs)?;
            v["q"] = json!(q);
            v["D_text"] = json!(d_text);
            Ok(Output::ok(tabulate(fmt, &["theta", "magnitude_defect"], &rows, v)))
        }
        Command::TraceCheck(a) => {
            let ld = ldata_for(a, budget)?;
            let chi = ld.character();
            let table = PrimeTable::build(chi.context(), 2 * ld.genus(), budget)?;
            let tr = TraceData::from_primes(chi, &table)?;
            let defects = crate::lfunction::trace_check(&ld, &tr);
            let rows: Vec<Vec<String>> = defects
                .iter()
                .enumerate()
                .map(|(i, d)| vec![(i + 1).to_string(), tr.psi(i + 1).to_string(), format!("{d:.3e}")])
                .collect();
            let breach = defects.iter().any(|&d| !(d < Tolerances::default().trace));
            let v = json!({
                "schema": "hyperell.trace/1",
                "D_text": chi.discriminant().to_string(),
                "psi": tr.psi,
                "defects": defects,
            });
            Ok(Output { text: tabulate(fmt, &["n", "psi", "defect"], &rows, v), breach })
        }
        Command::HybridCheck { d, ks, grid: n, profile, param } => {
            let ld = ldata_for(d, budget)?;
            if let Some(p) = profile {
                let g = ld.genus() as f64;
                let param = &param.unwrap_or(match p {
                    ProfileArg::Disk => 1.0,
                    ProfileArg::Circle => 0.25,
                });
                let k0 = match p {
                    ProfileArg::Disk => 2.0 * param * g.ln(),
                    ProfileArg::Circle => g * g / param,
                };
                let k0 = (k0.ceil() as usize).max(1);
                let ks = ks.clone().unwrap_or_else(|| doubling(k0, 16 * k0));
                let prof = match p {
                    ProfileArg::Disk => disk_profile(&ld, *param, &ks, 10.0)?,
                    ProfileArg::Circle => circle_profile(&ld, *param, &ks, 10.0)?,
                };
                let breach = !(prof.monotone && prof.within_multiple);
                let v = with_schema("hyperell.profile/1", &Line::Profile(prof))?;
                return Ok(Output { text: serde_json::to_string(&v)? + "\n", breach });
            }
            let ks = ks.clone().unwrap_or_else(|| vec![0, 1, 2, 5, 10]);
            let k_max = ks.iter().copied().max().unwrap_or(0);
            let h = Hybrid::new(&ld, k_max);
            let mut evals = Vec::new();
            for u in interior_points(ld.q(), *n).into_iter().chain(boundary_points(&ld, *n)) {
                for &k in &ks {
                    evals.push(h.check(u, k));
                }
            }
            let max_defect = evals.iter().map(|e| e.defect).fold(0.0, f64::max);
            let rows: Vec<Vec<String>> = evals
                .iter()
                .map(|e| vec![e.u.re.to_string(), e.u.im.to_string(), e.k.to_string(), format!("{:.3e}", e.defect)])
                .collect();
            let v = json!({ "schema": "hyperell.hybrid/1", "max_defect": max_defect, "evals": evals });
            Ok(Output {
                text: tabulate(fmt, &["re_u", "im_u", "K", "defect"], &rows, v),
                breach: !(max_defect < Tolerances::default().hybrid),
            })
        }
        Command::Arg { d, ks, grid: n, theta } => {
            let ld = ldata_for(d, budget)?;
            let h = Hybrid::new(&ld, ks.iter().copied().max().unwrap_or(1));
            let thetas: Vec<f64> = if theta.is_empty() { grid(*n).collect() } else { theta.clone() };
            let g = ld.genus() as f64;
            let mut rows = Vec::new();
            let mut evals = Vec::new();
            for &t in &thetas {
                let e = arg_eval(&ld, h.trace(), t, ks);
                for r in &e.rows {
                    rows.push(vec![
                        t.to_string(),
                        (e.s + 0.0).to_string(),
                        (r.s_k + 0.0).to_string(),
                        e.n.to_string(),
                        (2.0 * g * t + r.s_k).to_string(),
                        r.k.to_string(),
                    ]);
                }
                evals.push(e);
            }
            let v = json!({ "schema": "hyperell.arg/1", "evals": evals });
            Ok(Output::ok(tabulate(fmt, &["theta", "S", "S_K", "N", "f_K", "K"], &rows, v)))
        }
        Command::Count { d, grid: n } => {
            let ld = ldata_for(d, budget)?;
            let g = ld.genus() as f64;
            let mut worst: f64 = 0.0;
            let rows: Vec<Vec<String>> = (0..=*n)
                .map(|i| i as f64 / *n.max(&1) as f64)
                .map(|t| {
                    let nt = n_theta(&ld, t);
                    let rhs = 2.0 * g * t + s_theta(&ld, t);
                    worst = worst.max((nt as f64 - rhs).abs());
                    vec![t.to_string(), nt.to_string(), rhs.to_string()]
                })
                .collect();
            let v = json!({
                "schema": "hyperell.count/1",
                "rows": rows.iter().map(|r| json!({"theta": r[0], "N": r[1], "2g theta + S": r[2]})).collect::<Vec<_>>(),
                "max_defect": worst,
            });
            Ok(Output {
                text: tabulate(fmt, &["theta", "N", "2g theta + S"], &rows, v),
                breach: !(worst < Tolerances::default().n_identity),
            })
        }
        Command::FmodelZeros { d, k, emit } => {
            let ld = ldata_for(d, budget)?;
            let z = find_fk_zeros(&FkModel::new(&ld, *k)?)?;
            let breach = z.count < 2 * ld.genus() || !(z.max_residual() < Tolerances::default().fk_residual);
            let format = match emit {
                Some(EmitArg::Json) => OutFormat::Json,
                Some(EmitArg::Csv) => OutFormat::Csv,
                None => fmt,
            };
            let rows: Vec<Vec<String>> = (0..z.phis.len())
                .map(|i| {
                    vec![
                        z.phis[i].to_string(),
                        z.levels[i].to_string(),
                        z.derivs[i].to_string(),
                        format!("{:.3e}", z.residuals[i]),
                        z.tangential[i].to_string(),
                    ]
                })
                .collect();
            let v = with_schema("hyperell.fk_zeros/1", &z)?;
            Ok(Output { text: tabulate(format, &["phi", "level", "f_K_prime", "residual", "tangential"], &rows, v), breach })
        }
        Command::ClusteringCheck { d, k, delta } => {
            let ld = ldata_for(d, budget)?;
            let z = find_fk_zeros(&FkModel::new(&ld, *k)?)?;
            let c = clustering_check(&ld, &z, *delta)?;
            Ok(Output { text: pretty(&with_schema("hyperell.clustering/1", &c)?), breach: !c.pass })
        }
        Command::Ensemble { q, g, samples, seed, ks, delta } => {
            let out = cli
                .out
                .as_ref()
                .ok_or_else(|| Error::Precondition("ensemble needs --out for the JSON-lines file".into()))?;
            let cfg = EnsembleConfig {
                q: *q,
                g: *g,
                sample_count: *samples,
                seed: *seed,
                k_list: ks.clone(),
                budget: budget.0,
                delta: *delta,
            };
            let s = batch_run(&cfg, out)?;
            let text = pretty(&with_schema("hyperell.batch_summary/1", &s)?);
            eprint!("{text}");
            Ok(Output { text: String::new(), breach: s.failed > 0 || s.breached > 0 })
        }
        Command::Verify { d, ks } => verify(d, ks, budget),
        Command::Symbol { q, a, b } => {
            let ctx = FqContext::new(*q)?;
            let (pa, pb) = (Poly::parse(ctx, a)?, Poly::parse(ctx, b)?);
            let s = jacobi(&pa, &pb)?;
            let v = json!({ "schema": "hyperell.symbol/1", "q": q, "a": pa.to_string(), "b": pb.to_string(), "symbol": s });
            Ok(Output::ok(tabulate(fmt, &["a", "b", "symbol"], &[vec![pa.to_string(), pb.to_string(), s.to_string()]], v)))
        }
        Command::Report { inputs, as_ } => {
            let r = build_report(inputs)?;
            let format = match as_ {
                ReportArg::Markdown => ReportFormat::Markdown,
                ReportArg::Csv => ReportFormat::Csv,
            };
            Ok(Output::ok(render(&r, format)))
        }
    }
}

#[derive(Serialize)]
struct VerifyOut {
    schema: &'static str,
    #[serde(rename = "D_text")]
    d_text: String,
    record: crate::ensemble::RunRecord,
    oracle_match: Option<bool>,
    point_count_defect: i128,
    f_interior_min: f64,
    fk_modulus_defect: f64,
    s_k_form_gap: f64,
    s_bound_excess: f64,
    breaches: Vec<String>,
}

fn verify(a: &DArgs, ks: &[usize], budget: Budget) -> Result<Output> {
    let d = resolve_d(a)?;
    let chi = QuadraticCharacter::new(d.clone())?;
    let g = chi.genus();
    let cfg = EnsembleConfig {
        q: chi.q(),
        g,
        sample_count: 1,
        seed: a.seed,
        k_list: ks.to_vec(),
        budget: budget.0,
        delta: None,
    };
    let table = PrimeTable::build(chi.context(), 2 * g, budget)?;
    let record = run_one(&cfg, &table, &Tolerances::default(), 0, &d)?;
    let ld = compute_zeros(compute_coeffs(&chi, budget)?)?;
    let mut breaches = record.breaches.clone();

    let oracle_match = match coeffs_oracle_full(&chi, budget) {
        Ok(c) => Some(c == ld.coeffs()),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    if oracle_match == Some(false) {
        breaches.push("coefficients differ from the full enumeration".into());
    }
    let pc = point_count_check(&ld)?;
    if pc.defect != 0 {
        breaches.push(format!("point count defect {}", pc.defect));
    }
    let fz = f_zero_equivalence(&ld, 64);
    if !(fz.interior_min > 0.0) {
        breaches.push("F vanishes inside the annulus".into());
    }
    let k_max = ks.iter().copied().max().unwrap_or(1);
    let h = Hybrid::new(&ld, k_max);
    let mut fk_modulus_defect: f64 = 0.0;
    for &k in ks {
        let m = FkModel::new(&ld, k)?;
        fk_modulus_defect = fk_modulus_defect.max(rh_check_fk(&m, 256, 0.5).modulus_defect);
    }
    if !(fk_modulus_defect < 1e-12) {
        breaches.push(format!("F_K modulus defect {fk_modulus_defect:e}"));
    }
    let mut s_k_form_gap: f64 = 0.0;
    let mut s_bound_excess = f64::NEG_INFINITY;
    let mut r = rng(a.seed.wrapping_add(1));
    for _ in 0..64 {
        let t: f64 = rand::Rng::random(&mut r);
        for &k in ks {
            let sp = s_k_from_primes(h.trace(), t, k);
            s_k_form_gap = s_k_form_gap.max((sp - s_k_from_zeros(&ld, t, k)).abs());
            s_bound_excess = s_bound_excess.max((s_theta(&ld, t) - sp).abs() - gap_bound(&ld, t, k));
        }
    }
    if !(s_k_form_gap < 1e-9) {
        breaches.push(format!("S_K forms differ by {s_k_form_gap:e}"));
    }
    if !(s_bound_excess <= 1e-12) {
        breaches.push(format!("|S - S_K| exceeds its bound by {s_bound_excess:e}"));
    }
    let out = VerifyOut {
        schema: "hyperell.verify/1",
        d_text: d.to_string(),
        record,
        oracle_match,
        point_count_defect: pc.defect,
        f_interior_min: fz.interior_min,
        fk_modulus_defect,
        s_k_form_gap,
        s_bound_excess,
        breaches,
    };
    let breach = !out.breaches.is_empty();
    Ok(Output { text: pretty(&serde_json::to_value(&out)?), breach })
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = dispatch(&cli).and_then(|o| {
        match (&cli.out, &cli.command) {
            (_, Command::Ensemble { .. }) => {}
            (Some(p), _) => std::fs::write(p, &o.text)?,
            (None, _) => {
                let mut out = std::io::stdout().lock();
                match out.write_all(o.text.as_bytes()).and_then(|_| out.flush()) {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                    _ => {}
                }
            }
        }
        Ok(o.breach)
    });
    match result {
        Ok(false) => 0,
        Ok(true) => {
            eprintln!("invariant breach");
            EXIT_BREACH
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
