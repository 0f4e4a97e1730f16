//! Aggregation of batch files into summary tables.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{read_batch, Failure, RunRecord};
use crate::error::{Error, Result};
use crate::hybrid::TruncationProfile;

pub const REPORT_SCHEMA: &str = "hyperell.report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub q: u64,
    pub g: usize,
    pub records: usize,
    pub failures: usize,
    pub seeds: Vec<u64>,
    pub max_trace_defect: f64,
    pub max_hybrid_defect: f64,
    pub max_rh_defect: f64,
    pub max_n_identity_defect: f64,
    pub max_f_equals_l_defect: f64,
    pub mean_sup_s: f64,
    pub max_sup_s: f64,
    pub max_s_ratio: Option<f64>,
    pub max_s_k_ratio: Option<f64>,
    pub breached_records: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub q: u64,
    pub g: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub records: usize,
    pub min_fk_zero_count: usize,
    pub mean_fk_zero_count: f64,
    pub clustering_checked: usize,
    pub clustering_pass_rate: Option<f64>,
    pub mean_simple_fraction: f64,
    pub min_simple_fraction: f64,
    pub max_residual: f64,
    pub max_hausdorff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub branch: String,
    pub q: u64,
    pub g: usize,
    pub param: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub sup_error: f64,
    pub bound_shape: f64,
    pub constant: f64,
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreachRow {
    pub seed: u64,
    pub index: usize,
    #[serde(rename = "D")]
    pub d: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub groups: Vec<GroupRow>,
    pub per_k: Vec<KRow>,
    pub profiles: Vec<ProfileRow>,
    pub breaches: Vec<BreachRow>,
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Aggregates JSON-lines batch files. The result does not depend on the
/// order of the files or of the lines within them.
pub fn build_report<P: AsRef<Path>>(paths: &[P]) -> Result<Report> {
    let mut records: Vec<(u64, RunRecord)> = Vec::new();
    let mut failures: Vec<(u64, u64, usize, Failure)> = Vec::new();
    let mut profiles: Vec<TruncationProfile> = Vec::new();
    for p in paths {
        let file = read_batch(p.as_ref())?;
        if file.header.is_none() && !(file.records.is_empty() && file.failures.is_empty()) {
            return Err(Error::Schema(format!("{}: records without a header", p.as_ref().display())));
        }
        if let Some(h) = &file.header {
            for r in &file.records {
                if (r.q, r.g) != (h.q, h.g) {
                    return Err(Error::Schema(format!("record {} disagrees with its header", r.index)));
                }
            }
            records.extend(file.records.into_iter().map(|r| (h.seed, r)));
            failures.extend(file.failures.into_iter().map(|f| (h.q, h.seed, h.g, f)));
        }
        profiles.extend(file.profiles);
    }
    records.sort_by(|a, b| (a.1.q, a.1.g, &a.1.d, a.0, a.1.index).cmp(&(b.1.q, b.1.g, &b.1.d, b.0, b.1.index)));

    let mut groups: BTreeMap<(u64, usize), Vec<&(u64, RunRecord)>> = BTreeMap::new();
    for r in &records {
        groups.entry((r.1.q, r.1.g)).or_default().push(r);
    }
    let mut report = Report { schema: REPORT_SCHEMA.into(), ..Default::default() };
    let mut fail_counts: BTreeMap<(u64, usize), usize> = BTreeMap::new();
    for (q, _, g, _) in &failures {
        *fail_counts.entry((*q, *g)).or_default() += 1;
    }
    let mut keys: Vec<(u64, usize)> = groups.keys().copied().chain(fail_counts.keys().copied()).collect();
    keys.sort();
    keys.dedup();

    for (q, g) in keys {
        let rs = groups.get(&(q, g)).cloned().unwrap_or_default();
        let mut seeds: Vec<u64> = rs.iter().map(|r| r.0).collect();
        seeds.sort();
        seeds.dedup();
        let fold = |f: fn(&RunRecord) -> f64| rs.iter().map(|r| f(&r.1)).fold(0.0, f64::max);
        let n = rs.len();
        report.groups.push(GroupRow {
            q,
            g,
            records: n,
            failures: fail_counts.get(&(q, g)).copied().unwrap_or(0),
            seeds,
            max_trace_defect: fold(|r| r.trace_defect_max),
            max_hybrid_defect: fold(|r| r.hybrid_defect_max),
            max_rh_defect: fold(|r| r.rh_defect),
            max_n_identity_defect: fold(|r| r.n_identity_defect_max),
            max_f_equals_l_defect: fold(|r| r.f_equals_l_defect),
            mean_sup_s: if n == 0 { 0.0 } else { rs.iter().map(|r| r.1.sup_s).sum::<f64>() / n as f64 },
            max_sup_s: fold(|r| r.sup_s),
            max_s_ratio: rs.iter().fold(None, |a, r| max_opt(a, r.1.s_ratio)),
            max_s_k_ratio: rs.iter().fold(None, |a, r| max_opt(a, r.1.s_k_ratio)),
            breached_records: rs.iter().filter(|r| !r.1.breaches.is_empty()).count(),
        });

        let mut by_k: BTreeMap<usize, Vec<&crate::ensemble::KRecord>> = BTreeMap::new();
        for r in &rs {
            for kr in &r.1.per_k {
                by_k.entry(kr.k).or_default().push(kr);
            }
        }
        for (k, ks) in by_k {
            let m = ks.len() as f64;
            let checked: Vec<bool> = ks.iter().filter_map(|x| x.clustering_pass).collect();
            report.per_k.push(KRow {
                q,
                g,
                k,
                records: ks.len(),
                min_fk_zero_count: ks.iter().map(|x| x.fk_zero_count).min().unwrap_or(0),
                mean_fk_zero_count: ks.iter().map(|x| x.fk_zero_count as f64).sum::<f64>() / m,
                clustering_checked: checked.len(),
                clustering_pass_rate: (!checked.is_empty())
                    .then(|| checked.iter().filter(|&&p| p).count() as f64 / checked.len() as f64),
                mean_simple_fraction: ks.iter().map(|x| x.simple_fraction).sum::<f64>() / m,
                min_simple_fraction: ks.iter().map(|x| x.simple_fraction).fold(1.0, f64::min),
                max_residual: ks.iter().map(|x| x.max_residual).fold(0.0, f64::max),
                max_hausdorff: ks.iter().map(|x| x.hausdorff).fold(0.0, f64::max),
            });
        }
    }

    for (seed, r) in &records {
        for b in &r.breaches {
            report.breaches.push(BreachRow { seed: *seed, index: r.index, d: r.d_text.clone(), detail: b.clone() });
        }
    }
    for (_, seed, _, f) in &failures {
        report.breaches.push(BreachRow {
            seed: *seed,
            index: f.index,
            d: format!("{:?}", f.d),
            detail: format!("failure: {}", f.reason),
        });
    }
    report.breaches.sort_by(|a, b| (a.seed, a.index, &a.d, &a.detail).cmp(&(b.seed, b.index, &b.d, &b.detail)));
    report.breaches.dedup();

    for p in &profiles {
        let branch = serde_json::to_value(p.branch)?.as_str().unwrap_or_default().to_string();
        for (i, &k) in p.ks.iter().enumerate() {
            report.profiles.push(ProfileRow {
                branch: branch.clone(),
                q: p.q,
                g: p.g,
                param: p.param,
                k,
                sup_error: p.sup_errors[i],
                bound_shape: p.bound_shapes[i],
                constant: p.constants[i],
                monotone: p.monotone,
            });
        }
    }
    report.profiles.sort_by(|a, b| {
        (&a.branch, a.q, a.g, a.k)
            .cmp(&(&b.branch, b.q, b.g, b.k))
            .then(a.param.total_cmp(&b.param))
            .then(a.sup_error.total_cmp(&b.sup_error))
    });
    report.profiles.dedup();
    Ok(report)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

fn e(x: f64) -> String {
    format!("{x:.2e}")
}

struct Table {
    name: &'static str,
    title: &'static str,
    head: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn tables(r: &Report) -> Vec<Table> {
    vec![
        Table {
            name: "defects",
            title: "Defects by (q, g)",
            head: vec![
                "q", "g", "records", "failures", "seeds", "trace", "hybrid", "rh", "N identity", "F=L",
                "mean sup S", "max sup S", "S/phi", "S_K/phi", "breached",
            ],
            rows: r
                .groups
                .iter()
                .map(|x| {
                    vec![
                        x.q.to_string(),
                        x.g.to_string(),
                        x.records.to_string(),
                        x.failures.to_string(),
                        x.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
                        e(x.max_trace_defect),
                        e(x.max_hybrid_defect),
                        e(x.max_rh_defect),
                        e(x.max_n_identity_defect),
                        e(x.max_f_equals_l_defect),
                        format!("{:.4}", x.mean_sup_s),
                        format!("{:.4}", x.max_sup_s),
                        opt(x.max_s_ratio),
                        opt(x.max_s_k_ratio),
                        x.breached_records.to_string(),
                    ]
                })
                .collect(),
        },
        Table {
            name: "model_zeros",
            title: "Model zeros by (q, g, K)",
            head: vec![
                "q", "g", "K", "records", "min zeros", "mean zeros", "clustering checked", "clustering pass rate",
                "mean simple", "min simple", "max residual", "max hausdorff",
            ],
            rows: r
                .per_k
                .iter()
                .map(|x| {
                    vec![
                        x.q.to_string(),
                        x.g.to_string(),
                        x.k.to_string(),
                        x.records.to_string(),
                        x.min_fk_zero_count.to_string(),
                        format!("{:.2}", x.mean_fk_zero_count),
                        x.clustering_checked.to_string(),
                        opt(x.clustering_pass_rate),
                        format!("{:.4}", x.mean_simple_fraction),
                        format!("{:.4}", x.min_simple_fraction),
                        e(x.max_residual),
                        e(x.max_hausdorff),
                    ]
                })
                .collect(),
        },
        Table {
            name: "profiles",
            title: "Truncation profiles",
            head: vec!["branch", "q", "g", "param", "K", "sup error", "bound shape", "constant", "monotone"],
            rows: r
                .profiles
                .iter()
                .map(|x| {
                    vec![
                        x.branch.clone(),
                        x.q.to_string(),
                        x.g.to_string(),
                        x.param.to_string(),
                        x.k.to_string(),
                        e(x.sup_error),
                        e(x.bound_shape),
                        e(x.constant),
                        x.monotone.to_string(),
                    ]
                })
                .collect(),
        },
        Table {
            name: "breaches",
            title: "Breaches and failures",
            head: vec!["seed", "index", "D", "detail"],
            rows: r
                .breaches
                .iter()
                .map(|x| vec![x.seed.to_string(), x.index.to_string(), x.d.clone(), x.detail.clone()])
                .collect(),
        },
    ]
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render(report: &Report, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Markdown => {
            out.push_str("# Verification report\n");
            for t in tables(report) {
                let _ = write!(out, "\n## {}\n\n", t.title);
                if t.rows.is_empty() {
                    out.push_str("(none)\n");
                    continue;
                }
                let _ = writeln!(out, "| {} |", t.head.join(" | "));
                let _ = writeln!(out, "|{}", "---|".repeat(t.head.len()));
                for row in t.rows {
                    let _ = writeln!(out, "| {} |", row.join(" | ").replace('\n', " "));
                }
            }
        }
        Format::Csv => {
            for (i, t) in tables(report).into_iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "# {}", t.name);
                let _ = writeln!(out, "{}", t.head.join(","));
                for row in t.rows {
                    let _ = writeln!(out, "{}", row.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(","));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{batch_run, EnsembleConfig};
    use crate::poly::Budget;
    use std::io::Write as _;

    #[test]
    fn empty_input_gives_empty_report() {
        let r = build_report::<&Path>(&[]).unwrap();
        assert!(r.groups.is_empty() && r.per_k.is_empty());
        assert!(render(&r, Format::Markdown).contains("(none)"));
    }

    #[test]
    fn shuffled_input_gives_same_report() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let cfg = EnsembleConfig {
            q: 3,
            g: 1,
            sample_count: 6,
            seed: 5,
            k_list: vec![2, 4],
            budget: Budget::DEFAULT.0,
            delta: Some(0.05),
        };
        batch_run(&cfg, &a).unwrap();
        let text = std::fs::read_to_string(&a).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        let b = dir.path().join("b.jsonl");
        std::fs::write(&b, lines.join("\n")).unwrap();
        let ra = build_report(&[&a]).unwrap();
        let rb = build_report(&[&b]).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(ra.groups.len(), 1);
        assert_eq!(ra.per_k.len(), 2);
        assert_eq!(render(&ra, Format::Csv), render(&rb, Format::Csv));
        assert!(ra.groups[0].max_rh_defect < 1e-8);
    }

    #[test]
    fn bad_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        let mut f = std::fs::File::create(&p).unwrap();
        writeln!(f, r#"{{"type":"header","schema":"other/9"}}"#).unwrap();
        assert!(build_report(&[&p]).is_err());
    }
}
