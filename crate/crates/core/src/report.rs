//! Result tables: number formatting, CSV/Markdown writers and the
//! cross-seed sign-consistency summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::MetricRecord;

/// Frozen CSV header.
pub const CSV_HEADER: [&str; 6] = ["dataset", "type", "metric", "OOB", "SB_OOB", "diff"];

/// Three significant figures in positional notation (`0.0904`, `8.42`, `27200`).
pub fn format_sig3(x: f64) -> String {
    if !x.is_finite() {
        return "NaN".into();
    }
    if x == 0.0 {
        return "0.00".into();
    }
    // Round through scientific notation so the exponent reflects rounding.
    let rounded: f64 = format!("{x:.2e}").parse().unwrap_or(x);
    let exponent = rounded.abs().log10().floor() as i32;
    let decimals = (2 - exponent).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Three significant figures in scientific notation with a signed two-digit
/// exponent (`-7.15e-04`, `0.00e+00`).
pub fn format_sci3(x: f64) -> String {
    if !x.is_finite() {
        return "NaN".into();
    }
    let s = format!("{x:.2e}");
    let (mantissa, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let mantissa = if mantissa == "-0.00" { "0.00" } else { mantissa };
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

fn cells(r: &MetricRecord) -> [String; 6] {
    [
        r.dataset.clone(),
        r.kind.clone(),
        r.metric.clone(),
        format_sig3(r.oob_value),
        format_sig3(r.sb_oob_value),
        format_sci3(r.diff),
    ]
}

pub fn records_to_csv(records: &[MetricRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(cells(r))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

pub fn records_to_markdown(title: &str, records: &[MetricRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "### {title}\n");
    let _ = writeln!(out, "| {} |", CSV_HEADER.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(CSV_HEADER.len()));
    for r in records {
        let _ = writeln!(out, "| {} |", cells(r).join(" | "));
    }
    out
}

/// A parsed result row; numeric columns keep their printed form.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub dataset: String,
    pub kind: String,
    pub metric: String,
    pub oob: String,
    pub sb_oob: String,
    pub diff: f64,
}

pub fn read_table(path: &Path) -> Result<Vec<TableRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Data {
            row: 0,
            message: format!("{}: unexpected header {header:?}", path.display()),
        });
    }
    let mut rows = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let get = |j: usize| rec.get(j).unwrap_or("").to_string();
        let diff = get(5).parse::<f64>().map_err(|_| Error::Data {
            row,
            message: format!("{}: diff `{}` is not a number", path.display(), get(5)),
        })?;
        rows.push(TableRow {
            dataset: get(0),
            kind: get(1),
            metric: get(2),
            oob: get(3),
            sb_oob: get(4),
            diff,
        });
    }
    Ok(rows)
}

/// `expK_seedS.csv` / `vardecomp_seedS.csv` file name.
pub fn result_file_name(experiment: &str, seed: u64, extension: &str) -> String {
    format!("{experiment}_seed{seed}.{extension}")
}

/// Splits `exp1_seed25.csv` into `("exp1", 25)`.
pub fn parse_result_file_name(name: &str) -> Option<(String, u64)> {
    let stem = name.strip_suffix(".csv")?;
    let (exp, seed) = stem.rsplit_once("_seed")?;
    Some((exp.to_string(), seed.parse().ok()?))
}

/// Sign counts of `diff` for one `(experiment, dataset, metric)` across seeds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignCounts {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl SignCounts {
    pub fn seeds(&self) -> usize {
        self.negative + self.zero + self.positive
    }

    /// `"k/n"` where `k` is the size of the largest sign class.
    pub fn consistency(&self) -> String {
        let top = self.negative.max(self.zero).max(self.positive);
        format!("{top}/{}", self.seeds())
    }
}

/// Per-experiment tables plus sign consistency, keyed as in the files.
#[derive(Debug, Clone, Default)]
pub struct ResultSet {
    /// experiment -> seed -> rows
    pub tables: BTreeMap<String, BTreeMap<u64, Vec<TableRow>>>,
}

impl ResultSet {
    pub fn load(dir: &Path) -> Result<Self> {
        let mut files: Vec<(String, u64, PathBuf)> = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if let Some((exp, seed)) = parse_result_file_name(name) {
                files.push((exp, seed, path));
            }
        }
        if files.is_empty() {
            return Err(Error::invalid(format!("no result CSV files in {}", dir.display())));
        }
        let mut set = ResultSet::default();
        for (exp, seed, path) in files {
            let rows = read_table(&path)?;
            set.tables.entry(exp).or_default().insert(seed, rows);
        }
        Ok(set)
    }

    /// `(experiment, dataset, metric) -> counts`, in first-appearance order
    /// of datasets and metrics within each experiment.
    pub fn sign_consistency(&self) -> Vec<((String, String, String), SignCounts)> {
        let mut out: Vec<((String, String, String), SignCounts)> = Vec::new();
        for (exp, seeds) in &self.tables {
            for rows in seeds.values() {
                for r in rows {
                    let key = (exp.clone(), r.dataset.clone(), r.metric.clone());
                    let idx = match out.iter().position(|(k, _)| *k == key) {
                        Some(i) => i,
                        None => {
                            out.push((key, SignCounts::default()));
                            out.len() - 1
                        }
                    };
                    let c = &mut out[idx].1;
                    if r.diff < 0.0 {
                        c.negative += 1;
                    } else if r.diff > 0.0 {
                        c.positive += 1;
                    } else {
                        c.zero += 1;
                    }
                }
            }
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Sequential vs classical bootstrap: results\n\n");
        for (exp, seeds) in &self.tables {
            let _ = writeln!(out, "## {exp}\n");
            for (seed, rows) in seeds {
                let _ = writeln!(out, "### seed {seed}\n");
                let _ = writeln!(out, "| {} |", CSV_HEADER.join(" | "));
                let _ = writeln!(out, "|{}", "---|".repeat(CSV_HEADER.len()));
                for r in rows {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | {} | {} |",
                        r.dataset,
                        r.kind,
                        r.metric,
                        r.oob,
                        r.sb_oob,
                        format_sci3(r.diff)
                    );
                }
                out.push('\n');
            }
        }
        out.push_str("## Cross-seed sign consistency\n\n");
        out.push_str("| experiment | dataset | metric | seeds | diff<0 | diff=0 | diff>0 | consistency |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        for ((exp, dataset, metric), c) in self.sign_consistency() {
            let _ = writeln!(
                out,
                "| {exp} | {dataset} | {metric} | {} | {} | {} | {} | {} |",
                c.seeds(),
                c.negative,
                c.zero,
                c.positive,
                c.consistency()
            );
        }
        out
    }
}

/// Markdown summary of every result CSV in `dir`.
pub fn report(dir: &Path) -> Result<String> {
    Ok(ResultSet::load(dir)?.to_markdown())
}
