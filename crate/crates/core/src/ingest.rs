//! CSV ingestion for user-supplied datasets and the fixed 2/3 - 1/3 split.
//!
//! A dataset is declared by a manifest, a UTF-8 text file of `key = value`
//! lines (`#` starts a comment, blank lines are ignored):
//!
//! ```text
//! name = breast-cancer
//! path = breast-cancer.csv          # relative to the manifest's directory
//! target = class                    # header name, or a 0-based column index
//! task = classification             # or: regression
//! labels = benign:0, malignant:1    # optional label dictionary
//! test_path = breast-cancer-test.csv  # optional official test file
//! is_test_column = is_test          # optional 0/1 column marking official test rows
//! ```
//!
//! Data files are comma-delimited with a header row and `.` decimal
//! separators. Every non-target cell must be a finite number; rows with
//! missing or non-numeric cells are rejected. No preprocessing is applied.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use crate::dataset::{Dataset, Target, Task};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// File extension of dataset manifests.
pub const MANIFEST_EXTENSION: &str = "manifest";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub path: PathBuf,
    pub target: TargetColumn,
    pub task: TaskKind,
    /// Label string to class id. Ids must be dense in `[0, C)`.
    pub labels: Option<BTreeMap<String, usize>>,
    pub test_path: Option<PathBuf>,
    pub is_test_column: Option<String>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, path: impl Into<PathBuf>, target: TargetColumn, task: TaskKind) -> Self {
        DatasetManifest {
            name: name.into(),
            path: path.into(),
            target,
            task,
            labels: None,
            test_path: None,
            is_test_column: None,
        }
    }

    /// Reads a manifest file; relative data paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base).map_err(|message| Error::Manifest {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str, base: &Path) -> std::result::Result<Self, String> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            let key = k.trim().to_string();
            if kv.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
            }
        }
        let take = |kv: &mut BTreeMap<String, String>, key: &str| kv.remove(key);
        let require = |kv: &mut BTreeMap<String, String>, key: &str| {
            kv.remove(key).ok_or_else(|| format!("missing required key `{key}`"))
        };
        let resolve = |p: String| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let name = require(&mut kv, "name")?;
        let path = resolve(require(&mut kv, "path")?);
        let target_raw = require(&mut kv, "target")?;
        let task = match require(&mut kv, "task")?.as_str() {
            "classification" => TaskKind::Classification,
            "regression" => TaskKind::Regression,
            other => return Err(format!("unknown task `{other}`")),
        };
        let labels = take(&mut kv, "labels").map(|s| parse_labels(&s)).transpose()?;
        if labels.is_some() && task == TaskKind::Regression {
            return Err("`labels` given for a regression dataset".into());
        }
        let test_path = take(&mut kv, "test_path").map(resolve);
        let is_test_column = take(&mut kv, "is_test_column");
        if test_path.is_some() && is_test_column.is_some() {
            return Err("`test_path` and `is_test_column` are mutually exclusive".into());
        }
        if let Some(extra) = kv.keys().next() {
            return Err(format!("unknown key `{extra}`"));
        }
        Ok(DatasetManifest {
            name,
            path,
            target: TargetColumn::Name(target_raw),
            task,
            labels,
            test_path,
            is_test_column,
        })
    }
}

fn parse_labels(s: &str) -> std::result::Result<BTreeMap<String, usize>, String> {
    let mut map = BTreeMap::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (label, id) = item
            .rsplit_once(':')
            .ok_or_else(|| format!("label entry `{item}` is not `label:id`"))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| format!("label id in `{item}` is not a non-negative integer"))?;
        map.insert(label.trim().to_string(), id);
    }
    let ids: BTreeSet<usize> = map.values().copied().collect();
    if map.is_empty() || ids.len() != map.len() || ids.iter().next_back() != Some(&(ids.len() - 1)) {
        return Err("label ids must be distinct and dense in [0, C)".into());
    }
    Ok(map)
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().any(String::is_empty) {
        return Err(Error::Data {
            row: 0,
            message: format!("{}: header has empty column names", path.display()),
        });
    }
    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data {
            row,
            message: format!("{} line {}: {e}", path.display(), row + 2),
        })?;
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    Ok(RawTable { header, rows })
}

fn target_index(header: &[String], target: &TargetColumn) -> Result<usize> {
    let found = match target {
        TargetColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .or_else(|| name.parse::<usize>().ok().filter(|&i| i < header.len())),
        TargetColumn::Index(i) => Some(*i).filter(|&i| i < header.len()),
    };
    found.ok_or_else(|| Error::Data {
        row: 0,
        message: format!("target column {target:?} not found in header"),
    })
}

/// Label dictionary built from the observed label strings when the manifest
/// gives none: integer labels in numeric order, otherwise lexicographic.
fn infer_labels<'a>(observed: impl Iterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let distinct: BTreeSet<&str> = observed.collect();
    let mut ordered: Vec<&str> = distinct.into_iter().collect();
    if ordered.iter().all(|s| s.parse::<i64>().is_ok()) {
        ordered.sort_by_key(|s| s.parse::<i64>().unwrap_or(0));
    }
    ordered
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s.to_string(), i))
        .collect()
}

/// Parsed and validated dataset plus the provenance needed by reports.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Rows flagged by `is_test_column`, if the manifest declares one.
    pub official_test_rows: Option<Vec<usize>>,
    /// Dataset from `test_path`, if the manifest declares one.
    pub official_test: Option<Dataset>,
    /// Class names ordered by class id (classification only).
    pub class_names: Option<Vec<String>>,
    /// SHA-256 over the data file(s), hex encoded.
    pub content_hash: String,
}

/// Loads the manifest's main data file as one dataset.
pub fn load_csv(manifest: &DatasetManifest) -> Result<Dataset> {
    Ok(load(manifest)?.dataset)
}

pub fn load(manifest: &DatasetManifest) -> Result<LoadedData> {
    let main = read_table(&manifest.path)?;
    let test = manifest.test_path.as_deref().map(read_table).transpose()?;
    if let Some(t) = &test {
        if t.header != main.header {
            return Err(Error::Data {
                row: 0,
                message: "test file header differs from the main file".into(),
            });
        }
    }
    let tcol = target_index(&main.header, &manifest.target)?;
    let flag_col = manifest
        .is_test_column
        .as_ref()
        .map(|name| {
            main.header.iter().position(|h| h == name).ok_or_else(|| Error::Data {
                row: 0,
                message: format!("is_test column `{name}` not found in header"),
            })
        })
        .transpose()?;
    if flag_col == Some(tcol) {
        return Err(Error::invalid("is_test column cannot be the target"));
    }

    let labels = match manifest.task {
        TaskKind::Classification => Some(match &manifest.labels {
            Some(map) => map.clone(),
            None => infer_labels(
                main.rows
                    .iter()
                    .chain(test.iter().flat_map(|t| t.rows.iter()))
                    .filter_map(|r| r.get(tcol).map(String::as_str)),
            ),
        }),
        TaskKind::Regression => None,
    };

    let build = |table: &RawTable, what: &str| -> Result<(Dataset, Vec<usize>)> {
        to_dataset(&manifest.name, table, tcol, flag_col, labels.as_ref(), what)
    };
    let (dataset, flagged) = build(&main, &manifest.path.display().to_string())?;
    let official_test = match (&test, &manifest.test_path) {
        (Some(t), Some(p)) => Some(build(t, &p.display().to_string())?.0),
        _ => None,
    };
    let official_test_rows = flag_col.map(|_| flagged);

    let mut hasher = Sha256::new();
    hasher.update(fs::read(&manifest.path).map_err(|e| Error::io(&manifest.path, e))?);
    if let Some(p) = &manifest.test_path {
        hasher.update(fs::read(p).map_err(|e| Error::io(p, e))?);
    }
    let class_names = labels.map(|map| {
        let mut names = vec![String::new(); map.len()];
        for (name, id) in map {
            names[id] = name;
        }
        names
    });
    Ok(LoadedData {
        dataset,
        official_test_rows,
        official_test,
        class_names,
        content_hash: hex::encode(hasher.finalize()),
    })
}

fn to_dataset(
    name: &str,
    table: &RawTable,
    tcol: usize,
    flag_col: Option<usize>,
    labels: Option<&BTreeMap<String, usize>>,
    source: &str,
) -> Result<(Dataset, Vec<usize>)> {
    let width = table.header.len();
    let p = width - 1 - usize::from(flag_col.is_some());
    if p == 0 {
        return Err(Error::invalid(format!("{source}: no feature columns")));
    }
    let mut features = Vec::with_capacity(table.rows.len() * p);
    let mut classes = Vec::new();
    let mut reals = Vec::new();
    let mut flagged = Vec::new();
    for (row, cells) in table.rows.iter().enumerate() {
        let err = |message: String| Error::Data {
            row,
            message: format!("{source} line {}: {message}", row + 2),
        };
        if cells.len() != width {
            return Err(err(format!("expected {width} cells, found {}", cells.len())));
        }
        for (j, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(err(format!("empty cell in column `{}`", table.header[j])));
            }
            if j == tcol {
                match labels {
                    Some(map) => classes.push(
                        *map.get(cell.as_str())
                            .ok_or_else(|| err(format!("unmapped label `{cell}`")))?,
                    ),
                    None => reals.push(parse_finite(cell).ok_or_else(|| {
                        err(format!("response `{cell}` is not a finite number"))
                    })?),
                }
            } else if Some(j) == flag_col {
                match cell.as_str() {
                    "1" | "true" => flagged.push(row),
                    "0" | "false" => {}
                    other => return Err(err(format!("is_test value `{other}` is not 0/1"))),
                }
            } else {
                features.push(parse_finite(cell).ok_or_else(|| {
                    err(format!(
                        "value `{cell}` in column `{}` is not a finite number",
                        table.header[j]
                    ))
                })?);
            }
        }
    }
    let (target, task) = match labels {
        Some(map) => (
            Target::Class(classes),
            Task::Classification {
                num_classes: map.len(),
            },
        ),
        None => (Target::Real(reals), Task::Regression),
    };
    Ok((Dataset::new(name, features, p, target, task)?, flagged))
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes `data` as CSV with header `x1,…,xp,y`. Class ids are written as
/// their names when `class_names` is given.
pub fn dump_csv(data: &Dataset, path: &Path, class_names: Option<&[String]>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(data, file, class_names)
}

pub fn write_csv<W: std::io::Write>(data: &Dataset, out: W, class_names: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=data.n_features()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(match data.target() {
            Target::Class(labels) => match class_names {
                Some(names) => names[labels[i]].clone(),
                None => labels[i].to_string(),
            },
            Target::Real(y) => format!("{:?}", y[i]),
        });
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Disjoint train/test row indices, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrainTestSplit {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub split_seed: u64,
}

impl TrainTestSplit {
    /// Materializes the split.
    pub fn apply(&self, data: &Dataset) -> Result<(Dataset, Dataset)> {
        Ok((data.subset(&self.train_indices)?, data.subset(&self.test_indices)?))
    }

    /// Short hex digest of the index sets, for reports.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for i in &self.train_indices {
            h.update((*i as u64).to_le_bytes());
        }
        h.update(u64::MAX.to_le_bytes());
        for i in &self.test_indices {
            h.update((*i as u64).to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    /// Split from an explicit list of test rows.
    pub fn from_test_rows(n: usize, test_rows: &[usize]) -> Result<Self> {
        let test: BTreeSet<usize> = test_rows.iter().copied().collect();
        if test.iter().any(|&i| i >= n) {
            return Err(Error::invalid("test row out of range"));
        }
        if test.is_empty() || test.len() == n {
            return Err(Error::invalid("official split leaves train or test empty"));
        }
        Ok(TrainTestSplit {
            train_indices: (0..n).filter(|i| !test.contains(i)).collect(),
            test_indices: test.into_iter().collect(),
            split_seed: 0,
        })
    }
}

/// Uniform random permutation keyed by `split_seed` only; the first
/// `round(2n/3)` rows train, the rest test. No stratification.
pub fn fixed_split(data: &Dataset, split_seed: u64) -> Result<TrainTestSplit> {
    let n = data.len();
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 rows to split, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut Stream::derive(split_seed, &[rng::SPLIT]));
    let n_train = (2 * n + 1) / 3;
    let mut train_indices = perm[..n_train].to_vec();
    let mut test_indices = perm[n_train..].to_vec();
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok(TrainTestSplit {
        train_indices,
        test_indices,
        split_seed,
    })
}

/// Train/test pair ready for the experiments.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    /// `None` when the manifest supplied an official test file.
    pub split: Option<TrainTestSplit>,
    pub content_hash: String,
}

/// Loads a manifest and applies its official split, or [`fixed_split`].
pub fn prepare(manifest: &DatasetManifest, split_seed: u64) -> Result<PreparedData> {
    let loaded = load(manifest)?;
    let (train, test, split) = if let Some(test) = loaded.official_test {
        (loaded.dataset, test, None)
    } else {
        let split = match &loaded.official_test_rows {
            Some(rows) => TrainTestSplit::from_test_rows(loaded.dataset.len(), rows)?,
            None => {
                if loaded.dataset.len() < 2 {
                    return Err(Error::invalid("dataset needs at least 2 rows"));
                }
                fixed_split(&loaded.dataset, split_seed)?
            }
        };
        let (train, test) = split.apply(&loaded.dataset)?;
        (train, test, Some(split))
    };
    Ok(PreparedData {
        train,
        test,
        split,
        content_hash: loaded.content_hash,
    })
}

/// `*.manifest` files in `dir`, sorted by path.
pub fn discover_manifests(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(MANIFEST_EXTENSION) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
