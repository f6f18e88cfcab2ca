//! End-to-end experiment runs: dataset resolution, per-cell execution under
//! both schemes, and deterministic result files.
//!
//! A cell is one `(seed, dataset)` pair. Cells run on a rayon pool but are
//! collected in `(seed, dataset)` input order, so output bytes do not depend
//! on the number of workers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cart::TreeHyperparams;
use crate::datagen::{generate, SyntheticName, SyntheticSpec};
use crate::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::experiments::{
    run_exp1, run_exp2, run_exp3, run_exp4, run_exp5, run_vardecomp, DataSource, DatasetKind,
    Exp4Config, ExperimentKind, MetricRecord, ReplicateStatistic, SchemePair,
};
use crate::ingest::{discover_manifests, load, prepare, DatasetManifest, MANIFEST_EXTENSION};
use crate::report::{records_to_csv, records_to_markdown, result_file_name};
use crate::resampling::DEFAULT_RHO;

/// Environment variable naming the default manifest directory.
pub const MANIFEST_DIR_ENV: &str = "SEQBOOT_MANIFEST_DIR";

pub const DEFAULT_SEEDS: [u64; 3] = [1, 25, 50];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Synthetic(SyntheticName),
    Manifest(PathBuf),
}

impl DatasetSource {
    /// A generator name, a manifest path, or `<name>.manifest` in `manifest_dir`.
    pub fn resolve(spec: &str, manifest_dir: Option<&Path>) -> Result<Self> {
        if let Ok(name) = spec.parse::<SyntheticName>() {
            return Ok(DatasetSource::Synthetic(name));
        }
        let direct = PathBuf::from(spec);
        if direct.is_file() {
            return Ok(DatasetSource::Manifest(direct));
        }
        if let Some(dir) = manifest_dir {
            let candidate = dir.join(format!("{spec}.{MANIFEST_EXTENSION}"));
            if candidate.is_file() {
                return Ok(DatasetSource::Manifest(candidate));
            }
        }
        Err(Error::invalid(format!(
            "`{spec}` is neither a synthetic generator nor a manifest"
        )))
    }

    pub fn all_synthetic() -> Vec<DatasetSource> {
        SyntheticName::ALL.into_iter().map(DatasetSource::Synthetic).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    /// CSV plus a Markdown rendering of each table.
    Markdown,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiments: Vec<ExperimentKind>,
    pub seeds: Vec<u64>,
    pub replicate_count: usize,
    pub rho: f64,
    pub datasets: Vec<DatasetSource>,
    /// EXP4 repetitions.
    pub repetitions: usize,
    pub output: PathBuf,
    pub format: OutputFormat,
    pub workers: Option<usize>,
    pub split_seed: u64,
    pub statistic: ReplicateStatistic,
    /// Overrides the default synthetic `(n_train, n_test)`.
    pub synthetic_sizes: Option<(usize, usize)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiments: ExperimentKind::ALL.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            replicate_count: 100,
            rho: DEFAULT_RHO,
            datasets: DatasetSource::all_synthetic(),
            repetitions: 10,
            output: PathBuf::from("results"),
            format: OutputFormat::Csv,
            workers: None,
            split_seed: 0,
            statistic: ReplicateStatistic::OobError,
            synthetic_sizes: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if self.replicate_count == 0 {
            return Err(Error::invalid("B must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::invalid(format!("rho = {} must lie in (0, 1)", self.rho)));
        }
        if self.experiments.is_empty() {
            return Err(Error::invalid("no experiments selected"));
        }
        if self.datasets.is_empty() {
            return Err(Error::invalid("no datasets selected"));
        }
        if self.experiments.contains(&ExperimentKind::Exp4) && self.repetitions < 2 {
            return Err(Error::invalid("EXP4 needs M >= 2"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be positive"));
        }
        if let Some((a, b)) = self.synthetic_sizes {
            if a < 3 || b == 0 {
                return Err(Error::invalid("synthetic sizes must be at least 3 (train) and 1 (test)"));
            }
        }
        Ok(())
    }

    fn synthetic_spec(&self, name: SyntheticName, seed: u64) -> SyntheticSpec {
        let mut spec = SyntheticSpec::standard(name, seed);
        if let Some((n_train, n_test)) = self.synthetic_sizes {
            spec.n_train = n_train;
            spec.n_test = n_test;
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub seed: u64,
    pub dataset: String,
    pub experiment: Option<ExperimentKind>,
    pub message: String,
}

/// Records of a run keyed by `(experiment, seed)`, rows in dataset order.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub records: BTreeMap<(ExperimentKind, u64), Vec<MetricRecord>>,
    pub failures: Vec<CellFailure>,
    pub datasets: Vec<DatasetInfo>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    /// 0 when every cell succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetInfo {
    pub name: String,
    pub kind: DatasetKind,
    pub detail: String,
}

struct Resolved {
    name: String,
    kind: DatasetKind,
    task: Option<Task>,
    data: std::result::Result<Loaded, String>,
}

enum Loaded {
    Synthetic(SyntheticName),
    Real { train: Box<Dataset>, test: Box<Dataset> },
}

fn resolve_all(config: &RunConfig) -> (Vec<Resolved>, Vec<DatasetInfo>) {
    let mut resolved = Vec::new();
    let mut infos = Vec::new();
    for source in &config.datasets {
        match source {
            DatasetSource::Synthetic(name) => {
                resolved.push(Resolved {
                    name: name.as_str().to_string(),
                    kind: DatasetKind::Synthetic,
                    task: Some(name.task()),
                    data: Ok(Loaded::Synthetic(*name)),
                });
                let spec = config.synthetic_spec(*name, 0);
                infos.push(DatasetInfo {
                    name: name.as_str().into(),
                    kind: DatasetKind::Synthetic,
                    detail: format!("n_train={} n_test={}", spec.n_train, spec.n_test),
                });
            }
            DatasetSource::Manifest(path) => {
                let outcome = DatasetManifest::from_file(path).and_then(|m| {
                    let p = prepare(&m, config.split_seed)?;
                    Ok((m.name, p))
                });
                match outcome {
                    Ok((name, p)) => {
                        let split = p
                            .split
                            .as_ref()
                            .map_or_else(|| "official".to_string(), |s| s.fingerprint());
                        infos.push(DatasetInfo {
                            name: name.clone(),
                            kind: DatasetKind::Real,
                            detail: format!(
                                "n_train={} n_test={} split={split} sha256={}",
                                p.train.len(),
                                p.test.len(),
                                p.content_hash
                            ),
                        });
                        resolved.push(Resolved {
                            name,
                            kind: DatasetKind::Real,
                            task: Some(p.train.task()),
                            data: Ok(Loaded::Real {
                                train: Box::new(p.train),
                                test: Box::new(p.test),
                            }),
                        });
                    }
                    Err(e) => {
                        let name = path
                            .file_stem()
                            .and_then(|s| s.to_str())
                            .unwrap_or("?")
                            .to_string();
                        infos.push(DatasetInfo {
                            name: name.clone(),
                            kind: DatasetKind::Real,
                            detail: format!("ERROR: {e}"),
                        });
                        resolved.push(Resolved {
                            name,
                            kind: DatasetKind::Real,
                            task: None,
                            data: Err(e.to_string()),
                        });
                    }
                }
            }
        }
    }
    (resolved, infos)
}

type CellResult = Vec<(ExperimentKind, std::result::Result<Vec<MetricRecord>, String>)>;

fn run_cell(config: &RunConfig, seed: u64, d: &Resolved) -> CellResult {
    let wanted: Vec<ExperimentKind> = config
        .experiments
        .iter()
        .copied()
        .filter(|k| d.task.is_none_or(|t| k.supports(t)))
        .collect();
    let loaded = match &d.data {
        Ok(l) => l,
        Err(msg) => return wanted.into_iter().map(|k| (k, Err(msg.clone()))).collect(),
    };
    let generated;
    let (train, test, source) = match loaded {
        Loaded::Synthetic(name) => {
            let spec = config.synthetic_spec(*name, seed);
            match generate(&spec) {
                Ok(pair) => generated = pair,
                Err(e) => return wanted.into_iter().map(|k| (k, Err(e.to_string()))).collect(),
            }
            (&generated.0, &generated.1, DataSource::Synthetic(spec))
        }
        Loaded::Real { train, test } => (
            &**train,
            &**test,
            DataSource::Fixed {
                train: (**train).clone(),
                test: (**test).clone(),
            },
        ),
    };
    let task = train.task();
    let hp = TreeHyperparams::standard(task);
    let needs_pair = wanted.iter().any(|k| *k != ExperimentKind::Exp4);
    let pair = if needs_pair {
        Some(SchemePair::fit(train, seed, config.replicate_count, config.rho, &hp).map_err(|e| e.to_string()))
    } else {
        None
    };

    wanted
        .into_iter()
        .map(|k| {
            let label = k.type_label(d.kind, task);
            let name = d.name.as_str();
            let result = match (k, &pair) {
                (ExperimentKind::Exp4, _) => {
                    let cfg = Exp4Config {
                        repetitions: config.repetitions,
                        replicate_count: config.replicate_count,
                        rho: config.rho,
                        seed,
                        hp,
                    };
                    run_exp4(name, label, &source, &cfg).map_err(|e| e.to_string())
                }
                (_, Some(Err(msg))) => Err(msg.clone()),
                (_, Some(Ok(pair))) => match k {
                    ExperimentKind::Exp1 => run_exp1(name, label, test, pair),
                    ExperimentKind::Exp2 => run_exp2(name, label, train, test, pair),
                    ExperimentKind::Exp3 => run_exp3(name, label, test, pair),
                    ExperimentKind::Exp5 => run_exp5(name, label, train, test, pair, &hp),
                    ExperimentKind::VarDecomp => {
                        run_vardecomp(name, label, train, test, pair, config.statistic)
                    }
                    ExperimentKind::Exp4 => unreachable!(),
                }
                .map_err(|e| e.to_string()),
                (_, None) => unreachable!("pair is fitted whenever a non-EXP4 experiment runs"),
            };
            (k, result)
        })
        .collect()
}

/// Computes every requested cell without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (resolved, datasets) = resolve_all(config);
    let cells: Vec<(u64, usize)> = config
        .seeds
        .iter()
        .flat_map(|&s| (0..resolved.len()).map(move |d| (s, d)))
        .collect();
    let compute = || -> Vec<CellResult> {
        cells
            .par_iter()
            .map(|&(seed, d)| run_cell(config, seed, &resolved[d]))
            .collect()
    };
    let results = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(compute),
        None => compute(),
    };

    let mut outcome = RunOutcome {
        datasets,
        ..RunOutcome::default()
    };
    for &k in &config.experiments {
        for &seed in &config.seeds {
            outcome.records.entry((k, seed)).or_default();
        }
    }
    for (&(seed, d), cell) in cells.iter().zip(results) {
        for (k, result) in cell {
            match result {
                Ok(records) => outcome.records.entry((k, seed)).or_default().extend(records),
                Err(message) => outcome.failures.push(CellFailure {
                    seed,
                    dataset: resolved[d].name.clone(),
                    experiment: Some(k),
                    message,
                }),
            }
        }
    }
    Ok(outcome)
}

/// Executes the run and writes one file per `(experiment, seed)` into
/// `config.output`, plus `datasets.csv` and, on failures, `errors.csv`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let mut outcome = execute(config)?;
    let dir = &config.output;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, body: String, files: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        files.push(path);
        Ok(())
    };
    let mut files = Vec::new();
    for &k in &config.experiments {
        for &seed in &config.seeds {
            let records = &outcome.records[&(k, seed)];
            write(result_file_name(k.as_str(), seed, "csv"), records_to_csv(records)?, &mut files)?;
            if config.format == OutputFormat::Markdown {
                let title = format!("{k} seed {seed}");
                write(
                    result_file_name(k.as_str(), seed, "md"),
                    records_to_markdown(&title, records),
                    &mut files,
                )?;
            }
        }
    }
    let mut info = String::from("dataset,kind,detail\n");
    for d in &outcome.datasets {
        let _ = writeln!(info, "{},{},{}", d.name, d.kind.as_str(), d.detail.replace(',', ";"));
    }
    write("datasets.csv".into(), info, &mut files)?;
    let errors_path = dir.join("errors.csv");
    if outcome.failures.is_empty() {
        if errors_path.exists() {
            fs::remove_file(&errors_path).map_err(|e| Error::io(&errors_path, e))?;
        }
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["seed", "dataset", "experiment", "message"])?;
        for f in &outcome.failures {
            w.write_record([
                f.seed.to_string(),
                f.dataset.clone(),
                f.experiment.map_or("-".into(), |k| k.to_string()),
                f.message.clone(),
            ])?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
            .map_err(|e| Error::invalid(e.to_string()))?;
        write("errors.csv".into(), body, &mut files)?;
    }
    outcome.files = files;
    Ok(outcome)
}

/// One line of `datasets list`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub name: String,
    pub source: String,
    pub task: String,
    /// Content hash, or `ERROR: …` for unusable manifests.
    pub detail: String,
}

impl RegistryEntry {
    pub fn is_error(&self) -> bool {
        self.detail.starts_with("ERROR")
    }
}

fn task_name(task: Task) -> String {
    match task {
        Task::Classification { num_classes } => format!("classification({num_classes})"),
        Task::Regression => "regression".into(),
    }
}

/// Synthetic generators followed by the manifests found in `manifest_dir`.
pub fn list_datasets(manifest_dir: Option<&Path>) -> Result<Vec<RegistryEntry>> {
    let mut out: Vec<RegistryEntry> = SyntheticName::ALL
        .iter()
        .map(|n| RegistryEntry {
            name: n.as_str().into(),
            source: "synthetic".into(),
            task: task_name(n.task()),
            detail: "generator".into(),
        })
        .collect();
    let Some(dir) = manifest_dir else {
        return Ok(out);
    };
    for path in discover_manifests(dir)? {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string();
        let entry = match DatasetManifest::from_file(&path).and_then(|m| Ok((m.name.clone(), load(&m)?))) {
            Ok((name, loaded)) => RegistryEntry {
                name,
                source: path.display().to_string(),
                task: task_name(loaded.dataset.task()),
                detail: format!("sha256={}", loaded.content_hash),
            },
            Err(e) => RegistryEntry {
                name: stem,
                source: path.display().to_string(),
                task: "?".into(),
                detail: format!("ERROR: {e}"),
            },
        };
        out.push(entry);
    }
    Ok(out)
}
