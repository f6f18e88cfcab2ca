use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use seqboot::datagen::{generate, SyntheticName, SyntheticSpec};
use seqboot::experiments::{ExperimentKind, ReplicateStatistic};
use seqboot::harness::{self, DatasetSource, OutputFormat, RunConfig, MANIFEST_DIR_ENV};
use seqboot::ingest::write_csv;
use seqboot::report;

#[derive(Parser)]
#[command(name = "seqboot", version, about = "Sequential vs classical bootstrap OOB diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments under both resampling schemes and write result tables.
    Run(RunArgs),
    /// Dump a synthetic generator to CSV.
    Gen(GenArgs),
    /// Inspect the dataset registry.
    Datasets {
        #[command(subcommand)]
        action: DatasetsAction,
    },
    /// Summarise a result directory as Markdown.
    Report {
        dir: PathBuf,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DatasetsAction {
    /// List synthetic generators and discovered manifests.
    List {
        #[arg(long = "manifest-dir", env = MANIFEST_DIR_ENV)]
        manifest_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Args)]
struct RunArgs {
    /// Experiments: exp1..exp5, vardecomp, or all.
    #[arg(long = "exp", value_delimiter = ',', default_value = "all")]
    experiments: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = harness::DEFAULT_SEEDS)]
    seeds: Vec<u64>,
    /// Replicates per ensemble.
    #[arg(long = "B", default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = seqboot::resampling::DEFAULT_RHO)]
    rho: f64,
    /// Generator names, manifest paths, or manifest names; `synthetic` expands
    /// to every generator.
    #[arg(long, value_delimiter = ',', default_value = "synthetic")]
    datasets: Vec<String>,
    #[arg(long = "manifest-dir", env = MANIFEST_DIR_ENV)]
    manifest_dir: Option<PathBuf>,
    /// EXP4 repetitions.
    #[arg(long = "M", default_value_t = 10)]
    repetitions: usize,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "split-seed", default_value_t = 0)]
    split_seed: u64,
    /// Per-replicate statistic for vardecomp: oob-error, leaf-count, probe.
    #[arg(long, default_value = "oob-error")]
    statistic: String,
    /// Synthetic training size override.
    #[arg(long = "n-train")]
    n_train: Option<usize>,
    /// Synthetic test size override.
    #[arg(long = "n-test")]
    n_test: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    generator: String,
    #[arg(long, short = 'n')]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the noiseless signal as the response.
    #[arg(long = "no-noise")]
    no_noise: bool,
    /// Draw from the test sub-stream instead of the training one.
    #[arg(long)]
    test: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: RunArgs) -> anyhow::Result<RunConfig> {
    let experiments = if args.experiments.iter().any(|e| e == "all") {
        ExperimentKind::ALL.to_vec()
    } else {
        let mut out = Vec::new();
        for e in &args.experiments {
            let k: ExperimentKind = e.parse()?;
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out
    };
    let mut datasets = Vec::new();
    for d in &args.datasets {
        if d == "synthetic" {
            datasets.extend(DatasetSource::all_synthetic());
        } else {
            datasets.push(DatasetSource::resolve(d, args.manifest_dir.as_deref())?);
        }
    }
    let synthetic_sizes = match (args.n_train, args.n_test) {
        (None, None) => None,
        (Some(a), Some(b)) => Some((a, b)),
        _ => bail!("--n-train and --n-test must be given together"),
    };
    let statistic: ReplicateStatistic = args.statistic.parse()?;
    let config = RunConfig {
        experiments,
        seeds: args.seeds,
        replicate_count: args.replicates,
        rho: args.rho,
        datasets,
        repetitions: args.repetitions,
        output: args.out,
        format: match args.format {
            Format::Csv => OutputFormat::Csv,
            Format::Markdown => OutputFormat::Markdown,
        },
        workers: args.workers,
        split_seed: args.split_seed,
        statistic,
        synthetic_sizes,
    };
    config.validate()?;
    Ok(config)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let config = build_config(args)?;
    let outcome = harness::run(&config)?;
    for f in &outcome.failures {
        eprintln!(
            "failed: seed {} dataset {} {}: {}",
            f.seed,
            f.dataset,
            f.experiment.map_or("-".into(), |k| k.to_string()),
            f.message
        );
    }
    eprintln!("wrote {} files to {}", outcome.files.len(), config.output.display());
    Ok(ExitCode::from(outcome.exit_code() as u8))
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let name: SyntheticName = args.generator.parse()?;
    if args.n == 0 {
        bail!("-n must be positive");
    }
    let spec = SyntheticSpec {
        name,
        n_train: args.n,
        n_test: args.n,
        seed: args.seed,
        noise_on: !args.no_noise,
    };
    let (train, test) = generate(&spec)?;
    let data = if args.test { test } else { train };
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&data, std::io::BufWriter::new(file), None)?;
        }
        None => write_csv(&data, std::io::stdout().lock(), None)?,
    }
    Ok(())
}

fn cmd_list(manifest_dir: Option<&Path>) -> anyhow::Result<()> {
    let entries = harness::list_datasets(manifest_dir)?;
    let mut out = std::io::stdout().lock();
    for e in entries {
        writeln!(out, "{}\t{}\t{}\t{}", e.name, e.task, e.source, e.detail)?;
    }
    Ok(())
}

fn cmd_report(dir: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let text = report::report(dir)?;
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with other configuration errors; 2 is
    // reserved for partially successful runs.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Gen(args) => cmd_gen(args).map(|_| ExitCode::SUCCESS),
        Command::Datasets {
            action: DatasetsAction::List { manifest_dir },
        } => cmd_list(manifest_dir.as_deref()).map(|_| ExitCode::SUCCESS),
        Command::Report { dir, out } => cmd_report(&dir, out.as_deref()).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
