//! The `hdc-seizure` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use hdc_core::evaluation::{evaluate, LabelSequence};
use hdc_core::Strategy;

use crate::config::{parse_strategies, ExperimentConfig};
use crate::error::{Error, Result};
use crate::harness::{
    bench, compare_scores, external_scores, load_scores, read_predictions, run_experiment, write_bench,
    write_comparisons, write_experiment, write_report, HostInfo, Settings,
};
use crate::pipeline::{featurize, ingest, load_datasets, synth_corpus, FeaturizeStatus};

const CONFIG_HELP: &str = "\
Configuration is sectioned `key = value` text; '#' starts a comment.
Unknown sections or keys are usage errors. Defaults:

";

#[derive(Debug, Parser)]
#[command(name = "hdc-seizure", version, about = "Seizure detection with binary hyperdimensional prototypes")]
struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set encoder.dim=2048`. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides experiment.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Strategy tag to run (2C, 2C+, 2C+-, MC, MCr, MCc, MCri, On+, On+-).
    /// Repeatable; defaults to training.strategies.
    #[arg(long = "strategy", global = true)]
    strategies: Vec<String>,
    /// Redo stages whose outputs already exist.
    #[arg(long, global = true)]
    force: bool,
    /// Output directory of the stage; defaults depend on the stage.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Raw data root; overrides paths.data_root.
    #[arg(long, global = true, env = "HDC_SEIZURE_DATA")]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus (recording CSVs and annotations).
    Synth,
    /// Index and validate the raw recordings.
    Ingest,
    /// Build the per-seizure feature files; skips finished subjects.
    Featurize,
    /// Leave-one-seizure-out cross-validation of the strategies.
    Train,
    /// Score a predictions CSV with `truth` and `pred` columns.
    Evaluate {
        predictions: PathBuf,
        /// Score the predictions as given, without smoothing and merging.
        #[arg(long)]
        no_postprocess: bool,
    },
    /// Wilcoxon comparison of finished strategies, or of an external
    /// classifier's predictions against them.
    Compare {
        /// Directory of `<subject>/<test>.csv` external predictions.
        #[arg(long)]
        external: Option<PathBuf>,
        /// Name used for the external classifier in the output.
        #[arg(long, default_value = "external")]
        external_name: String,
    },
    /// Time training and measure model size, single-threaded.
    Bench,
    /// Aggregate per-subject results into report.csv and report.json.
    Report,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cmd = <Cli as clap::CommandFactory>::command().after_long_help(format!(
        "{CONFIG_HELP}{}",
        ExperimentConfig::default().to_text()
    ));
    let cli = match cmd.try_get_matches_from(args).and_then(|m| <Cli as clap::FromArgMatches>::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(d) = &cli.data {
        cfg.data_root = d.clone();
    }
    if !cli.strategies.is_empty() {
        cfg.strategies = parse_strategies(&cli.strategies).map_err(Error::Usage)?;
    }
    Ok(cfg)
}

fn experiment_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| cfg.results_dir.join(&cfg.name))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = resolve_config(&cli)?;
    let jobs = cli.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("--jobs: {e}")))?;
    match &cli.command {
        Command::Synth => {
            let out = cli.out.clone().unwrap_or_else(|| cfg.data_root.clone());
            let subjects = pool.install(|| synth_corpus(&cfg, &out))?;
            println!("wrote {} synthetic subjects to {}", subjects.len(), out.display());
        }
        Command::Ingest => {
            if let Some(out) = &cli.out {
                cfg.work_dir = out.clone();
            }
            let index = pool.install(|| ingest(&cfg))?;
            for s in &index.subjects {
                let seizures: usize = s.recordings.iter().map(|r| r.info.annotations.len()).sum();
                println!("{}: {} recordings, {} seizures", s.subject, s.recordings.len(), seizures);
            }
        }
        Command::Featurize => {
            if let Some(out) = &cli.out {
                cfg.work_dir = out.clone();
            }
            let status = pool.install(|| featurize(&cfg, cli.force))?;
            let mut failed = Vec::new();
            for (subject, s) in &status {
                match s {
                    FeaturizeStatus::Written { files } => println!("{subject}: {files} seizure files"),
                    FeaturizeStatus::Skipped => println!("{subject}: up to date"),
                    FeaturizeStatus::Failed(e) => {
                        println!("{subject}: failed: {e}");
                        failed.push(subject.clone());
                    }
                }
            }
            if failed.len() == status.len() {
                return Err(Error::Invalid("every subject failed to featurize".into()));
            }
        }
        Command::Train => {
            let dir = experiment_dir(&cli, &cfg);
            let settings = Settings::from_config(&cfg)?;
            let datasets = pool.install(|| load_datasets(&cfg.work_dir))?;
            let results = pool.install(|| run_experiment(&datasets, &cfg.strategies, &settings));
            let comparisons = write_experiment(&dir, &results, cfg.baseline, &cfg.name, cfg.seed, &cfg.to_text())?;
            for f in &results.failures {
                eprintln!("warning: subject {} failed: {}", f.subject, f.error);
            }
            println!("strategy,subjects,f1de_mean");
            for &s in &cfg.strategies {
                let means: Vec<f64> = results.summarize(s).iter().filter_map(|x| x.mean.map(|m| m[6])).collect();
                let m = means.iter().sum::<f64>() / means.len().max(1) as f64;
                println!("{},{},{m:.4}", s.tag(), means.len());
            }
            for c in &comparisons {
                println!("{} vs {}: p = {:.4} ({})", c.strategy, c.baseline, c.p_value, c.method.name());
            }
            println!("results in {}", dir.display());
        }
        Command::Evaluate { predictions, no_postprocess } => {
            let rows = read_predictions(predictions)?;
            let settings = Settings::from_config(&cfg)?;
            let pred = LabelSequence::new(rows.iter().map(|r| r.pred).collect(), settings.step_sec)?;
            let truth = LabelSequence::new(rows.iter().map(|r| r.truth).collect(), settings.step_sec)?;
            let pred = if *no_postprocess { pred } else { settings.postprocess.apply(&pred)? };
            let report = evaluate(&pred, &truth)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Compare { external, external_name } => {
            let dir = experiment_dir(&cli, &cfg);
            let baseline = load_scores(&dir, cfg.baseline)?;
            let mut comparisons = Vec::new();
            match external {
                Some(ext) => {
                    let settings = Settings::from_config(&cfg)?;
                    let e = external_scores(ext, external_name, &settings)?;
                    let others: Vec<Strategy> = if cli.strategies.is_empty() { vec![cfg.baseline] } else { cfg.strategies.clone() };
                    for s in others {
                        comparisons.push(compare_scores(&e, &load_scores(&dir, s)?)?);
                    }
                    write_comparisons(&dir.join(format!("comparison_{external_name}.csv")), &comparisons)?;
                }
                None => {
                    for &s in cfg.strategies.iter().filter(|&&s| s != cfg.baseline) {
                        comparisons.push(compare_scores(&load_scores(&dir, s)?, &baseline)?);
                    }
                    write_comparisons(&dir.join(crate::harness::COMPARISON_FILE), &comparisons)?;
                }
            }
            println!("strategy,baseline,n_subjects,mean_strategy,mean_baseline,p_value,method,excluded");
            for c in &comparisons {
                println!(
                    "{},{},{},{:.4},{:.4},{:.6},{},{}",
                    c.strategy,
                    c.baseline,
                    c.n_subjects,
                    c.mean_strategy,
                    c.mean_baseline,
                    c.p_value,
                    c.method.name(),
                    c.excluded.join(";")
                );
            }
        }
        Command::Bench => {
            let dir = experiment_dir(&cli, &cfg);
            let settings = Settings::from_config(&cfg)?;
            let datasets = pool.install(|| load_datasets(&cfg.work_dir))?;
            let single = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .map_err(|e| Error::Invalid(e.to_string()))?;
            let rows = single.install(|| bench(&datasets, &cfg.strategies, cfg.baseline, &settings, cfg.bench_repeats))?;
            write_bench(&dir, &rows, &HostInfo::current())?;
            println!("strategy,folds,train_secs,train_rel,model_bytes,memory_rel");
            for r in &rows {
                println!(
                    "{},{},{:.6},{:.3},{:.0},{:.3}",
                    r.strategy.tag(),
                    r.folds,
                    r.train_secs,
                    r.train_rel,
                    r.model_bytes,
                    r.memory_rel
                );
            }
        }
        Command::Report => {
            let dir = experiment_dir(&cli, &cfg);
            let rows = write_report(&dir)?;
            println!("strategy,subjects,failed,f1de_mean");
            for r in &rows {
                println!("{},{},{},{:.4}", r.strategy.tag(), r.subjects, r.failed_subjects, r.f1de_mean);
            }
            println!("wrote {}", Path::new(&dir).join("report.csv").display());
        }
    }
    Ok(())
}
