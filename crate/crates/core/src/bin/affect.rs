//! Batch front end for the pipeline.
//!
//! ```text
//! affect synth    --config run.toml [--seed N] [--out DIR]
//! affect features --config run.toml [--seed N] [--out DIR]
//! affect evaluate --config run.toml [--seed N] [--out DIR]
//! affect report   <report.json>
//! ```
//!
//! Exit codes: 0 success, 2 config validation, 3 missing input,
//! 4 numerical failure, 1 anything else. `AFFECT_THREADS` caps the worker
//! pool.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use affect_core::config::RunConfig;
use affect_core::dataset::io::save_dataset;
use affect_core::error::{Error, ErrorCategory, Result};
use affect_core::eval::{
    make_folds, read_report_file, render_accuracy_table, run_experiment_with_features,
    write_report_files,
};
use affect_core::features::{read_feature_table, write_feature_table, FeatureMatrix};
use affect_core::preprocess::WindowSpec;

#[derive(Parser)]
#[command(name = "affect", about = "EEG valence/arousal classification pipeline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured synthetic dataset and write it to disk.
    Synth(RunArgs),
    /// Compute feature tables for every (window length, axis value).
    Features(RunArgs),
    /// Run the cross-validated experiment grid and write report files.
    Evaluate(RunArgs),
    /// Print the headline numbers of an existing report.json.
    Report {
        /// Path to a report.json written by `evaluate`.
        path: PathBuf,
    },
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_synth(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let pairs = affect_core::dataset::synthetic::generate_synthetic(
        &cfg.dataset.synthetic,
        cfg.seed,
    )?;
    let dir = cfg.out_dir.join("dataset");
    let manifest = save_dataset(&dir, &pairs)?;
    println!(
        "wrote {} recordings ({} participants) to {}",
        pairs.len(),
        cfg.dataset.synthetic.participants,
        manifest.display()
    );
    Ok(())
}

/// Expected cache file for one (window, mode) pair.
fn feature_file(dir: &Path, window_ms: u32, axis_value: &str) -> PathBuf {
    dir.join(format!("features_{window_ms}ms_{axis_value}.csv"))
}

fn window_ms(seconds: f64) -> u32 {
    (seconds * 1000.0).round() as u32
}

/// Load every feature table from the cache directory, or recompute and
/// write them all. Returns matrices keyed by (window_ms, mode index).
fn features_for(cfg: &RunConfig) -> Result<BTreeMap<(u32, usize), FeatureMatrix>> {
    let exp = cfg.to_experiment_config()?;
    let modes = exp.axis.modes();
    let cache_dir = cfg
        .out_dir
        .join("features")
        .join(&cfg.feature_cache_key()[..16]);

    let mut wanted: Vec<((u32, usize), PathBuf)> = Vec::new();
    for &seconds in &exp.window_lengths_s {
        for (mi, mode) in modes.iter().enumerate() {
            wanted.push((
                (window_ms(seconds), mi),
                feature_file(&cache_dir, window_ms(seconds), &mode.to_string()),
            ));
        }
    }

    if wanted.iter().all(|(_, path)| path.is_file()) {
        log::info!("reusing cached feature tables in {}", cache_dir.display());
        let mut out = BTreeMap::new();
        for (key, path) in wanted {
            out.insert(key, read_feature_table(&path)?);
        }
        return Ok(out);
    }

    let pairs = cfg.load_dataset()?;
    std::fs::create_dir_all(&cache_dir).map_err(|e| Error::io(&cache_dir, e))?;
    let mut out = BTreeMap::new();
    for &seconds in &exp.window_lengths_s {
        let spec = WindowSpec::new(seconds, exp.overlap_fraction)?;
        let mats = affect_core::eval::compute_axis_features(
            &pairs,
            &exp.channels,
            exp.reference,
            &spec,
            &modes,
        )?;
        for (mi, fm) in mats.into_iter().enumerate() {
            let path = feature_file(&cache_dir, window_ms(seconds), &modes[mi].to_string());
            write_feature_table(&path, &fm)?;
            out.insert((window_ms(seconds), mi), fm);
        }
    }
    Ok(out)
}

fn cmd_features(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let features = features_for(&cfg)?;
    let cache_dir = cfg
        .out_dir
        .join("features")
        .join(&cfg.feature_cache_key()[..16]);
    for ((wms, mi), fm) in &features {
        let mode = cfg.axis().modes()[*mi].to_string();
        println!(
            "{}: {} rows x {} feature columns",
            feature_file(&cache_dir, *wms, &mode).display(),
            fm.values.rows(),
            fm.values.cols()
        );
    }
    Ok(())
}

fn cmd_evaluate(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let exp = cfg.to_experiment_config()?;
    let features = features_for(&cfg)?;

    let participants: Vec<u32> = features
        .values()
        .next()
        .map(|fm| fm.rows.iter().map(|r| r.participant_id).collect())
        .unwrap_or_default();
    let plan = make_folds(&participants, exp.folds, exp.seed)?;
    let report = run_experiment_with_features(&features, &plan, &exp)?;

    let hash = cfg.hash();
    let written = write_report_files(&cfg.out_dir, &report, &exp, &hash)?;
    for &seconds in &exp.window_lengths_s {
        println!("{}", render_accuracy_table(&report, &exp, window_ms(seconds), &hash)?);
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_report(path: &Path) -> Result<()> {
    let file = read_report_file(path)?;
    println!("# config_hash: {} seed: {}", file.config_hash, file.seed);
    for (dim, prior) in &file.class_priors {
        println!("# class prior ({dim}): {:.3} high", prior);
    }
    println!("window_ms,axis_value,dimension,classifier,mean_accuracy_pct,mean_sensitivity_pct,mean_specificity_pct");
    let fmt_opt = |v: Option<f64>| match v {
        Some(x) => format!("{:.2}", x * 100.0),
        None => "n/a".to_string(),
    };
    for cell in &file.cells {
        println!(
            "{},{},{},{},{:.2},{},{}",
            cell.key.window_ms,
            cell.key.axis_value,
            cell.key.dimension,
            cell.key.classifier,
            cell.mean_accuracy * 100.0,
            fmt_opt(cell.mean_sensitivity),
            fmt_opt(cell.mean_specificity),
        );
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Features(args) => cmd_features(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Report { path } => cmd_report(path),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    if let Ok(threads) = std::env::var("AFFECT_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not apply AFFECT_THREADS={threads}: {e}");
                }
            }
            _ => log::warn!("ignoring invalid AFFECT_THREADS={threads}"),
        }
    }

    if let Err(err) = run() {
        eprintln!("error: {err}");
        let mut source = std::error::Error::source(&err);
        while let Some(cause) = source {
            eprintln!("  caused by: {cause}");
            source = cause.source();
        }
        let code = match err.category() {
            ErrorCategory::Validation => 2,
            ErrorCategory::MissingInput => 3,
            ErrorCategory::Numerical => 4,
            ErrorCategory::Io => 1,
        };
        std::process::exit(code);
    }
}
