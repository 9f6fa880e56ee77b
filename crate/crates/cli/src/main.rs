//! Command-line surface: synthetic data generation, candidate augmentation,
//! cross-validated experiments, sensitivity sweeps, and theorem checks.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 data error,
//! 3 runtime failure (including failed theorem checks). Diagnostics go to
//! stderr; results go to files and stdout.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use afsmote_core::pipeline::{
    augment_once, emit_report, load_source, run_pipeline, run_sweep, theorem_check, DataSource,
    ExperimentConfig, ReportFormat, RunResult,
};
use afsmote_core::{Error as CoreError, ARTIFACT_VERSION};

use config::{load, ConfigError, ResolvedConfig};

#[derive(Parser)]
#[command(name = "afsmote", version, about = "Oversampling with adversarial filtering: generate, filter, train, calibrate, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Sectioned TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; results land in `<out>/<config-hash>/`.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dotted-key override, e.g. `--set filter.lambda=0.25`; repeatable,
    /// applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Seed override (highest priority; then [run].seed, then AFSMOTE_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-Gaussian dataset and write it as CSV.
    GenSynth {
        #[command(flatten)]
        common: Common,
    },
    /// Generate, score, and filter synthetic candidates on the first fold.
    Augment {
        #[command(flatten)]
        common: Common,
        /// Write candidates.csv (points with parent and gap provenance).
        #[arg(long)]
        emit_candidates: bool,
        /// Write scores.csv (per-candidate head scores and retention).
        #[arg(long)]
        emit_scores: bool,
    },
    /// Run the full cross-validated experiment and write report.json.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run the sensitivity sweep grid and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Maximum concurrent cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Empirically check the surrogate-improvement and Brier-bound
    /// properties on synthetic replications; exits 0 iff all checks pass.
    TheoremCheck {
        #[command(flatten)]
        common: Common,
        /// Number of replication seeds.
        #[arg(long)]
        seeds: Option<usize>,
        /// Brier bound constant on the discriminator false-positive rate.
        #[arg(long)]
        c1: Option<f64>,
        /// Brier bound constant on the smoothness diagnostic.
        #[arg(long)]
        c2: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

enum CliError {
    Config(ConfigError),
    Core(CoreError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Core(e) => {
                if e.is_data_error() {
                    2
                } else {
                    3
                }
            }
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::GenSynth { common } => {
            let (resolved, dir) = prepare(&common, "gen-synth")?;
            let DataSource::Synthetic(spec) = &resolved.experiment.source else {
                return Err(ConfigError("gen-synth requires a synthetic source".into()).into());
            };
            let data = afsmote_core::dataset::make_gaussian_imbalanced::<f64>(spec)?;
            let path = dir.join("dataset.csv");
            data.save_csv(&path, "label")?;
            eprintln!("wrote {} rows", data.n());
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Augment {
            common,
            emit_candidates,
            emit_scores,
        } => {
            let (resolved, dir) = prepare(&common, "augment")?;
            let outcome = augment_once(&resolved.experiment)?;
            let artifacts = outcome.artifacts.as_ref().expect("augment keeps artifacts");
            if emit_candidates {
                let path = dir.join("candidates.csv");
                artifacts.candidates.write_csv(&path)?;
                println!("{}", path.display());
            }
            if emit_scores {
                if let Some(scores) = &artifacts.scores {
                    let path = dir.join("scores.csv");
                    scores.write_csv(&path)?;
                    println!("{}", path.display());
                } else {
                    eprintln!("filtering disabled: no scores to emit");
                }
            }
            let augmented = dir.join("augmented.csv");
            write_augmented(&augmented, artifacts)?;
            println!("{}", augmented.display());
            eprintln!(
                "generated {} candidates, retained {}",
                outcome.generated, outcome.retained
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { common } => {
            let (resolved, dir) = prepare(&common, "run")?;
            let result = run_pipeline(&resolved.experiment)?;
            let report = dir.join("report.json");
            emit_report(&result, ReportFormat::Json, &report)?;
            let reliability = dir.join("reliability.csv");
            write_reliability(&reliability, &result)?;
            println!("{}", report.display());
            println!("{}", reliability.display());
            for f in &result.folds {
                eprintln!(
                    "fold {}: recall {:.4} precision {:.4} ap {:.4} (feasible: {})",
                    f.fold,
                    f.report.recall,
                    f.report.precision,
                    f.report.average_precision,
                    f.report.feasible
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { common, jobs } => {
            let (resolved, dir) = prepare(&common, "sweep")?;
            let sweep = run_sweep(&resolved.experiment, &resolved.grid, jobs)?;
            let path = dir.join("sweep.csv");
            sweep.save_csv(&path)?;
            let failures = sweep
                .cells
                .iter()
                .filter(|c| c.outcome.is_err())
                .count();
            eprintln!("{} cells, {} failed", sweep.cells.len(), failures);
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::TheoremCheck {
            common,
            seeds,
            c1,
            c2,
        } => {
            let (resolved, dir) = prepare(&common, "theorem-check")?;
            let DataSource::Synthetic(spec) = resolved.experiment.source.clone() else {
                return Err(
                    ConfigError("theorem-check requires a synthetic source".into()).into(),
                );
            };
            let n_seeds = seeds.unwrap_or(resolved.theorem_seeds);
            let c1 = c1.unwrap_or(resolved.c1);
            let c2 = c2.unwrap_or(resolved.c2);
            let report = theorem_check(&spec, &resolved.experiment, n_seeds, c1, c2)?;
            let path = dir.join("theorem.json");
            std::fs::write(
                &path,
                serde_json::to_string_pretty(&report.to_json()).expect("report serializes") + "\n",
            )
            .map_err(CoreError::from)?;
            for s in &report.per_seed {
                println!(
                    "seed {}: delta_f_tilde {:+.6} delta_brier {:+.6} (bound {:.6}) recall {:.3} vs smote {:.3} -> {}",
                    s.seed_index,
                    s.delta_f_tilde.first().map(|&(_, d)| d).unwrap_or(0.0),
                    s.delta_brier,
                    s.bound_rhs,
                    s.recall_filtered,
                    s.recall_smote,
                    if s.f_check_pass && s.brier_bound_pass && s.brier_abs_pass && s.recall_check_pass {
                        "pass"
                    } else {
                        "FAIL"
                    }
                );
            }
            println!("{}", path.display());
            if report.all_pass() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("theorem checks failed");
                Ok(ExitCode::from(3))
            }
        }
    }
}

/// Resolves configuration, creates the hash-named output directory, and
/// writes the provenance block.
fn prepare(common: &Common, command: &str) -> Result<(ResolvedConfig, PathBuf), CliError> {
    let resolved = load(common.config.as_deref(), &common.sets, common.seed)?;
    let dir = common.out.join(resolved.experiment.hash());
    std::fs::create_dir_all(&dir).map_err(CoreError::from)?;
    let provenance = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": command,
        "config": resolved.experiment.to_json(),
        "config_hash": resolved.experiment.hash(),
        "overrides": resolved.overrides,
        "seed": resolved.experiment.seed,
    });
    std::fs::write(
        dir.join("provenance.json"),
        serde_json::to_string_pretty(&provenance).expect("provenance serializes") + "\n",
    )
    .map_err(CoreError::from)?;
    Ok((resolved, dir))
}

fn write_augmented(
    path: &Path,
    artifacts: &afsmote_core::pipeline::FoldArtifacts,
) -> Result<(), CliError> {
    use std::io::Write;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(CoreError::from)?);
    let d = artifacts.augmented_features.n_cols();
    let header: Vec<String> = (0..d)
        .map(|j| format!("f{j}"))
        .chain(["label".into()])
        .collect();
    writeln!(file, "{}", header.join(",")).map_err(CoreError::from)?;
    for (row, &y) in artifacts
        .augmented_features
        .iter_rows()
        .zip(&artifacts.augmented_labels)
    {
        let mut cells: Vec<String> = row
            .iter()
            .map(|v| afsmote_core::dataset::format_real(*v))
            .collect();
        cells.push(y.to_string());
        writeln!(file, "{}", cells.join(",")).map_err(CoreError::from)?;
    }
    Ok(())
}

fn write_reliability(path: &Path, result: &RunResult) -> Result<(), CliError> {
    use std::io::Write;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(CoreError::from)?);
    writeln!(file, "fold,bin_lo,bin_hi,mean_pred,frac_pos,count").map_err(CoreError::from)?;
    for f in &result.folds {
        for b in &f.reliability.bins {
            writeln!(
                file,
                "{},{},{},{},{},{}",
                f.fold,
                b.lo,
                b.hi,
                b.mean_pred.map_or(String::new(), |v| v.to_string()),
                b.frac_pos.map_or(String::new(), |v| v.to_string()),
                b.count
            )
            .map_err(CoreError::from)?;
        }
    }
    Ok(())
}
