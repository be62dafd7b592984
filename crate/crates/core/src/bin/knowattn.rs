use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use knowattn::eval::{
    emit_attention_report, emit_error_report, read_records, Experiment, ExperimentConfig, ModelId,
    PREDICTIONS_FILE,
};
use knowattn::io_util::write_atomic;
use knowattn::{selftest, Error, Result};

/// Knowledge-aware attention networks and SVR ensembles for sentiment
/// regression.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment config (TOML). Relative paths inside resolve against its
    /// directory; KNOWATTN_TRAIN, KNOWATTN_TEST, KNOWATTN_WORD2VEC,
    /// KNOWATTN_GLOVE, KNOWATTN_THESAURUS, KNOWATTN_TRIPLETS and
    /// KNOWATTN_OUTPUT_DIR override paths.
    #[arg(long, env = "KNOWATTN_CONFIG")]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured model and save checkpoints.
    Train {
        #[command(flatten)]
        args: ConfigArgs,
        /// Model id (overrides the config).
        #[arg(long)]
        model: Option<ModelId>,
    },
    /// Score saved checkpoints on the test split.
    Evaluate {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long)]
        model: Option<ModelId>,
    },
    /// Train and evaluate one model id from the grid (L1-L3, S1-S3, E1).
    Reproduce {
        model: ModelId,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Print both attention layers' weights from prediction records.
    ReportAttention {
        /// predictions.jsonl, or a run directory containing it.
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List opposite-polarity predictions on clearly polar instances.
    ReportErrors {
        records: PathBuf,
        /// Minimum |gold| for a row to count.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in gradient, attention, SVR and training checks.
    Selftest,
}

fn load_config(args: &ConfigArgs, model: Option<ModelId>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(m) = model {
        cfg.model = m;
    }
    if let Some(o) = &args.output {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn records_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(PREDICTIONS_FILE)
    } else {
        p.to_path_buf()
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { args, model } => {
            let cfg = load_config(&args, model)?;
            let out = cfg.output_dir.clone();
            let exp = Experiment::prepare(cfg)?;
            let artifacts = exp.train()?;
            exp.save_artifacts(&artifacts, &out)?;
            println!("trained {} for {} seed(s); checkpoints in {}", artifacts.model, artifacts.seeds.len(), out.display());
        }
        Command::Evaluate { args, model } => {
            let cfg = load_config(&args, model)?;
            let out = cfg.output_dir.clone();
            let distmult = Experiment::load_distmult(&cfg, &out)?;
            let exp = Experiment::prepare_with(cfg, distmult)?;
            let artifacts = exp.load_artifacts(&out)?;
            let report = exp.evaluate(&artifacts)?;
            report.write(&out)?;
            print_scores(&report);
        }
        Command::Reproduce { model, args } => {
            let cfg = load_config(&args, Some(model))?;
            let out = cfg.output_dir.clone();
            let exp = Experiment::prepare(cfg)?;
            let artifacts = exp.train()?;
            exp.save_artifacts(&artifacts, &out)?;
            let report = exp.evaluate(&artifacts)?;
            report.write(&out)?;
            print_scores(&report);
        }
        Command::ReportAttention { records, out } => {
            let report = emit_attention_report(&read_records(&records_path(&records))?);
            if let Some(n) = &report.notice {
                eprintln!("notice: {n}");
            }
            emit(&report.to_string(), out.as_deref())?;
        }
        Command::ReportErrors { records, threshold, out } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Error::InvalidArgument(format!("threshold {threshold} outside [0, 1]")));
            }
            let report = emit_error_report(&read_records(&records_path(&records))?, threshold);
            emit(&report.to_string(), out.as_deref())?;
        }
        Command::Selftest => {
            let results = selftest::run_all(&mut |r| println!("{r}"));
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(Error::Diverged(format!("{failed} self-test check(s) failed")));
            }
        }
    }
    Ok(())
}

fn print_scores(report: &knowattn::eval::ExperimentReport) {
    for s in &report.seeds {
        println!("{} seed {}: cosine {:.4}", report.model, s.seed, s.cosine);
    }
    println!("{} mean cosine over {} seed(s): {:.4}", report.model, report.seeds.len(), report.mean_cosine);
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
