use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use depscreen::pipeline::{self, Dataset, Pipeline, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(name = "depscreen", version, about = "Depression screening from photo features")]
struct Cli {
    /// TOML configuration; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitDataset {
    All,
    Pre,
    Ratings,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifyDataset {
    All,
    Pre,
}

#[derive(Subcommand)]
enum Command {
    /// Extract HSV and face features from post images.
    Extract,
    /// Build user-day matrices and the dataset summary.
    Aggregate,
    /// Frequentist and Bayesian logit with diagnostics and Bayes factor.
    Fit {
        #[arg(long, value_enum, default_value = "all")]
        dataset: FitDataset,
    },
    /// Random forest grid search and repeated runs.
    Classify {
        #[arg(long, value_enum, default_value = "all")]
        dataset: ClassifyDataset,
    },
    /// Chi-squared test of filter usage by group.
    Filters,
    /// Generate a synthetic cohort.
    Synth {
        /// Preset (replica, desk, planted, null) or JSON spec path.
        #[arg(long)]
        spec: Option<String>,
    },
    /// Bundle all outputs into one report.
    Report,
}

fn run(cli: Cli) -> Result<String, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Command::Synth { spec: Some(spec) } = &cli.command {
        config.synth.spec = spec.clone();
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PipelineError::Config(format!("threads: {e}")))?;
    }
    let p = Pipeline::new(config)?;
    Ok(match cli.command {
        Command::Extract => {
            let o = pipeline::extract(&p)?;
            format!("extracted {} posts ({} precomputed), {} errors", o.records, o.precomputed, o.errors)
        }
        Command::Aggregate => {
            let o = pipeline::aggregate(&p)?;
            format!(
                "{} all-data user-days, {} pre-diagnosis, {} rated; {} participants excluded",
                o.all.nrows(),
                o.pre.nrows(),
                o.ratings.as_ref().map_or(0, |m| m.nrows()),
                o.summary.excluded.len()
            )
        }
        Command::Fit { dataset } => {
            let d = match dataset {
                FitDataset::All => Dataset::All,
                FitDataset::Pre => Dataset::Pre,
                FitDataset::Ratings => Dataset::Ratings,
            };
            let r = pipeline::fit(&p, d)?;
            format!("{} model: log K = {:.2} ({}), PPC p = {:.3}", d.title(), r.bayes_factor.log_k, r.bayes_factor.label, r.ppc.p_value)
        }
        Command::Classify { dataset } => {
            let d = if matches!(dataset, ClassifyDataset::All) { Dataset::All } else { Dataset::Pre };
            let r = pipeline::classify(&p, d)?;
            let f1 = r.runs.stat("f1").and_then(|s| s.mean);
            format!("{} classifier: mean F1 {}", d.title(), f1.map_or("undefined".into(), |v| format!("{v:.3}")))
        }
        Command::Filters => {
            let r = pipeline::filters(&p)?;
            format!("filters: chi2 all = {:.2} (p = {:.2e}), pre = {:.2}", r.all.test.statistic, r.all.test.p_value, r.pre.test.statistic)
        }
        Command::Synth { .. } => {
            let spec = pipeline::synth(&p)?;
            format!("synthesized cohort {:?} into {}", spec.name, p.config.cohort_dir().display())
        }
        Command::Report => {
            let b = pipeline::report(&p)?;
            format!("report: {} of 8 sections{}", b.present().len(), if b.missing.is_empty() { String::new() } else { format!(", missing {}", b.missing.join(", ")) })
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
