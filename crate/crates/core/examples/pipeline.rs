//! Runs the whole pipeline on a desk-sized synthetic cohort in a temporary
//! directory, with a short sampler and a fixed forest, and prints the report.
//!
//! ```bash
//! cargo run -p depscreen --release --example pipeline
//! ```

use depscreen::forest::ForestConfig;
use depscreen::inference::McmcConfig;
use depscreen::pipeline::{self, Dataset, GridChoice, Pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut config = PipelineConfig { seed: 8, out_dir: dir.path().to_path_buf(), ..PipelineConfig::default() };
    config.synth.spec = "desk".into();
    config.mcmc = McmcConfig { iterations: 5_000, burn_in: 1_000, ..McmcConfig::default() };
    config.forest.grid = GridChoice::Fixed;
    config.forest.fixed = ForestConfig { n_estimators: 60, ..ForestConfig::default() };
    let p = Pipeline::new(config)?;
    println!("config hash {}", p.hash);

    pipeline::synth(&p)?;
    pipeline::aggregate(&p)?;
    for d in [Dataset::All, Dataset::Pre, Dataset::Ratings] {
        let fit = pipeline::fit(&p, d)?;
        println!("{}: log K {:.1} ({})", d.title(), fit.bayes_factor.log_k, fit.bayes_factor.label);
    }
    for d in [Dataset::All, Dataset::Pre] {
        pipeline::classify(&p, d)?;
    }
    pipeline::filters(&p)?;
    pipeline::report(&p)?;
    print!("{}", std::fs::read_to_string(p.out(&["report", "report.txt"]))?);
    Ok(())
}
