//! Laplace-approximated Bayes factors of a model with colour features against
//! the intercept-only model, for a cohort with planted effects and one without.
//!
//! ```bash
//! cargo run -p depscreen --example bayes_factor
//! ```

use depscreen::cohort::synth::{generate_cohort, CohortSpec};
use depscreen::cohort::{aggregate_user_days, FeatureMatrix, FeatureSet};
use depscreen::inference::{bayes_factor, log_marginal_laplace, LogitData, LogitSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for spec in [CohortSpec::planted(), CohortSpec::null()] {
        let cohort = generate_cohort(&spec, 3)?;
        let days = aggregate_user_days(&cohort.posts, &cohort.participants, None).user_days;
        let m = FeatureMatrix::from_user_days(&days, FeatureSet::Computational).standardize()?;
        let data = LogitData::from_matrix(&m);
        let full = log_marginal_laplace(&data, &LogitSpec::default_for(data.dim()))?;
        let null = log_marginal_laplace(&data.intercept_only(), &LogitSpec::default_for(1))?;
        let bf = bayes_factor(full, null);
        println!("{:<8} n = {:>5}  log K = {:>9.2}  {}", spec.name, data.nobs(), bf.log_k, bf.label);
    }
    Ok(())
}
