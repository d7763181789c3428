//! Generates a desk-sized synthetic cohort, applies the admission rules and
//! collapses posts into user-days, then splits off the pre-diagnosis days.
//!
//! ```bash
//! cargo run -p depscreen --example cohort_aggregation
//! ```

use std::collections::BTreeMap;

use depscreen::cohort::synth::{generate_cohort, CohortSpec};
use depscreen::cohort::{
    admit_participant, aggregate_user_days, split_pre_diagnosis, summary_stats, user_day_counts, Admission,
    FeatureMatrix, FeatureSet,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = generate_cohort(&CohortSpec::desk(), 42)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for post in &cohort.posts {
        *counts.entry(post.participant_id.as_str()).or_default() += 1;
    }
    let admitted: Vec<_> = cohort
        .participants
        .iter()
        .filter(|p| admit_participant(p, counts.get(p.id.as_str()).copied().unwrap_or(0)) == Admission::Admitted)
        .cloned()
        .collect();
    println!("{} of {} participants admitted", admitted.len(), cohort.participants.len());

    let summary = summary_stats(&admitted, &cohort.posts);
    println!("{}", serde_json::to_string_pretty(&summary)?);

    let agg = aggregate_user_days(&cohort.posts, &admitted, None);
    let pre = split_pre_diagnosis(&agg.user_days, &admitted);
    println!("all-data: {:?}", user_day_counts(&agg.user_days));
    println!("pre-diagnosis: {:?}", user_day_counts(&pre));

    let m = FeatureMatrix::from_user_days(&agg.user_days, FeatureSet::Computational);
    let z = m.standardize()?;
    println!("{} x {} matrix; first standardized row:", z.nrows(), z.ncols());
    for (name, v) in z.names.iter().zip(z.row(0)) {
        println!("  {name:<16} {v:>7.3}");
    }
    Ok(())
}
