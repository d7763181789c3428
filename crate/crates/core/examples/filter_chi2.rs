//! Chi-squared test of filter usage by group on a synthetic cohort, with the
//! observed-minus-expected bars per filter.
//!
//! ```bash
//! cargo run -p depscreen --example filter_chi2
//! ```

use depscreen::cohort::synth::{generate_cohort, CohortSpec};
use depscreen::cohort::NO_FILTER;
use depscreen::stats::{chi2_independence, chi2_upper_tail, ContingencyTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = generate_cohort(&CohortSpec::replica(), 1)?;
    let filtered: Vec<_> = cohort.posts.iter().filter(|p| p.filter_name != NO_FILTER).cloned().collect();
    for (label, posts) in [("all posts", &cohort.posts), ("filtered only", &filtered)] {
        let table = ContingencyTable::filter_usage(posts, &cohort.participants)?;
        let r = chi2_independence(&table);
        println!("{label}: chi2 = {:.2}, df = {}, p = {:.3e} (ln p = {:.1})", r.statistic, r.df, r.p_value, r.ln_p_value);
        for (row, name) in table.row_labels.iter().enumerate() {
            println!("  {name:<10} depressed {:>+8.1}  healthy {:>+8.1}", r.differences[row][0], r.differences[row][1]);
        }
    }
    println!("Q(3.841, 1) = {:.4}", chi2_upper_tail(3.841, 1.0));
    Ok(())
}
