//! Simulates crowd ratings with a known between-rater correlation and
//! recovers it with the split-pair agreement procedure.
//!
//! ```bash
//! cargo run -p depscreen --example interrater
//! ```

use depscreen::cohort::aggregate_ratings;
use depscreen::cohort::synth::{latent_ratings, RatingSpec};
use depscreen::stats::interrater_agreement;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let photos: Vec<(String, [f64; 4])> = (0..2_000).map(|i| (format!("photo{i}"), [2.5, 1.0, 2.5, 2.4])).collect();
    for rho in [0.0, 0.2, 0.4, 0.6] {
        let spec = RatingSpec { rho: [rho; 4], sd: [0.6; 4], ..RatingSpec::default() };
        let ratings = latent_ratings(&photos, &spec, &mut ChaCha8Rng::seed_from_u64(2));
        let report = interrater_agreement(&ratings, 5, 2)?;
        let rs: Vec<String> = report.categories.iter().map(|c| format!("{} {:.3}", c.category, c.r)).collect();
        println!("rho {rho:.1}: {}", rs.join(", "));
    }

    let ratings = latent_ratings(&photos[..3], &RatingSpec::default(), &mut ChaCha8Rng::seed_from_u64(3));
    println!("{:#?}", aggregate_ratings(&ratings));
    Ok(())
}
