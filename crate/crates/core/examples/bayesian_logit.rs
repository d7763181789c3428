//! Fits a logistic regression both ways on simulated data: maximum likelihood
//! by IRLS and a two-chain Metropolis sampler, then prints the posterior
//! summary with its convergence diagnostics.
//!
//! ```bash
//! cargo run -p depscreen --release --example bayesian_logit
//! ```

use depscreen::inference::{fit_logit_mle, run_metropolis, summarize_posterior, LogitData, LogitSpec, McmcConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let beta = [-0.5, 1.0, -0.7];
    let n = 3_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = DMatrix::from_fn(n, 3, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = (0..3).map(|j| x[(i, j)] * beta[j]).sum();
            f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()))
        })
        .collect();
    let data = LogitData::new(x, y, vec!["intercept".into(), "hue".into(), "brightness".into()])?;

    let mle = fit_logit_mle(&data)?;
    let chains = run_metropolis(&data, &LogitSpec::default_for(3), &McmcConfig::desk(1))?;
    let post = summarize_posterior(&chains)?;
    println!("acceptance rates {:?}", post.acceptance_rates);
    println!("{:<11} {:>7} {:>7} {:>7} {:>8} {:>7}  95% HPD", "param", "true", "MLE", "mean", "mcse", "R-hat");
    for ((p, coef), truth) in post.params.iter().zip(&mle.coef).zip(beta) {
        let hpd = p.hpd.iter().find(|b| b.level == 0.95).expect("95% band");
        println!(
            "{:<11} {truth:>7.3} {coef:>7.3} {:>7.3} {:>8.5} {:>7.4}  [{:.3}, {:.3}]",
            p.name,
            p.mean,
            p.mcse,
            p.rhat.unwrap_or(f64::NAN),
            hpd.lo,
            hpd.hi
        );
    }
    Ok(())
}
