//! Stratified k-fold grid search over the reduced grid, then repeated
//! train/test runs of the winning configuration.
//!
//! ```bash
//! cargo run -p depscreen --release --example grid_search
//! ```

use depscreen::forest::{grid_search, repeated_runs, stratified_kfold, GridScore, ParamGrid};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
    // XOR of the first two features; depth matters here.
    let x = DMatrix::from_fn(n, 3, |i, j| {
        let noise: f64 = rng.sample(StandardNormal);
        let signal = match j {
            0 => if i % 4 < 2 { 2.0 } else { -2.0 },
            1 => if (i % 4 < 2) == (y[i] == 1) { 2.0 } else { -2.0 },
            _ => 0.0,
        };
        signal + 0.8 * noise
    });

    let folds = stratified_kfold(&y, 5, 3)?;
    println!("fold sizes {:?}", folds.iter().map(Vec::len).collect::<Vec<_>>());

    let grid = ParamGrid::reduced();
    let result = grid_search(&x, &y, &grid, 5, 3, GridScore::F1)?;
    for row in &result.table {
        let c = &row.config;
        println!(
            "trees {:>3} depth {:>4} leaf {}  F1 {:.3} +/- {:.3}",
            c.n_estimators,
            c.max_depth.map_or("none".into(), |d| d.to_string()),
            c.min_samples_leaf,
            row.mean_score,
            row.sd_score
        );
    }
    println!("best: {:?}", result.best);

    let runs = repeated_runs(&x, &y, &result.best, 5, 0.7, 3)?;
    for name in ["recall", "specificity", "precision", "f1"] {
        let s = runs.stat(name).expect("known metric");
        println!("{name:<12} {:.3} (sd {:.3})", s.mean.unwrap_or(f64::NAN), s.sd.unwrap_or(f64::NAN));
    }
    Ok(())
}
