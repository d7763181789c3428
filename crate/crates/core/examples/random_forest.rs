//! Trains a forest on two Gaussian blobs, scores it on a held-out split and
//! round-trips the model through JSON.
//!
//! ```bash
//! cargo run -p depscreen --release --example random_forest
//! ```

use depscreen::forest::{evaluate, split_train_test, train_forest, ForestConfig, ForestModel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 600;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
    let x = DMatrix::from_fn(n, 4, |i, j| {
        let z: f64 = rng.sample(StandardNormal);
        if j < 2 { z + 1.2 * f64::from(y[i]) } else { z }
    });
    let names: Vec<String> = ["hue", "brightness", "noise_a", "noise_b"].map(String::from).to_vec();

    let (train, test) = split_train_test(&y, 0.7, 1)?;
    let pick = |rows: &[usize]| (x.select_rows(rows), rows.iter().map(|&r| y[r]).collect::<Vec<_>>());
    let (x_train, y_train) = pick(&train);
    let (x_test, y_test) = pick(&test);

    let config = ForestConfig { n_estimators: 200, seed: 9, ..ForestConfig::default() };
    let model = train_forest(&x_train, &y_train, &config, &names)?;
    let metrics = evaluate(&y_test, &model.predict(&x_test))?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    let oob = model.oob_predict(&x_train)?;
    let scored: Vec<u8> = oob.iter().zip(&y_train).filter_map(|(p, t)| p.map(|p| u8::from(p == *t))).collect();
    println!("OOB accuracy {:.3} over {} rows", scored.iter().map(|&c| f64::from(c)).sum::<f64>() / scored.len() as f64, scored.len());

    let summary = model.summary();
    println!("mean depth {:.1}, mean leaves {:.1}, splits per feature {:?}", summary.mean_depth, summary.mean_leaves, summary.split_counts);
    let restored = ForestModel::from_json(&model.to_json()?)?;
    assert_eq!(restored.predict(&x_test), model.predict(&x_test));
    Ok(())
}
