use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, evaluate, train_forest, ForestConfig, ForestError, MaxFeatures, RunReport};

fn class_indices(y: &[u8]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &v) in y.iter().enumerate() {
        out[usize::from(v == 1)].push(i);
    }
    out
}

/// Shuffles each class and deals it round-robin into `k` folds, continuing the
/// deal from the previous class so fold sizes differ by at most one.
pub fn stratified_kfold(y: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, ForestError> {
    if k < 2 {
        return Err(ForestError::Invalid(format!("k = {k}; need at least 2 folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (class, mut idx) in class_indices(y).into_iter().enumerate() {
        if idx.len() < k {
            return Err(ForestError::ClassTooSmall { class: class as u8, size: idx.len(), need: k });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Stratified split putting `round(fraction * n_c)` of each class in training.
pub fn split_train_test(y: &[u8], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), ForestError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ForestError::Invalid(format!("train fraction {fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (class, mut idx) in class_indices(y).into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(ForestError::ClassTooSmall { class: class as u8, size: idx.len(), need: 2 });
        }
        idx.shuffle(&mut rng);
        let cut = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub n_estimators: Vec<usize>,
    /// `"none"` in config files stands for unlimited depth.
    #[serde(with = "depth_list")]
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
}

impl ParamGrid {
    /// 5 x 6 x 6 x 4 x 3 = 2,160 combinations.
    pub fn full() -> Self {
        ParamGrid {
            n_estimators: vec![120, 300, 500, 800, 1200],
            max_depth: vec![Some(5), Some(8), Some(15), Some(25), Some(30), None],
            min_samples_split: vec![1, 2, 5, 10, 15, 100],
            min_samples_leaf: vec![1, 2, 5, 10],
            max_features: vec![MaxFeatures::Log2, MaxFeatures::Sqrt, MaxFeatures::All],
        }
    }

    /// Eight combinations, small enough for a laptop run.
    pub fn reduced() -> Self {
        ParamGrid {
            n_estimators: vec![60, 120],
            max_depth: vec![Some(8), None],
            min_samples_split: vec![2],
            min_samples_leaf: vec![1, 5],
            max_features: vec![MaxFeatures::Sqrt],
        }
    }

    pub fn single(config: &ForestConfig) -> Self {
        ParamGrid {
            n_estimators: vec![config.n_estimators],
            max_depth: vec![config.max_depth],
            min_samples_split: vec![config.min_samples_split],
            min_samples_leaf: vec![config.min_samples_leaf],
            max_features: vec![config.max_features],
        }
    }

    pub fn len(&self) -> usize {
        self.n_estimators.len()
            * self.max_depth.len()
            * self.min_samples_split.len()
            * self.min_samples_leaf.len()
            * self.max_features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every combination, last field varying fastest.
    pub fn configs(&self, seed: u64) -> Vec<ForestConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &n_estimators in &self.n_estimators {
            for &max_depth in &self.max_depth {
                for &min_samples_split in &self.min_samples_split {
                    for &min_samples_leaf in &self.min_samples_leaf {
                        for &max_features in &self.max_features {
                            out.push(ForestConfig {
                                n_estimators,
                                max_depth,
                                min_samples_split,
                                min_samples_leaf,
                                max_features,
                                seed,
                                bootstrap: true,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

mod depth_list {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Depth {
        Limit(usize),
        Name(String),
    }

    pub fn serialize<S: Serializer>(v: &[Option<usize>], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Depth> = v.iter().map(|d| d.map_or(Depth::Name("none".into()), Depth::Limit)).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<usize>>, D::Error> {
        Vec::<Depth>::deserialize(d)?
            .into_iter()
            .map(|v| match v {
                Depth::Limit(n) => Ok(Some(n)),
                Depth::Name(s) if s == "none" => Ok(None),
                Depth::Name(s) => Err(D::Error::custom(format!("max_depth {s:?}: expected an integer or \"none\""))),
            })
            .collect()
    }
}

/// Score used to rank grid configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScore {
    /// Folds with undefined F1 score 0.
    #[default]
    F1,
    Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub config: ForestConfig,
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
    pub sd_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: ForestConfig,
    pub score: GridScore,
    pub table: Vec<CvRow>,
    pub warnings: Vec<String>,
}

impl GridSearchResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ForestError> {
        let mut out = csv::Writer::from_writer(w);
        let folds = self.table.first().map_or(0, |r| r.fold_scores.len());
        let mut header: Vec<String> =
            ["n_estimators", "max_depth", "min_samples_split", "min_samples_leaf", "max_features"]
                .map(String::from)
                .to_vec();
        header.extend((0..folds).map(|i| format!("fold{i}")));
        header.extend(["mean_score".to_string(), "sd_score".to_string(), "best".to_string()]);
        out.write_record(&header)?;
        for r in &self.table {
            let c = &r.config;
            let mut rec = vec![
                c.n_estimators.to_string(),
                c.max_depth.map_or("none".to_string(), |d| d.to_string()),
                c.min_samples_split.to_string(),
                c.min_samples_leaf.to_string(),
                c.max_features.to_string(),
            ];
            rec.extend(r.fold_scores.iter().map(|s| format!("{s:.6}")));
            rec.push(format!("{:.6}", r.mean_score));
            rec.push(format!("{:.6}", r.sd_score));
            rec.push(u8::from(*c == self.best).to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn select(x: &DMatrix<f64>, y: &[u8], rows: &[usize]) -> (DMatrix<f64>, Vec<u8>) {
    (x.select_rows(rows), rows.iter().map(|&r| y[r]).collect())
}

const SCORE_TIE: f64 = 1e-12;

/// Exhaustive `k`-fold search. Ties on mean score prefer fewer trees, then
/// shallower trees, then grid order.
pub fn grid_search(
    x: &DMatrix<f64>,
    y: &[u8],
    grid: &ParamGrid,
    k: usize,
    seed: u64,
    score: GridScore,
) -> Result<GridSearchResult, ForestError> {
    if grid.is_empty() {
        return Err(ForestError::Invalid("empty parameter grid".into()));
    }
    if x.nrows() != y.len() {
        return Err(ForestError::LengthMismatch(format!("{} rows, {} labels", x.nrows(), y.len())));
    }
    let folds = stratified_kfold(y, k, seed)?;
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("x{j}")).collect();
    let splits: Vec<_> = folds
        .iter()
        .map(|test| {
            let train: Vec<usize> = (0..y.len()).filter(|i| test.binary_search(i).is_err()).collect();
            (select(x, y, &train), select(x, y, test))
        })
        .collect();
    let mut warnings = Vec::new();
    let mut table = Vec::with_capacity(grid.len());
    for mut config in grid.configs(derive_seed(seed, 1)) {
        if let Some(w) = config.normalize() {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        let mut fold_scores = Vec::with_capacity(k);
        for ((xt, yt), (xv, yv)) in &splits {
            let model = train_forest(xt, yt, &config, &names)?;
            let m = evaluate(yv, &model.predict(xv))?;
            fold_scores.push(match score {
                GridScore::F1 => m.f1.unwrap_or(0.0),
                GridScore::Accuracy => m.accuracy,
            });
        }
        let n = fold_scores.len() as f64;
        let mean_score = fold_scores.iter().sum::<f64>() / n;
        let sd_score = (fold_scores.iter().map(|s| (s - mean_score).powi(2)).sum::<f64>() / n).sqrt();
        table.push(CvRow { config, fold_scores, mean_score, sd_score });
    }
    let depth_key = |c: &ForestConfig| c.max_depth.unwrap_or(usize::MAX);
    let mut best = &table[0];
    for r in &table[1..] {
        let better = r.mean_score > best.mean_score + SCORE_TIE
            || ((r.mean_score - best.mean_score).abs() <= SCORE_TIE
                && (r.config.n_estimators, depth_key(&r.config)) < (best.config.n_estimators, depth_key(&best.config)));
        if better {
            best = r;
        }
    }
    let best = best.config;
    Ok(GridSearchResult { best, score, table, warnings })
}

/// `n_runs` cycles of stratified split, training and held-out evaluation.
/// Run `r` uses `derive_seed(seed, r)` for both the split and the forest.
pub fn repeated_runs(
    x: &DMatrix<f64>,
    y: &[u8],
    config: &ForestConfig,
    n_runs: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<RunReport, ForestError> {
    if n_runs == 0 {
        return Err(ForestError::Invalid("n_runs must be at least 1".into()));
    }
    if x.nrows() != y.len() {
        return Err(ForestError::LengthMismatch(format!("{} rows, {} labels", x.nrows(), y.len())));
    }
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("x{j}")).collect();
    let mut runs = Vec::with_capacity(n_runs);
    let mut seeds = Vec::with_capacity(n_runs);
    for r in 0..n_runs {
        let s = derive_seed(seed, r as u64);
        let (train, test) = split_train_test(y, train_fraction, s)?;
        let (xt, yt) = select(x, y, &train);
        let (xv, yv) = select(x, y, &test);
        let mut cfg = ForestConfig { seed: s, ..*config };
        cfg.normalize();
        let model = train_forest(&xt, &yt, &cfg, &names)?;
        runs.push(evaluate(&yv, &model.predict(&xv))?);
        seeds.push(s);
    }
    Ok(RunReport::from_runs(runs, seeds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(pos: usize, neg: usize) -> Vec<u8> {
        let mut y = vec![1; pos];
        y.extend(vec![0; neg]);
        y
    }

    fn assert_partition(folds: &[Vec<usize>], n: usize) {
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_forced_arithmetic() {
        let y = labels(5, 5);
        let folds = stratified_kfold(&y, 5, 1).unwrap();
        assert_partition(&folds, 10);
        for f in &folds {
            assert_eq!(f.iter().filter(|&&i| y[i] == 1).count(), 1);
            assert_eq!(f.len(), 2);
        }
    }

    #[test]
    fn kfold_103_observations() {
        let y = labels(40, 63);
        let folds = stratified_kfold(&y, 5, 7).unwrap();
        assert_partition(&folds, 103);
        for f in &folds {
            assert_eq!(f.iter().filter(|&&i| y[i] == 1).count(), 8);
            assert!(f.len() == 20 || f.len() == 21);
        }
        assert!(matches!(stratified_kfold(&labels(4, 20), 5, 0), Err(ForestError::ClassTooSmall { class: 1, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn kfold_proportions(y in prop::collection::vec(0u8..2, 10..200), k in 2usize..6, seed in 0u64..1000) {
            let pos = y.iter().filter(|&&v| v == 1).count();
            prop_assume!(pos >= k && y.len() - pos >= k);
            let folds = stratified_kfold(&y, k, seed).unwrap();
            let share = pos as f64 / y.len() as f64;
            for f in &folds {
                let p = f.iter().filter(|&&i| y[i] == 1).count() as f64;
                prop_assert!((p - share * f.len() as f64).abs() <= 1.0 + 1e-9);
            }
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn split_forced_arithmetic() {
        let y = labels(50, 50);
        let (train, test) = split_train_test(&y, 0.7, 3).unwrap();
        assert_eq!((train.len(), test.len()), (70, 30));
        assert_eq!(train.iter().filter(|&&i| y[i] == 1).count(), 35);
        assert_eq!(test.iter().filter(|&&i| y[i] == 1).count(), 15);
        let mut all = [train, test].concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(split_train_test(&labels(1, 10), 0.7, 0).is_err());
        assert!(split_train_test(&y, 1.0, 0).is_err());
    }

    #[test]
    fn grid_sizes_and_order() {
        assert_eq!(ParamGrid::full().len(), 2160);
        assert_eq!(ParamGrid::full().configs(0).len(), 2160);
        assert_eq!(ParamGrid::reduced().len(), 8);
        let c = ParamGrid::full().configs(0);
        assert_eq!((c[0].n_estimators, c[0].max_features), (120, MaxFeatures::Log2));
        assert_eq!(c[1].max_features, MaxFeatures::Sqrt);
    }

    #[test]
    fn single_combination_grid() {
        let (x, y) = crate::forest::tests::blobs(60, 2.0, 1);
        let cfg = ForestConfig { n_estimators: 5, min_samples_split: 1, ..ForestConfig::default() };
        let r = grid_search(&x, &y, &ParamGrid::single(&cfg), 3, 0, GridScore::F1).unwrap();
        assert_eq!(r.table.len(), 1);
        assert_eq!((r.best.n_estimators, r.best.min_samples_split), (5, 2));
        assert_eq!(r.warnings.len(), 1);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("n_estimators,max_depth,"));
    }

    #[test]
    fn planted_dominance() {
        // XOR in the first two columns: a stump cannot learn it, a deep tree can.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        use rand::Rng;
        let n = 240;
        let x = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let y: Vec<u8> = (0..n).map(|i| u8::from((x[(i, 0)] > 0.5) != (x[(i, 1)] > 0.5))).collect();
        let grid = ParamGrid {
            n_estimators: vec![15],
            max_depth: vec![Some(1), None],
            min_samples_split: vec![2],
            min_samples_leaf: vec![1],
            max_features: vec![MaxFeatures::All],
        };
        let wins = (0..5)
            .filter(|&s| grid_search(&x, &y, &grid, 5, s, GridScore::F1).unwrap().best.max_depth.is_none())
            .count();
        assert!(wins >= 4, "{wins}");
    }

    #[test]
    fn ties_prefer_fewer_trees() {
        // A wide gap between the classes keeps every bootstrap threshold correct.
        let x = DMatrix::from_fn(20, 1, |i, _| if i >= 10 { 100.0 + i as f64 } else { i as f64 });
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let grid = ParamGrid {
            n_estimators: vec![9, 3],
            max_depth: vec![None, Some(2)],
            min_samples_split: vec![2],
            min_samples_leaf: vec![1],
            max_features: vec![MaxFeatures::All],
        };
        let r = grid_search(&x, &y, &grid, 5, 0, GridScore::Accuracy).unwrap();
        assert!(r.table.iter().all(|row| row.mean_score == 1.0));
        assert_eq!((r.best.n_estimators, r.best.max_depth), (3, Some(2)));
    }

    #[test]
    fn separable_runs_have_zero_spread() {
        let x = DMatrix::from_fn(40, 1, |i, _| if i >= 20 { 100.0 + i as f64 } else { i as f64 });
        let y: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        let cfg = ForestConfig { n_estimators: 10, ..ForestConfig::default() };
        let r = repeated_runs(&x, &y, &cfg, 5, 0.7, 2).unwrap();
        assert_eq!(r.runs.len(), 5);
        assert_eq!(r.stats.len(), 5);
        assert!(r.stats.iter().all(|s| s.sd == Some(0.0) && s.mean == Some(1.0)));
    }
}
