//! Random forests: CART trees on bootstrap samples, stratified splitting and
//! cross-validation, grid search and confusion-matrix metrics.

mod cv;
mod metrics;
mod tree;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{
    grid_search, repeated_runs, split_train_test, stratified_kfold, CvRow, GridScore, GridSearchResult, ParamGrid,
};
pub use metrics::{evaluate, BenchmarkConstants, ConfusionMetrics, MetricStat, RunReport, METRIC_NAMES};
pub use tree::{train_tree, DecisionTree, Node, TreeParams};

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("class {class} has {size} members; need at least {need}")]
    ClassTooSmall { class: u8, size: usize, need: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("{0}")]
    Invalid(String),
    #[error("model format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Log2,
    Sqrt,
    All,
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaxFeatures::Log2 => "log2",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::All => "all",
        })
    }
}

impl FromStr for MaxFeatures {
    type Err = ForestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log2" => Ok(MaxFeatures::Log2),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "all" | "none" => Ok(MaxFeatures::All),
            _ => Err(ForestError::Invalid(format!("unknown max_features {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_estimators: usize,
    /// `None` grows until purity or the sample limits stop it.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
    /// Off trains every tree on all rows; used to compare a forest with a single tree.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 1200,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    /// Raises `min_samples_split` of 1 to 2, returning a warning when it did.
    pub fn normalize(&mut self) -> Option<String> {
        (self.min_samples_split < 2).then(|| {
            self.min_samples_split = 2;
            "min_samples_split = 1 treated as 2".to_string()
        })
    }

    pub fn validate(&self) -> Result<(), ForestError> {
        if self.n_estimators == 0 {
            return Err(ForestError::Invalid("n_estimators must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ForestError::Invalid("min_samples_leaf must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(ForestError::Invalid("max_depth must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split.max(2),
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
        }
    }
}

/// Seed for the `i`-th child of `seed`, from its own ChaCha stream.
pub fn derive_seed(seed: u64, i: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng.next_u64()
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    pub trees: Vec<DecisionTree>,
    /// Per tree, a bitset over training rows that the bootstrap left out.
    pub oob: Vec<Vec<u64>>,
    pub n_train: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSummary {
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    pub n_trees: usize,
    pub n_train: usize,
    pub mean_depth: f64,
    pub mean_leaves: f64,
    /// Number of internal nodes splitting on each feature, over all trees.
    pub split_counts: Vec<usize>,
}

fn check_labels(x: &DMatrix<f64>, y: &[u8]) -> Result<(), ForestError> {
    if x.nrows() != y.len() {
        return Err(ForestError::LengthMismatch(format!("{} rows, {} labels", x.nrows(), y.len())));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(ForestError::Invalid(format!("label {bad} is not 0 or 1")));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(ForestError::SingleClass);
    }
    Ok(())
}

/// Trains `n_estimators` trees in parallel. Tree `t` draws its bootstrap
/// sample and feature subsets from stream `t` of `config.seed`.
pub fn train_forest(
    x: &DMatrix<f64>,
    y: &[u8],
    config: &ForestConfig,
    feature_names: &[String],
) -> Result<ForestModel, ForestError> {
    config.validate()?;
    check_labels(x, y)?;
    if feature_names.len() != x.ncols() {
        return Err(ForestError::LengthMismatch(format!("{} columns, {} names", x.ncols(), feature_names.len())));
    }
    let n = x.nrows();
    let params = config.tree_params();
    let grown: Vec<(DecisionTree, Vec<u64>)> = (0..config.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> =
                if config.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            let mut oob = vec![!0u64; n.div_ceil(64)];
            for &r in &rows {
                oob[r / 64] &= !(1 << (r % 64));
            }
            if n % 64 != 0 {
                *oob.last_mut().unwrap() &= (1u64 << (n % 64)) - 1;
            }
            (train_tree(x, y, &rows, &params, &mut rng), oob)
        })
        .collect();
    let (trees, oob) = grown.into_iter().unzip();
    Ok(ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        config: *config,
        feature_names: feature_names.to_vec(),
        trees,
        oob,
        n_train: n,
    })
}

impl ForestModel {
    /// Votes for class 1 per row.
    pub fn votes(&self, x: &DMatrix<f64>) -> Vec<usize> {
        (0..x.nrows())
            .into_par_iter()
            .map(|i| self.trees.iter().filter(|t| t.predict_row(|j| x[(i, j)]) == 1).count())
            .collect()
    }

    /// Majority vote; ties go to class 0.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<u8> {
        let n = self.trees.len();
        self.votes(x).into_iter().map(|v| u8::from(2 * v > n)).collect()
    }

    /// Share of trees voting for class 1.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let n = self.trees.len() as f64;
        self.votes(x).into_iter().map(|v| v as f64 / n).collect()
    }

    pub fn is_oob(&self, tree: usize, row: usize) -> bool {
        self.oob[tree][row / 64] >> (row % 64) & 1 == 1
    }

    /// Out-of-bag predictions on the training matrix; `None` for rows that
    /// every tree saw.
    pub fn oob_predict(&self, x: &DMatrix<f64>) -> Result<Vec<Option<u8>>, ForestError> {
        if x.nrows() != self.n_train {
            return Err(ForestError::LengthMismatch(format!("{} rows, model trained on {}", x.nrows(), self.n_train)));
        }
        Ok((0..x.nrows())
            .map(|i| {
                let (mut ones, mut total) = (0, 0);
                for (t, tree) in self.trees.iter().enumerate() {
                    if self.is_oob(t, i) {
                        total += 1;
                        ones += usize::from(tree.predict_row(|j| x[(i, j)]));
                    }
                }
                (total > 0).then(|| u8::from(2 * ones > total))
            })
            .collect())
    }

    pub fn summary(&self) -> ForestSummary {
        let mut split_counts = vec![0; self.feature_names.len()];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split { feature, .. } = n {
                    split_counts[*feature] += 1;
                }
            }
        }
        let k = self.trees.len() as f64;
        ForestSummary {
            config: self.config,
            feature_names: self.feature_names.clone(),
            n_trees: self.trees.len(),
            n_train: self.n_train,
            mean_depth: self.trees.iter().map(|t| t.depth() as f64).sum::<f64>() / k,
            mean_leaves: self.trees.iter().map(|t| t.leaves() as f64).sum::<f64>() / k,
            split_counts,
        }
    }

    pub fn to_json(&self) -> Result<String, ForestError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ForestError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let h: Header = serde_json::from_str(text)?;
        if h.format_version != MODEL_FORMAT_VERSION {
            return Err(ForestError::Version { found: h.format_version, expected: MODEL_FORMAT_VERSION });
        }
        let model: ForestModel = serde_json::from_str(text)?;
        if model.trees.len() != model.config.n_estimators || model.oob.len() != model.trees.len() {
            return Err(ForestError::Invalid("tree count does not match n_estimators".into()));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    pub(crate) fn blobs(n: usize, shift: f64, seed: u64) -> (DMatrix<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = DMatrix::from_fn(n, 3, |i, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + shift * f64::from(y[i])
        });
        (x, y)
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("f{j}")).collect()
    }

    fn config(n: usize) -> ForestConfig {
        ForestConfig { n_estimators: n, ..ForestConfig::default() }
    }

    #[test]
    fn single_unbagged_tree_matches_train_tree() {
        let (x, y) = blobs(200, 1.0, 1);
        let cfg = ForestConfig { bootstrap: false, max_features: MaxFeatures::All, ..config(1) };
        let m = train_forest(&x, &y, &cfg, &names(3)).unwrap();
        let rows: Vec<usize> = (0..200).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0);
        let t = train_tree(&x, &y, &rows, &cfg.tree_params(), &mut rng);
        assert_eq!(m.predict(&x), t.predict(&x));
        assert!(m.oob[0].iter().all(|&w| w == 0));
    }

    #[test]
    fn separable_holdout_accuracy() {
        let (x, y) = blobs(400, 8.0, 2);
        let (xt, yt) = blobs(200, 8.0, 3);
        let m = train_forest(&x, &y, &config(120), &names(3)).unwrap();
        let acc = m.predict(&xt).iter().zip(&yt).filter(|(a, b)| a == b).count() as f64 / 200.0;
        assert!(acc >= 0.95, "{acc}");
    }

    #[test]
    fn same_seed_same_model() {
        let (x, y) = blobs(150, 0.5, 4);
        let a = train_forest(&x, &y, &config(20), &names(3)).unwrap();
        let b = train_forest(&x, &y, &config(20), &names(3)).unwrap();
        assert_eq!(a, b);
        let c = train_forest(&x, &y, &ForestConfig { seed: 9, ..config(20) }, &names(3)).unwrap();
        assert_ne!(a.trees, c.trees);
    }

    #[test]
    fn vote_ties_go_to_class_zero() {
        let leaf = |c: [u32; 2]| DecisionTree { nodes: vec![Node::Leaf { counts: c }] };
        let m = ForestModel {
            format_version: MODEL_FORMAT_VERSION,
            config: config(2),
            feature_names: names(1),
            trees: vec![leaf([0, 3]), leaf([3, 0])],
            oob: vec![vec![0], vec![0]],
            n_train: 1,
        };
        assert_eq!(m.predict(&DMatrix::zeros(1, 1)), vec![0]);
        // A tied leaf also votes 0.
        assert_eq!(leaf([2, 2]).predict(&DMatrix::zeros(1, 1)), vec![0]);
    }

    #[test]
    fn oob_bitsets_and_roundtrip() {
        let (x, y) = blobs(130, 2.0, 5);
        let m = train_forest(&x, &y, &config(30), &names(3)).unwrap();
        let share: f64 = (0..30).map(|t| (0..130).filter(|&r| m.is_oob(t, r)).count() as f64).sum::<f64>() / (30.0 * 130.0);
        assert!((share - 0.368).abs() < 0.05, "{share}");
        assert_eq!(m.oob[0].len(), 3);
        assert_eq!(m.oob[0][2] >> 2, 0);
        let oob = m.oob_predict(&x).unwrap();
        assert!(oob.iter().filter(|p| p.is_some()).count() > 120);
        let back = ForestModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let s = m.summary();
        assert_eq!(s.n_trees, 30);
        assert!(s.split_counts.iter().sum::<usize>() > 0);
    }

    #[test]
    fn rejects_bad_input() {
        let (x, _) = blobs(10, 0.0, 6);
        assert!(matches!(train_forest(&x, &[1; 10], &config(3), &names(3)), Err(ForestError::SingleClass)));
        assert!(train_forest(&x, &[0, 1], &config(3), &names(3)).is_err());
        assert!(ForestModel::from_json(r#"{"format_version": 7}"#).is_err());
        let mut c = ForestConfig { min_samples_split: 1, ..config(1) };
        assert!(c.normalize().is_some());
        assert_eq!(c.min_samples_split, 2);
    }
}
