use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MaxFeatures;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Training counts of class 0 and class 1.
    Leaf { counts: [u32; 2] },
}

/// Growth limits for one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Root first. Rows with `x[feature] <= threshold` go left.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_row(&self, row: impl Fn(usize) -> f64) -> u8 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if row(*feature) <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => return u8::from(counts[1] > counts[0]),
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<u8> {
        (0..x.nrows()).map(|i| self.predict_row(|j| x[(i, j)])).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// `n - (c0^2 + c1^2) / n`: the node's Gini impurity times its size.
fn weighted_gini(c0: f64, c1: f64) -> f64 {
    let n = c0 + c1;
    if n == 0.0 {
        0.0
    } else {
        n - (c0 * c0 + c1 * c1) / n
    }
}

const TIE_EPS: f64 = 1e-12;

/// Best (feature, threshold) among `features` for the given rows, by weighted
/// Gini; ties keep the lower feature, then the lower threshold.
pub(crate) fn best_split(
    x: &DMatrix<f64>,
    y: &[u8],
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    let total1 = rows.iter().filter(|&&r| y[r] == 1).count() as f64;
    let total0 = n as f64 - total1;
    let mut best: Option<(usize, f64, f64)> = None;
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    for &f in &sorted_features {
        let col = x.column(f);
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (col[r], y[r])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let (mut l0, mut l1) = (0.0, 0.0);
        for i in 1..n {
            if pairs[i - 1].1 == 1 {
                l1 += 1.0;
            } else {
                l0 += 1.0;
            }
            if pairs[i - 1].0 == pairs[i].0 || i < min_leaf || n - i < min_leaf {
                continue;
            }
            let score = weighted_gini(l0, l1) + weighted_gini(total0 - l0, total1 - l1);
            if best.is_none_or(|(_, _, s)| score < s - TIE_EPS) {
                let threshold = pairs[i - 1].0 + (pairs[i].0 - pairs[i - 1].0) / 2.0;
                best = Some((f, threshold, score));
            }
        }
    }
    best
}

pub(crate) fn feature_count(p: usize, mf: MaxFeatures) -> usize {
    match mf {
        MaxFeatures::Log2 => ((p as f64).log2().floor() as usize).max(1),
        MaxFeatures::Sqrt => ((p as f64).sqrt().floor() as usize).max(1),
        MaxFeatures::All => p,
    }
    .min(p)
}

/// Grows a CART tree on `rows` (duplicates allowed, as in a bootstrap sample).
pub fn train_tree<R: Rng>(x: &DMatrix<f64>, y: &[u8], rows: &[usize], params: &TreeParams, rng: &mut R) -> DecisionTree {
    let p = x.ncols();
    let k = feature_count(p, params.max_features);
    let min_split = params.min_samples_split.max(2);
    let min_leaf = params.min_samples_leaf.max(1);
    let mut nodes = Vec::new();
    // Depth-first with an explicit stack of (node slot, rows, depth).
    nodes.push(Node::Leaf { counts: [0, 0] });
    let mut stack = vec![(0usize, rows.to_vec(), 0usize)];
    while let Some((slot, node_rows, depth)) = stack.pop() {
        let c1 = node_rows.iter().filter(|&&r| y[r] == 1).count() as u32;
        let counts = [node_rows.len() as u32 - c1, c1];
        let stop = counts[0] == 0
            || counts[1] == 0
            || node_rows.len() < min_split
            || params.max_depth.is_some_and(|d| depth >= d);
        let split = if stop {
            None
        } else {
            let features: Vec<usize> = if k == p { (0..p).collect() } else { sample(rng, p, k).into_vec() };
            best_split(x, y, &node_rows, &features, min_leaf)
        };
        match split {
            None => nodes[slot] = Node::Leaf { counts },
            Some((feature, threshold, _)) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                    node_rows.iter().partition(|&&r| x[(r, feature)] <= threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { counts: [0, 0] });
                let right = nodes.len();
                nodes.push(Node::Leaf { counts: [0, 0] });
                nodes[slot] = Node::Split { feature, threshold, left, right };
                stack.push((right, right_rows, depth + 1));
                stack.push((left, left_rows, depth + 1));
            }
        }
    }
    DecisionTree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(max_depth: Option<usize>) -> TreeParams {
        TreeParams { max_depth, min_samples_split: 2, min_samples_leaf: 1, max_features: MaxFeatures::All }
    }

    #[test]
    fn separable_single_split() {
        let x = DMatrix::from_column_slice(6, 1, &[1.0, 2.0, 3.0, 10.0, 11.0, 12.0]);
        let y = [0, 0, 0, 1, 1, 1];
        let t = train_tree(&x, &y, &[0, 1, 2, 3, 4, 5], &params(None), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.nodes[0], Node::Split { feature: 0, threshold: 6.5, left: 1, right: 2 });
        assert_eq!(t.predict(&x), y);
    }

    #[test]
    fn pure_input_is_a_leaf() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let t = train_tree(&x, &[1, 1, 1], &[0, 1, 2], &params(None), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes, vec![Node::Leaf { counts: [0, 3] }]);
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = DMatrix::from_row_slice(8, 2, &[0., 0., 0., 1., 1., 0., 1., 1., 0., 0., 0., 1., 1., 0., 1., 1.]);
        let y = [0, 1, 1, 0, 0, 1, 1, 0];
        let rows: Vec<usize> = (0..8).collect();
        let t = train_tree(&x, &y, &rows, &params(Some(2)), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.predict(&x), y);
        assert!(t.depth() <= 2);
    }

    #[test]
    fn min_leaf_respected() {
        let x = DMatrix::from_column_slice(6, 1, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = [1, 0, 0, 0, 0, 0];
        let p = TreeParams { min_samples_leaf: 2, ..params(None) };
        let t = train_tree(&x, &y, &[0, 1, 2, 3, 4, 5], &p, &mut ChaCha8Rng::seed_from_u64(0));
        for n in &t.nodes {
            if let Node::Leaf { counts } = n {
                assert!(counts[0] + counts[1] >= 2);
            }
        }
    }

    #[test]
    fn feature_counts() {
        assert_eq!(feature_count(9, MaxFeatures::Sqrt), 3);
        assert_eq!(feature_count(9, MaxFeatures::Log2), 3);
        assert_eq!(feature_count(4, MaxFeatures::Log2), 2);
        assert_eq!(feature_count(1, MaxFeatures::Log2), 1);
        assert_eq!(feature_count(9, MaxFeatures::All), 9);
    }
}
