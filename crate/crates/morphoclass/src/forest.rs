//! Random forest classifier: bagged CART trees with per-node random feature
//! subsets and majority vote.
//!
//! Everything is deterministic given (training data, params). Each tree owns
//! an RNG stream derived from the master seed and its tree index, so trees
//! can be grown in parallel and still reproduce the serial result bit for
//! bit. Split thresholds are midpoints between consecutive distinct sorted
//! values; ties between candidate splits break toward the lower feature
//! index, then the lower threshold — there is no implementation-defined
//! prediction drift anywhere.

use crate::error::{Error, Result};
use crate::ingest::Group;
use crate::seeds::derive_indexed_seed;
use ndarray::ArrayView2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// How many features to consider at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// floor(sqrt(p)), the usual classification default.
    #[default]
    Sqrt,
    /// All features (turns off feature randomness).
    All,
    /// A fixed count, clamped to [1, p].
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((p as f64).sqrt().floor() as usize).clamp(1, p),
            MaxFeatures::All => p,
            MaxFeatures::Count(m) => m.clamp(1, p),
        }
    }
}

/// Forest hyperparameters. There is deliberately no default seed: every
/// training run names its seed explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    /// The conventional defaults: 100 trees, sqrt(p) features per split,
    /// unlimited depth, bootstrap sampling.
    pub fn with_seed(seed: u64) -> ForestParams {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            bootstrap: true,
            seed,
        }
    }
}

/// A CART node. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Training sample counts per class, in [`Group::LABEL_ORDER`].
        counts: [usize; 2],
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

/// Trained ensemble. Serializes to versioned JSON and round-trips exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub schema_version: u32,
    pub params: ForestParams,
    /// Class label order for counts and vote fractions.
    pub label_order: [Group; 2],
    /// Training class counts, used to break prediction ties toward the
    /// larger training prior.
    pub class_priors: [usize; 2],
    pub n_features: usize,
    pub trees: Vec<TreeNode>,
    /// Mean impurity-decrease importance per feature, normalized to sum 1
    /// (all zeros when no split was ever made).
    pub importances: Vec<f64>,
}

/// Gini impurity of a class-count vector: 1 - sum((count/total)^2).
pub fn gini(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::ZeroCounts);
    }
    Ok(gini_unchecked(counts, total))
}

#[inline]
fn gini_unchecked(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let f = c as f64 / t;
            f * f
        })
        .sum::<f64>()
}

/// A candidate split and its quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted child Gini: (nL*gini_L + nR*gini_R) / n.
    pub child_impurity: f64,
}

/// Find the best split over the candidate features, or `None` when no
/// threshold reduces impurity (or every split would starve a leaf).
///
/// `rows` indexes into `x`/`y`; `candidates` must be sorted ascending so the
/// tie rule (lower feature index, then lower threshold) is well-defined.
pub fn best_split(
    x: ArrayView2<f64>,
    y: &[usize],
    rows: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    let counts = class_counts(y, rows);
    let parent_impurity = gini_unchecked(&counts, n);
    if parent_impurity == 0.0 {
        return None;
    }

    let mut best: Option<Split> = None;
    let mut order: Vec<usize> = rows.to_vec();
    for &feature in candidates {
        // sort rows by this feature; ties in value are irrelevant because
        // thresholds sit strictly between distinct values
        order.sort_by(|&a, &b| {
            x[[a, feature]]
                .partial_cmp(&x[[b, feature]])
                .expect("finite feature values")
        });
        let mut left = [0usize; 2];
        let mut right = counts;
        for k in 0..n - 1 {
            let class = y[order[k]];
            left[class] += 1;
            right[class] -= 1;
            let v = x[[order[k], feature]];
            let next = x[[order[k + 1], feature]];
            if v == next {
                continue; // not a boundary between distinct values
            }
            let n_left = k + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let threshold = v + (next - v) / 2.0;
            let child_impurity = (n_left as f64 * gini_unchecked(&left, n_left)
                + n_right as f64 * gini_unchecked(&right, n_right))
                / n as f64;
            let candidate = Split {
                feature,
                threshold,
                child_impurity,
            };
            let better = match &best {
                None => child_impurity < parent_impurity,
                Some(b) => {
                    child_impurity < b.child_impurity
                        || (child_impurity == b.child_impurity
                            && (feature, threshold) < (b.feature, b.threshold))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    best
}

fn class_counts(y: &[usize], rows: &[usize]) -> [usize; 2] {
    let mut counts = [0usize; 2];
    for &r in rows {
        counts[y[r]] += 1;
    }
    counts
}

struct TreeBuilder<'x, 'd> {
    x: ArrayView2<'x, f64>,
    y: &'d [usize],
    params: &'d ForestParams,
    m: usize,
    p: usize,
    n_total: f64,
    importances: Vec<f64>,
}

impl TreeBuilder<'_, '_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> TreeNode {
        let counts = class_counts(self.y, &rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() < 2;
        let depth_capped = self.params.max_depth.map_or(false, |d| depth >= d);
        if pure || depth_capped || rows.len() < self.params.min_samples_split {
            return TreeNode::Leaf { counts };
        }

        // fresh feature subset for this node, drawn without replacement,
        // sorted so tie-breaking is by feature index
        let mut candidates = rand::seq::index::sample(rng, self.p, self.m).into_vec();
        candidates.sort_unstable();

        let split = match best_split(
            self.x,
            self.y,
            &rows,
            &candidates,
            self.params.min_samples_leaf,
        ) {
            Some(s) => s,
            None => return TreeNode::Leaf { counts },
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[[r, split.feature]] <= split.threshold);

        let n = rows.len() as f64;
        let parent_impurity = gini_unchecked(&counts, rows.len());
        self.importances[split.feature] +=
            n / self.n_total * (parent_impurity - split.child_impurity);

        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Train a forest. `x` is subjects x features; `y` the group per subject.
pub fn train_forest(x: ArrayView2<f64>, y: &[Group], params: &ForestParams) -> Result<ForestModel> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: n,
        });
    }
    if n < 2 {
        return Err(Error::InsufficientSubjects(n));
    }
    if p == 0 {
        return Err(Error::EmptyFeatureSet);
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParam("n_trees must be >= 1".to_string()));
    }
    let classes: Vec<usize> = y.iter().map(|g| g.class_index()).collect();
    let mut class_priors = [0usize; 2];
    for &c in &classes {
        class_priors[c] += 1;
    }
    if class_priors.iter().any(|&c| c == 0) {
        return Err(Error::SingleClass);
    }
    let m = params.max_features.resolve(p);

    // one independent stream per tree: parallel growth reproduces serial
    let per_tree: Vec<(TreeNode, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let seed = derive_indexed_seed(params.seed, "tree", t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                x,
                y: &classes,
                params,
                m,
                p,
                n_total: rows.len() as f64,
                importances: vec![0.0; p],
            };
            let root = builder.grow(rows, 0, &mut rng);
            (root, builder.importances)
        })
        .collect();

    let mut importances = vec![0.0; p];
    let mut trees = Vec::with_capacity(params.n_trees);
    for (tree, imp) in per_tree {
        for (total, v) in importances.iter_mut().zip(imp) {
            *total += v;
        }
        trees.push(tree);
    }
    for v in importances.iter_mut() {
        *v /= params.n_trees as f64;
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in importances.iter_mut() {
            *v /= total;
        }
    }

    Ok(ForestModel {
        schema_version: 1,
        params: params.clone(),
        label_order: Group::LABEL_ORDER,
        class_priors,
        n_features: p,
        trees,
        importances,
    })
}

/// A single prediction: the winning label and per-class vote fractions in
/// [`Group::LABEL_ORDER`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Group,
    pub votes: [f64; 2],
}

impl ForestModel {
    /// Resolve a count tie: larger training prior wins, then first label.
    fn tie_break(&self, counts: &[usize; 2]) -> usize {
        if counts[0] > counts[1] {
            0
        } else if counts[1] > counts[0] {
            1
        } else if self.class_priors[1] > self.class_priors[0] {
            1
        } else {
            0
        }
    }

    fn tree_vote(&self, mut node: &TreeNode, row: &[f64]) -> usize {
        loop {
            match node {
                TreeNode::Leaf { counts } => return self.tie_break(counts),
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Majority vote over all trees.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: row.len(),
            });
        }
        let mut votes = [0usize; 2];
        for tree in &self.trees {
            votes[self.tree_vote(tree, row)] += 1;
        }
        let winner = self.tie_break(&votes);
        let n = self.trees.len() as f64;
        Ok(Prediction {
            label: self.label_order[winner],
            votes: [votes[0] as f64 / n, votes[1] as f64 / n],
        })
    }

    /// Predict a batch of rows (rows of `x`), in order.
    pub fn predict_matrix(&self, x: ArrayView2<f64>) -> Result<Vec<Prediction>> {
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                self.predict(&row)
            })
            .collect()
    }

    /// Versioned JSON serialization; round-trips exactly.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ForestModel> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ForestModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}
