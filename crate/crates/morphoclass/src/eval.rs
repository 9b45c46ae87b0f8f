//! Train/test splitting and classification metrics.

use crate::error::{Error, Result};
use crate::ingest::Group;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Split configuration. Stratified 80/20 by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratify_by_label: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> SplitSpec {
        SplitSpec {
            train_fraction: 0.8,
            stratify_by_label: true,
            seed,
        }
    }
}

/// Disjoint, exhaustive row-index split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Split subjects into train and test sets.
///
/// Stratified mode draws `round(train_fraction * class_size)` training
/// subjects per class, remainder to test; a class that cannot place at
/// least one subject on each side under that rule is an error. Output
/// index lists are sorted ascending and fully determined by the seed.
pub fn train_test_split(ids: &[String], labels: &[Group], spec: &SplitSpec) -> Result<Split> {
    if ids.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: labels.len(),
        });
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::BadTrainFraction(spec.train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();

    let mut take = |rows: &mut Vec<usize>, group: Option<Group>| -> Result<()> {
        let n_train = (spec.train_fraction * rows.len() as f64).round() as usize;
        if n_train == 0 || n_train == rows.len() {
            return Err(Error::ClassTooSmall {
                group: group.map(|g| g.name().to_string()).unwrap_or_else(|| "all".into()),
            });
        }
        rows.shuffle(&mut rng);
        train.extend_from_slice(&rows[..n_train]);
        test.extend_from_slice(&rows[n_train..]);
        Ok(())
    };

    if spec.stratify_by_label {
        for group in Group::LABEL_ORDER {
            let mut rows: Vec<usize> = (0..ids.len()).filter(|&i| labels[i] == group).collect();
            take(&mut rows, Some(group))?;
        }
    } else {
        let mut rows: Vec<usize> = (0..ids.len()).collect();
        take(&mut rows, None)?;
    }

    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Confusion-matrix metrics with ASD as the positive class. Ratios whose
/// denominator is zero are reported absent, never NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
}

/// Compute metrics from true and predicted labels (equal nonzero length).
pub fn compute_metrics(y_true: &[Group], y_pred: &[Group]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 0 });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fn_ = 0usize;
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (Group::Asd, Group::Asd) => tp += 1,
            (Group::Td, Group::Asd) => fp += 1,
            (Group::Td, Group::Td) => tn += 1,
            (Group::Asd, Group::Td) => fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let accuracy = (tp + tn) as f64 / y_true.len() as f64;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Metrics {
        tp,
        fp,
        tn,
        fn_,
        accuracy,
        precision,
        recall,
        f1,
    })
}
