//! Two-sample t-test feature screening.
//!
//! Every feature column is tested for a group-mean difference between ASD
//! and TD subjects; columns with `p < alpha` (strict) survive. The default
//! test is Welch's unequal-variance form with Welch-Satterthwaite degrees of
//! freedom, which reduces exactly to the pooled test when both groups have
//! equal size and variance; a pooled variant is available for comparison.
//!
//! Degenerate zero-variance columns stay total rather than erroring: equal
//! means give p = 1 (no evidence), unequal means with zero within-group
//! variance clamp p to the smallest positive double (perfect separation).

use crate::error::{Error, Result};
use crate::features::{FeatureDescriptor, FeatureMatrix, FitScope};
use crate::ingest::Group;
use crate::special::student_t_two_sided;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which two-sample t statistic to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVariant {
    /// Unequal-variance test, Welch-Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Pooled-variance Student test, df = n_a + n_b - 2.
    Pooled,
}

fn mean_and_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's t statistic and degrees of freedom for two samples.
///
/// Both samples need at least two observations. When both variances are
/// zero the statistic is 0 for equal means and +/- infinity otherwise, with
/// df falling back to `n_a + n_b - 2`; [`t_two_sided_p`] turns those into
/// p = 1 and p = minimum-positive respectively.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    t_statistic(a, b, TestVariant::Welch)
}

/// t statistic and degrees of freedom under the chosen variant.
pub fn t_statistic(a: &[f64], b: &[f64], variant: TestVariant) -> Result<(f64, f64)> {
    if a.len() < 2 {
        return Err(Error::GroupTooSmall {
            group: "a".to_string(),
            n: a.len(),
        });
    }
    if b.len() < 2 {
        return Err(Error::GroupTooSmall {
            group: "b".to_string(),
            n: b.len(),
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("t_statistic"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mean_a, var_a) = mean_and_var(a);
    let (mean_b, var_b) = mean_and_var(b);
    let diff = mean_a - mean_b;

    let (se2, df) = match variant {
        TestVariant::Welch => {
            let (qa, qb) = (var_a / na, var_b / nb);
            let se2 = qa + qb;
            let df = if se2 == 0.0 {
                na + nb - 2.0
            } else {
                se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
            };
            (se2, df)
        }
        TestVariant::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * var_a + (nb - 1.0) * var_b) / df;
            (pooled * (1.0 / na + 1.0 / nb), df)
        }
    };

    let t = if se2 == 0.0 {
        if diff == 0.0 {
            0.0
        } else if diff > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        diff / se2.sqrt()
    };
    Ok((t, df))
}

/// Two-sided p-value for a t statistic, clamped to (0, 1].
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    if !t.is_nan() && df.is_finite() && df > 0.0 {
        Ok(student_t_two_sided(t, df))
    } else {
        Err(Error::NonFiniteInput("t_two_sided_p"))
    }
}

/// Outcome of testing one feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub descriptor: FeatureDescriptor,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub selected: bool,
}

/// All per-column test results, in descriptor order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub alpha: f64,
    pub scope: FitScope,
    pub variant: TestVariant,
    pub results: Vec<TestResult>,
    pub selected_count: usize,
}

impl SelectionResult {
    /// Column indices of the selected features, ascending.
    pub fn selected_columns(&self) -> Vec<usize> {
        self.results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.selected)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Test every column over the given subject rows. `rows` lists the row
/// indices in selection scope: all rows for full-cohort selection, the
/// training rows for train-only selection. `scope` is recorded as
/// provenance. Columns run in parallel; output order is descriptor order.
pub fn select_features_on(
    matrix: &FeatureMatrix,
    labels: &[Group],
    rows: &[usize],
    alpha: f64,
    scope: FitScope,
    variant: TestVariant,
) -> Result<SelectionResult> {
    if labels.len() != matrix.n_subjects() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: matrix.n_subjects(),
        });
    }
    let asd_rows: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| labels[r] == Group::Asd)
        .collect();
    let td_rows: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| labels[r] == Group::Td)
        .collect();
    for (group, n) in [(Group::Asd, asd_rows.len()), (Group::Td, td_rows.len())] {
        if n < 2 {
            return Err(Error::GroupTooSmall {
                group: group.name().to_string(),
                n,
            });
        }
    }

    let results: Vec<TestResult> = (0..matrix.n_features())
        .into_par_iter()
        .map(|col| {
            let a: Vec<f64> = asd_rows.iter().map(|&r| matrix.values[[r, col]]).collect();
            let b: Vec<f64> = td_rows.iter().map(|&r| matrix.values[[r, col]]).collect();
            let (t, df) = t_statistic(&a, &b, variant)?;
            let p = t_two_sided_p(t, df)?;
            Ok(TestResult {
                descriptor: matrix.descriptors[col],
                t,
                df,
                p,
                selected: p < alpha,
            })
        })
        .collect::<Result<_>>()?;

    let selected_count = results.iter().filter(|r| r.selected).count();
    Ok(SelectionResult {
        alpha,
        scope,
        variant,
        results,
        selected_count,
    })
}

/// Full-cohort Welch selection over every subject row.
pub fn select_features(
    matrix: &FeatureMatrix,
    labels: &[Group],
    alpha: f64,
) -> Result<SelectionResult> {
    let rows: Vec<usize> = (0..matrix.n_subjects()).collect();
    select_features_on(
        matrix,
        labels,
        &rows,
        alpha,
        FitScope::FullCohort,
        TestVariant::Welch,
    )
}

/// CSV export: `descriptor,t,df,p,selected`, 17 significant digits so the
/// file reproduces the in-memory doubles exactly.
pub fn write_selection_csv_string(
    selection: &SelectionResult,
    atlas: &crate::atlas::Atlas,
) -> String {
    let mut out = String::from("descriptor,t,df,p,selected\n");
    for r in &selection.results {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{}\n",
            r.descriptor.name(atlas),
            r.t,
            r.df,
            r.p,
            r.selected
        ));
    }
    out
}

pub fn write_selection_csv(
    selection: &SelectionResult,
    atlas: &crate::atlas::Atlas,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_selection_csv_string(selection, atlas))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parse a selection CSV back, matching descriptors against the atlas.
pub fn parse_selection_csv(
    path: impl AsRef<Path>,
    atlas: &crate::atlas::Atlas,
    alpha: f64,
    scope: FitScope,
) -> Result<SelectionResult> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let origin = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut results = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: origin.clone(),
            source: e,
        })?;
        let parse_f = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|_| Error::MalformedTable {
                path: origin.clone(),
                reason: format!("bad float {:?}", &record[i]),
            })
        };
        results.push(TestResult {
            descriptor: FeatureDescriptor::parse_name(&record[0], atlas)?,
            t: parse_f(1)?,
            df: parse_f(2)?,
            p: parse_f(3)?,
            selected: &record[4] == "true",
        });
    }
    let selected_count = results.iter().filter(|r| r.selected).count();
    Ok(SelectionResult {
        alpha,
        scope,
        variant: TestVariant::Welch,
        results,
        selected_count,
    })
}
