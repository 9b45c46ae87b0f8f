//! Age stratification and demographic summaries.
//!
//! The three standard bands are `[6, 11)`, `[11, 18]` and `[6, 18]`. The
//! half-open lower band makes the first two bands a partition of the
//! combined one: a subject aged exactly 11 belongs to `11to18` only, so
//! per-band counts add up.

use crate::error::{Error, Result};
use crate::ingest::{CohortDataset, Group, PhenotypeRecord, Sex};
use serde::{Deserialize, Serialize};

/// An age interval `[lower, upper)` or `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBand {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
    pub upper_inclusive: bool,
}

impl AgeBand {
    pub fn new(label: impl Into<String>, lower: f64, upper: f64, upper_inclusive: bool) -> AgeBand {
        assert!(lower < upper, "age band must have lower < upper");
        AgeBand {
            label: label.into(),
            lower,
            upper,
            upper_inclusive,
        }
    }

    pub fn contains(&self, age: f64) -> bool {
        if age < self.lower {
            return false;
        }
        if self.upper_inclusive {
            age <= self.upper
        } else {
            age < self.upper
        }
    }
}

/// The three standard analysis bands: `[6,11)`, `[11,18]`, `[6,18]`.
pub fn default_bands() -> Vec<AgeBand> {
    vec![
        AgeBand::new("6to11", 6.0, 11.0, false),
        AgeBand::new("11to18", 11.0, 18.0, true),
        AgeBand::new("6to18", 6.0, 18.0, true),
    ]
}

/// Keep only subjects whose age falls inside the band; order is preserved.
/// An empty result is not an error here — callers decide.
pub fn stratify(dataset: &CohortDataset, band: &AgeBand) -> CohortDataset {
    let keep: Vec<bool> = dataset
        .phenotypes
        .iter()
        .map(|p| band.contains(p.age))
        .collect();
    CohortDataset {
        atlas: dataset.atlas.clone(),
        phenotypes: dataset
            .phenotypes
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(p, _)| p.clone())
            .collect(),
        morphometry: dataset
            .morphometry
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(m, _)| m.clone())
            .collect(),
    }
}

/// Count and FIQ statistics for one diagnostic group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub count: usize,
    pub male: usize,
    pub female: usize,
    /// Subjects with an FIQ value present.
    pub fiq_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiq_mean: Option<f64>,
    /// Sample standard deviation (n-1 denominator); absent when fiq_n < 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiq_sd: Option<f64>,
}

/// Demographic table for one dataset: one column per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicSummary {
    pub td: GroupSummary,
    pub asd: GroupSummary,
}

fn summarize_group(records: &[&PhenotypeRecord]) -> GroupSummary {
    let count = records.len();
    let male = records.iter().filter(|p| p.sex == Sex::M).count();
    let fiq: Vec<f64> = records.iter().filter_map(|p| p.fiq).collect();
    let fiq_n = fiq.len();
    let fiq_mean = if fiq_n > 0 {
        Some(fiq.iter().sum::<f64>() / fiq_n as f64)
    } else {
        None
    };
    let fiq_sd = if fiq_n > 1 {
        let mean = fiq_mean.unwrap();
        let var = fiq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (fiq_n - 1) as f64;
        Some(var.sqrt())
    } else {
        None
    };
    GroupSummary {
        count,
        male,
        female: count - male,
        fiq_n,
        fiq_mean,
        fiq_sd,
    }
}

/// Per-group counts, sex breakdown, and FIQ mean/SD for a dataset.
pub fn demographic_summary(dataset: &CohortDataset) -> Result<DemographicSummary> {
    if dataset.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let td: Vec<&PhenotypeRecord> = dataset
        .phenotypes
        .iter()
        .filter(|p| p.group == Group::Td)
        .collect();
    let asd: Vec<&PhenotypeRecord> = dataset
        .phenotypes
        .iter()
        .filter(|p| p.group == Group::Asd)
        .collect();
    Ok(DemographicSummary {
        td: summarize_group(&td),
        asd: summarize_group(&asd),
    })
}

impl DemographicSummary {
    /// Aligned-text rendering, one column per group.
    pub fn to_table(&self) -> String {
        fn fiq_cell(g: &GroupSummary) -> String {
            match (g.fiq_mean, g.fiq_sd) {
                (Some(mean), Some(sd)) => format!("{mean:.1} \u{b1} {sd:.1}"),
                (Some(mean), None) => format!("{mean:.1} (n=1)"),
                _ => "-".to_string(),
            }
        }
        let rows = [
            (
                "Count",
                self.td.count.to_string(),
                self.asd.count.to_string(),
            ),
            (
                "Gender",
                format!("{} M {} F", self.td.male, self.td.female),
                format!("{} M {} F", self.asd.male, self.asd.female),
            ),
            ("FIQ (Mean \u{b1} SD)", fiq_cell(&self.td), fiq_cell(&self.asd)),
        ];
        let label_w = rows.iter().map(|r| r.0.len()).max().unwrap();
        let td_w = rows.iter().map(|r| r.1.len()).max().unwrap().max(2);
        let mut out = format!("{:label_w$}  {:td_w$}  {}\n", "", "TD", "ASD");
        for (label, td, asd) in rows {
            out.push_str(&format!("{label:label_w$}  {td:td_w$}  {asd}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::Atlas;
    use crate::ingest::MorphometryRecord;
    use ndarray::Array2;

    fn dataset_with_ages(ages: &[f64]) -> CohortDataset {
        let atlas = Atlas::synthetic(2).unwrap();
        let phenotypes: Vec<PhenotypeRecord> = ages
            .iter()
            .enumerate()
            .map(|(i, &age)| PhenotypeRecord {
                subject_id: format!("s{i:02}"),
                site_id: "X".to_string(),
                age,
                sex: Sex::M,
                group: if i % 2 == 0 { Group::Td } else { Group::Asd },
                fiq: None,
            })
            .collect();
        let morphometry = phenotypes
            .iter()
            .map(|p| MorphometryRecord {
                subject_id: p.subject_id.clone(),
                values: Array2::zeros((2, 4)),
            })
            .collect();
        CohortDataset {
            atlas,
            phenotypes,
            morphometry,
        }
    }

    #[test]
    fn default_bands_are_the_standard_three() {
        let bands = default_bands();
        assert_eq!(bands.len(), 3);
        assert_eq!(bands[0].label, "6to11");
        assert!(!bands[0].upper_inclusive);
        assert_eq!((bands[0].lower, bands[0].upper), (6.0, 11.0));
        assert_eq!(bands[1].label, "11to18");
        assert!(bands[1].upper_inclusive);
        assert_eq!(bands[2].label, "6to18");
        // first two bands are disjoint and exactly cover the third
        assert!(bands[0].contains(10.999) && !bands[1].contains(10.999));
        assert!(!bands[0].contains(11.0) && bands[1].contains(11.0));
        assert_eq!(bands[0].lower, bands[2].lower);
        assert_eq!(bands[1].upper, bands[2].upper);
        assert_eq!(bands[0].upper, bands[1].lower);
    }

    #[test]
    fn stratify_boundaries() {
        let dataset = dataset_with_ages(&[10.9, 11.0, 17.5, 18.0]);
        let bands = default_bands();
        let young = stratify(&dataset, &bands[0]);
        assert_eq!(young.len(), 1);
        assert_eq!(young.phenotypes[0].age, 10.9);

        let old = stratify(&dataset, &bands[1]);
        let old_ages: Vec<f64> = old.phenotypes.iter().map(|p| p.age).collect();
        assert_eq!(old_ages, vec![11.0, 17.5, 18.0]);

        assert_eq!(stratify(&dataset, &bands[2]).len(), 4);
    }

    #[test]
    fn stratify_is_idempotent() {
        let dataset = dataset_with_ages(&[6.0, 9.5, 11.0, 14.0, 18.0]);
        let band = &default_bands()[0];
        let once = stratify(&dataset, band);
        let twice = stratify(&once, band);
        assert_eq!(once.len(), twice.len());
        assert_eq!(
            once.subject_ids(),
            twice.subject_ids()
        );
    }

    #[test]
    fn partition_property() {
        let ages: Vec<f64> = (0..200).map(|i| 6.0 + 12.0 * (i as f64) / 199.0).collect();
        let dataset = dataset_with_ages(&ages);
        let bands = default_bands();
        for group in [Group::Td, Group::Asd] {
            let count = |band: &AgeBand| {
                stratify(&dataset, band)
                    .phenotypes
                    .iter()
                    .filter(|p| p.group == group)
                    .count()
            };
            assert_eq!(count(&bands[0]) + count(&bands[1]), count(&bands[2]));
        }
    }

    #[test]
    fn fiq_summary_hand_computed() {
        let mut dataset = dataset_with_ages(&[9.0, 9.0, 9.0, 9.0]);
        // subjects 0 and 2 are TD; give them FIQ 110 and 120
        dataset.phenotypes[0].fiq = Some(110.0);
        dataset.phenotypes[2].fiq = Some(120.0);
        let summary = demographic_summary(&dataset).unwrap();
        assert_eq!(summary.td.count, 2);
        assert_eq!(summary.td.fiq_n, 2);
        assert_eq!(summary.td.fiq_mean, Some(115.0));
        let sd = summary.td.fiq_sd.unwrap();
        assert!((sd - 7.0710678118654755).abs() < 1e-12, "sd = {sd}");
        // ASD subjects carry no FIQ
        assert_eq!(summary.asd.fiq_n, 0);
        assert_eq!(summary.asd.fiq_mean, None);
        assert_eq!(summary.asd.fiq_sd, None);
    }

    #[test]
    fn single_subject_sd_absent() {
        let mut dataset = dataset_with_ages(&[9.0, 9.0]);
        dataset.phenotypes[0].fiq = Some(105.0);
        let summary = demographic_summary(&dataset).unwrap();
        assert_eq!(summary.td.fiq_n, 1);
        assert_eq!(summary.td.fiq_mean, Some(105.0));
        assert_eq!(summary.td.fiq_sd, None);
    }

    #[test]
    fn counts_invariant_under_reordering() {
        let mut dataset = dataset_with_ages(&[7.0, 8.0, 9.0, 10.0, 10.5]);
        let before = demographic_summary(&dataset).unwrap();
        dataset.phenotypes.reverse();
        dataset.morphometry.reverse();
        let after = demographic_summary(&dataset).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn all_male_group_has_zero_female() {
        let dataset = dataset_with_ages(&[9.0, 9.0, 9.0]);
        let summary = demographic_summary(&dataset).unwrap();
        assert_eq!(summary.td.female, 0);
        assert_eq!(summary.td.male, summary.td.count);
    }

    #[test]
    fn text_table_mentions_both_groups() {
        let dataset = dataset_with_ages(&[9.0, 9.0]);
        let table = demographic_summary(&dataset).unwrap().to_table();
        assert!(table.contains("TD"));
        assert!(table.contains("ASD"));
        assert!(table.contains("Count"));
    }
}
