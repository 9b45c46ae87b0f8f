//! Experiment orchestration and reporting: lobe attribution tables, ranked
//! connectome edges, and the per-(band, feature-kind) experiment runner.

use crate::atlas::{Atlas, Lobe};
use crate::cohort::{stratify, AgeBand};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, train_test_split, Metrics, SplitSpec};
use crate::features::{
    apply_standardizer, build_mcf, build_mf, fit_standardizer, FeatureDescriptor, FeatureKind,
    FitScope,
};
use crate::forest::{train_forest, ForestParams};
use crate::ingest::{CohortDataset, Group};
use crate::seeds::derive_seed;
use crate::select::{select_features_on, SelectionResult, TestVariant};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Percentage of selected features attributed to one lobe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobeFraction {
    pub lobe: Lobe,
    pub count: usize,
    pub percent: f64,
}

/// Attribute selected features to lobes.
///
/// An MF feature counts once toward its region's lobe; an MCF feature
/// counts once toward *each* endpoint's lobe, so the MCF denominator is
/// twice the number of selected edges. Percentages sum to 100 up to
/// rounding. Lobes with zero count are omitted; output is in the fixed
/// [`Lobe::ALL`] order.
pub fn lobe_fractions(descriptors: &[FeatureDescriptor], atlas: &Atlas) -> Vec<LobeFraction> {
    let mut counts = [0usize; Lobe::ALL.len()];
    let mut total = 0usize;
    let mut bump = |region: usize| {
        let lobe = atlas.region(region).lobe;
        let slot = Lobe::ALL.iter().position(|l| *l == lobe).expect("lobe in ALL");
        counts[slot] += 1;
        total += 1;
    };
    for d in descriptors {
        match d {
            FeatureDescriptor::Mf { region, .. } => bump(*region),
            FeatureDescriptor::Mcf { i, j } => {
                bump(*i);
                bump(*j);
            }
        }
    }
    Lobe::ALL
        .iter()
        .enumerate()
        .filter(|(slot, _)| counts[*slot] > 0)
        .map(|(slot, &lobe)| LobeFraction {
            lobe,
            count: counts[slot],
            percent: 100.0 * counts[slot] as f64 / total as f64,
        })
        .collect()
}

/// Ranking criterion for connectome edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCriterion {
    /// Ascending p-value (selection-driven), the default.
    #[default]
    Pvalue,
    /// Descending Gini importance from the trained forest.
    GiniImportance,
}

/// One ranked connectome edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEdge {
    pub rank: usize,
    pub region_i: String,
    pub region_j: String,
    pub lobe_i: Lobe,
    pub lobe_j: Lobe,
    pub p_value: f64,
    pub gini_importance: f64,
}

/// Rank the selected MCF edges by the chosen criterion and keep the top k.
///
/// `importances` maps each *selected* column (in selection order) to its
/// forest importance; pass `None` when no model is available. Ties break
/// by descriptor order, so ranking is stable across runs.
pub fn rank_edges(
    selection: &SelectionResult,
    importances: Option<&[f64]>,
    atlas: &Atlas,
    criterion: EdgeCriterion,
    k: usize,
) -> Result<Vec<RankedEdge>> {
    struct Entry {
        order: usize,
        i: usize,
        j: usize,
        p: f64,
        importance: f64,
    }
    let mut entries = Vec::new();
    let mut selected_seen = 0usize;
    for (order, r) in selection.results.iter().enumerate() {
        if !r.selected {
            continue;
        }
        let importance = importances
            .and_then(|imp| imp.get(selected_seen))
            .copied()
            .unwrap_or(0.0);
        selected_seen += 1;
        match r.descriptor {
            FeatureDescriptor::Mcf { i, j } => entries.push(Entry {
                order,
                i,
                j,
                p: r.p,
                importance,
            }),
            FeatureDescriptor::Mf { .. } => return Err(Error::NotMcf("MF descriptor")),
        }
    }
    match criterion {
        EdgeCriterion::Pvalue => entries.sort_by(|a, b| {
            a.p.partial_cmp(&b.p)
                .expect("p-values are finite")
                .then(a.order.cmp(&b.order))
        }),
        EdgeCriterion::GiniImportance => entries.sort_by(|a, b| {
            b.importance
                .partial_cmp(&a.importance)
                .expect("importances are finite")
                .then(a.order.cmp(&b.order))
        }),
    }
    Ok(entries
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(idx, e)| RankedEdge {
            rank: idx + 1,
            region_i: atlas.region(e.i).name.clone(),
            region_j: atlas.region(e.j).name.clone(),
            lobe_i: atlas.region(e.i).lobe,
            lobe_j: atlas.region(e.j).lobe,
            p_value: e.p,
            gini_importance: e.importance,
        })
        .collect())
}

/// Edge-list CSV for external connectome viewers.
pub fn write_edges_csv_string(edges: &[RankedEdge]) -> String {
    let mut out = String::from("rank,region_i,region_j,lobe_i,lobe_j,p_value,gini_importance\n");
    for e in edges {
        out.push_str(&format!(
            "{},{},{},{},{},{:.16e},{:.16e}\n",
            e.rank, e.region_i, e.region_j, e.lobe_i, e.lobe_j, e.p_value, e.gini_importance
        ));
    }
    out
}

/// Everything an experiment cell needs beyond the dataset and band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub selection_scope: FitScope,
    pub standardization_scope: FitScope,
    pub test_variant: TestVariant,
    pub train_fraction: f64,
    pub stratify_split: bool,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub edge_criterion: EdgeCriterion,
    pub top_k_edges: usize,
    /// Master seed; split and forest seeds are derived per cell.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            alpha: 0.05,
            selection_scope: FitScope::TrainOnly,
            standardization_scope: FitScope::TrainOnly,
            test_variant: TestVariant::Welch,
            train_fraction: 0.8,
            stratify_split: true,
            n_trees: 100,
            max_depth: None,
            edge_criterion: EdgeCriterion::Pvalue,
            top_k_edges: 100,
            seed,
        }
    }
}

/// Seeds derived from the master seed for one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub master: u64,
    pub split: u64,
    pub forest: u64,
}

/// Summary of the selection stage embedded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub alpha: f64,
    pub scope: FitScope,
    pub variant: TestVariant,
    pub tested: usize,
    pub selected_count: usize,
}

/// Benchmark metrics reported for this band/kind cell by the original
/// ABIDE I+II study (710 subjects); desk-scale synthetic runs are not
/// expected to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTargets {
    pub accuracy_percent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_percent: Option<f64>,
    pub note: String,
}

fn reference_targets(band: &str, kind: FeatureKind) -> Option<ReferenceTargets> {
    let note = "ABIDE I+II benchmark (710 subjects); not comparable to synthetic cohorts"
        .to_string();
    let target = |accuracy: f64| ReferenceTargets {
        accuracy_percent: accuracy,
        f1_percent: None,
        recall_percent: None,
        precision_percent: None,
        note: note.clone(),
    };
    match (band, kind) {
        ("6to11", FeatureKind::Mf) => Some(target(67.7)),
        ("6to11", FeatureKind::Mcf) => Some(ReferenceTargets {
            accuracy_percent: 75.8,
            f1_percent: Some(83.1),
            recall_percent: Some(86.0),
            precision_percent: Some(80.4),
            note,
        }),
        ("11to18", FeatureKind::Mf) => Some(target(59.3)),
        ("11to18", FeatureKind::Mcf) => Some(target(56.8)),
        ("6to18", FeatureKind::Mf) => Some(target(60.36)),
        ("6to18", FeatureKind::Mcf) => Some(target(67.6)),
        _ => None,
    }
}

/// Full record of one (band, feature kind) experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub band: String,
    pub feature_kind: FeatureKind,
    pub n_subjects: usize,
    pub n_td: usize,
    pub n_asd: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub standardization_scope: FitScope,
    pub selection: SelectionSummary,
    pub forest: ForestParams,
    pub seeds: DerivedSeeds,
    pub metrics: Metrics,
    pub lobe_fractions: Vec<LobeFraction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_edges: Option<Vec<RankedEdge>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceTargets>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Short human-readable summary.
    pub fn to_text(&self) -> String {
        let fmt_opt = |v: Option<f64>| {
            v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".to_string())
        };
        let mut out = format!(
            "band {} / {} : {} subjects ({} TD, {} ASD), {} train / {} test\n",
            self.band,
            self.feature_kind,
            self.n_subjects,
            self.n_td,
            self.n_asd,
            self.n_train,
            self.n_test
        );
        out.push_str(&format!(
            "selected {} of {} features (alpha {}, {})\n",
            self.selection.selected_count,
            self.selection.tested,
            self.selection.alpha,
            self.selection.scope.name()
        ));
        out.push_str(&format!(
            "accuracy {:.4}  precision {}  recall {}  f1 {}\n",
            self.metrics.accuracy,
            fmt_opt(self.metrics.precision),
            fmt_opt(self.metrics.recall),
            fmt_opt(self.metrics.f1)
        ));
        for lf in &self.lobe_fractions {
            out.push_str(&format!("  {:<18} {:>6.2}%\n", lf.lobe.name(), lf.percent));
        }
        out
    }
}

/// Run one experiment cell end to end:
/// stratify -> split -> standardize -> build features -> select -> train ->
/// predict -> metrics -> lobe/edge tables. Deterministic given the config.
pub fn run_experiment(
    dataset: &CohortDataset,
    band: &AgeBand,
    kind: FeatureKind,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let banded = stratify(dataset, band);
    let labels = banded.labels();
    let ids = banded.subject_ids();
    let n_asd = labels.iter().filter(|g| **g == Group::Asd).count();
    let n_td = labels.len() - n_asd;

    let cell = format!("{}/{}", band.label, kind.name());
    let seeds = DerivedSeeds {
        master: config.seed,
        split: derive_seed(config.seed, &format!("split/{cell}")),
        forest: derive_seed(config.seed, &format!("forest/{cell}")),
    };

    let split_spec = SplitSpec {
        train_fraction: config.train_fraction,
        stratify_by_label: config.stratify_split,
        seed: seeds.split,
    };
    let split =
        train_test_split(&ids, &labels, &split_spec).map_err(Error::at_stage("split"))?;

    let all_rows: Vec<usize> = (0..banded.len()).collect();
    let fit_rows = match config.standardization_scope {
        FitScope::TrainOnly => &split.train,
        FitScope::FullCohort => &all_rows,
    };
    let params = fit_standardizer(&banded, fit_rows, config.standardization_scope)
        .map_err(Error::at_stage("standardize"))?;
    let tensor = apply_standardizer(&params, &banded).map_err(Error::at_stage("standardize"))?;
    let matrix = match kind {
        FeatureKind::Mf => build_mf(&tensor, &banded, &params),
        FeatureKind::Mcf => build_mcf(&tensor, &banded, &params),
    };

    let selection_rows = match config.selection_scope {
        FitScope::TrainOnly => &split.train,
        FitScope::FullCohort => &all_rows,
    };
    let selection = select_features_on(
        &matrix,
        &labels,
        selection_rows,
        config.alpha,
        config.selection_scope,
        config.test_variant,
    )
    .map_err(Error::at_stage("select"))?;
    let columns = selection.selected_columns();
    if columns.is_empty() {
        return Err(Error::at_stage("select")(Error::NoFeaturesSelected {
            alpha: config.alpha,
        }));
    }

    let gather = |rows: &[usize]| -> Array2<f64> {
        let mut out = Array2::zeros((rows.len(), columns.len()));
        for (a, &r) in rows.iter().enumerate() {
            for (b, &c) in columns.iter().enumerate() {
                out[[a, b]] = matrix.values[[r, c]];
            }
        }
        out
    };
    let x_train = gather(&split.train);
    let x_test = gather(&split.test);
    let y_train: Vec<Group> = split.train.iter().map(|&r| labels[r]).collect();
    let y_test: Vec<Group> = split.test.iter().map(|&r| labels[r]).collect();

    let forest_params = ForestParams {
        n_trees: config.n_trees,
        max_depth: config.max_depth,
        ..ForestParams::with_seed(seeds.forest)
    };
    let model =
        train_forest(x_train.view(), &y_train, &forest_params).map_err(Error::at_stage("train"))?;
    let predictions = model
        .predict_matrix(x_test.view())
        .map_err(Error::at_stage("predict"))?;
    let y_pred: Vec<Group> = predictions.iter().map(|p| p.label).collect();
    let metrics = compute_metrics(&y_test, &y_pred).map_err(Error::at_stage("metrics"))?;

    let selected_descriptors: Vec<FeatureDescriptor> =
        columns.iter().map(|&c| matrix.descriptors[c]).collect();
    let fractions = lobe_fractions(&selected_descriptors, &banded.atlas);

    let top_edges = match kind {
        FeatureKind::Mcf => Some(
            rank_edges(
                &selection,
                Some(&model.importances),
                &banded.atlas,
                config.edge_criterion,
                config.top_k_edges,
            )
            .map_err(Error::at_stage("report"))?,
        ),
        FeatureKind::Mf => None,
    };

    Ok(ExperimentReport {
        schema_version: 1,
        band: band.label.clone(),
        feature_kind: kind,
        n_subjects: banded.len(),
        n_td,
        n_asd,
        n_train: split.train.len(),
        n_test: split.test.len(),
        standardization_scope: config.standardization_scope,
        selection: SelectionSummary {
            alpha: selection.alpha,
            scope: selection.scope,
            variant: selection.variant,
            tested: selection.results.len(),
            selected_count: selection.selected_count,
        },
        forest: forest_params,
        seeds,
        metrics,
        lobe_fractions: fractions,
        top_edges,
        reference: reference_targets(&band.label, kind),
    })
}

/// Metrics grid CSV: one row per band, metric x feature-kind columns.
pub fn write_metrics_grid_csv(reports: &[ExperimentReport]) -> String {
    let mut bands: Vec<String> = Vec::new();
    for r in reports {
        if !bands.contains(&r.band) {
            bands.push(r.band.clone());
        }
    }
    let mut out = String::from(
        "band,mf_accuracy,mf_precision,mf_recall,mf_f1,mcf_accuracy,mcf_precision,mcf_recall,mcf_f1\n",
    );
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for band in &bands {
        out.push_str(band);
        for kind in [FeatureKind::Mf, FeatureKind::Mcf] {
            let report = reports.iter().find(|r| &r.band == band && r.feature_kind == kind);
            match report {
                Some(r) => {
                    out.push_str(&format!(",{:.6}", r.metrics.accuracy));
                    out.push_str(&format!(",{}", cell(r.metrics.precision)));
                    out.push_str(&format!(",{}", cell(r.metrics.recall)));
                    out.push_str(&format!(",{}", cell(r.metrics.f1)));
                }
                None => out.push_str(",,,,"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Measure;

    fn lobe_atlas() -> Atlas {
        // synthetic(14) round-robins all 7 lobes twice per hemisphere
        Atlas::synthetic(14).unwrap()
    }

    #[test]
    fn mf_lobe_counting() {
        let atlas = lobe_atlas();
        // regions 0..6 cover Frontal..Limbic in order; 3 frontal + 1 insula
        let descriptors = vec![
            FeatureDescriptor::Mf { region: 0, measure: Measure::Area },
            FeatureDescriptor::Mf { region: 0, measure: Measure::Volume },
            FeatureDescriptor::Mf { region: 7, measure: Measure::Thickness },
            FeatureDescriptor::Mf { region: 4, measure: Measure::Area },
        ];
        assert_eq!(atlas.region(0).lobe, Lobe::Frontal);
        assert_eq!(atlas.region(7).lobe, Lobe::Frontal);
        assert_eq!(atlas.region(4).lobe, Lobe::Insula);
        let fractions = lobe_fractions(&descriptors, &atlas);
        assert_eq!(fractions.len(), 2);
        assert_eq!(fractions[0].lobe, Lobe::Frontal);
        assert_eq!(fractions[0].percent, 75.0);
        assert_eq!(fractions[1].lobe, Lobe::Insula);
        assert_eq!(fractions[1].percent, 25.0);
    }

    #[test]
    fn mcf_edge_splits_across_endpoints() {
        let atlas = lobe_atlas();
        // one frontal-occipital edge: 50% / 50%
        assert_eq!(atlas.region(3).lobe, Lobe::Occipital);
        let descriptors = vec![FeatureDescriptor::Mcf { i: 0, j: 3 }];
        let fractions = lobe_fractions(&descriptors, &atlas);
        assert_eq!(fractions.len(), 2);
        assert!(fractions.iter().all(|f| f.percent == 50.0));
    }

    #[test]
    fn fractions_sum_to_hundred() {
        let atlas = lobe_atlas();
        let mut descriptors = Vec::new();
        for i in 0..14 {
            for j in (i + 1)..14 {
                if (i + j) % 3 == 0 {
                    descriptors.push(FeatureDescriptor::Mcf { i, j });
                }
            }
        }
        let total: f64 = lobe_fractions(&descriptors, &atlas)
            .iter()
            .map(|f| f.percent)
            .sum();
        assert!((total - 100.0).abs() < 0.1, "total = {total}");
    }

    fn selection_of(ps: &[(usize, usize, f64)]) -> SelectionResult {
        let results = ps
            .iter()
            .map(|&(i, j, p)| crate::select::TestResult {
                descriptor: FeatureDescriptor::Mcf { i, j },
                t: 1.0,
                df: 10.0,
                p,
                selected: true,
            })
            .collect::<Vec<_>>();
        SelectionResult {
            alpha: 0.05,
            scope: FitScope::FullCohort,
            variant: TestVariant::Welch,
            selected_count: results.len(),
            results,
        }
    }

    #[test]
    fn rank_edges_by_pvalue() {
        let atlas = lobe_atlas();
        let selection = selection_of(&[(0, 1, 0.01), (0, 2, 0.001), (1, 2, 0.04)]);
        let edges = rank_edges(&selection, None, &atlas, EdgeCriterion::Pvalue, 100).unwrap();
        assert_eq!(edges.len(), 3);
        let ps: Vec<f64> = edges.iter().map(|e| e.p_value).collect();
        assert_eq!(ps, vec![0.001, 0.01, 0.04]);
        assert_eq!(
            edges.iter().map(|e| e.rank).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn rank_edges_truncates_and_tie_breaks() {
        let atlas = lobe_atlas();
        let selection = selection_of(&[(0, 1, 0.02), (0, 2, 0.02), (1, 2, 0.02)]);
        let edges = rank_edges(&selection, None, &atlas, EdgeCriterion::Pvalue, 2).unwrap();
        assert_eq!(edges.len(), 2);
        // equal p: descriptor order wins
        assert_eq!(edges[0].region_i, atlas.region(0).name);
        assert_eq!(edges[0].region_j, atlas.region(1).name);
        assert_eq!(edges[1].region_j, atlas.region(2).name);
    }

    #[test]
    fn rank_edges_rejects_mf() {
        let atlas = lobe_atlas();
        let mut selection = selection_of(&[(0, 1, 0.02)]);
        selection.results[0].descriptor = FeatureDescriptor::Mf {
            region: 0,
            measure: Measure::Area,
        };
        assert!(matches!(
            rank_edges(&selection, None, &atlas, EdgeCriterion::Pvalue, 10),
            Err(Error::NotMcf(_))
        ));
    }

    #[test]
    fn rank_edges_by_importance() {
        let atlas = lobe_atlas();
        let selection = selection_of(&[(0, 1, 0.001), (0, 2, 0.002), (1, 2, 0.003)]);
        let importances = [0.1, 0.7, 0.2];
        let edges = rank_edges(
            &selection,
            Some(&importances),
            &atlas,
            EdgeCriterion::GiniImportance,
            100,
        )
        .unwrap();
        assert_eq!(edges[0].gini_importance, 0.7);
        assert_eq!(edges[1].gini_importance, 0.2);
        assert_eq!(edges[2].gini_importance, 0.1);
    }
}
