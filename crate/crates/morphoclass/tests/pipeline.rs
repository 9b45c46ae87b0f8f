//! End-to-end pipeline behavior on synthetic cohorts: null calibration,
//! the planted MCF-vs-MF contrast, and report determinism.

use morphoclass::atlas::Atlas;
use morphoclass::cohort::{default_bands, stratify};
use morphoclass::features::{
    apply_standardizer, build_mf, fit_standardizer, FeatureKind, FitScope,
};
use morphoclass::ingest::{build_cohort, CohortDataset, Group, JoinMode};
use morphoclass::report::{run_experiment, ExperimentConfig};
use morphoclass::select::{select_features, welch_t, t_two_sided_p};
use morphoclass::synth::{generate_cohort, McfEffect, SynthSpec};
use morphoclass::testing::ks_distance_from_uniform;

fn cohort_from(spec: &SynthSpec, atlas: Atlas) -> CohortDataset {
    let (phenotypes, morphometry) = generate_cohort(spec, &atlas).unwrap();
    let (dataset, warnings) = build_cohort(phenotypes, morphometry, atlas, JoinMode::Strict).unwrap();
    assert!(warnings.is_empty());
    dataset
}

#[test]
fn null_cohort_selection_rate_matches_alpha() {
    // 200 subjects, 250-region atlas -> exactly 1000 MF columns of pure noise
    let atlas = Atlas::synthetic(250).unwrap();
    let dataset = cohort_from(&SynthSpec::null_cohort(2024, 100, 100), atlas);
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let params = fit_standardizer(&dataset, &rows, FitScope::FullCohort).unwrap();
    let tensor = apply_standardizer(&params, &dataset).unwrap();
    let matrix = build_mf(&tensor, &dataset, &params);
    assert_eq!(matrix.n_features(), 1000);

    let selection = select_features(&matrix, &dataset.labels(), 0.05).unwrap();
    let fraction = selection.selected_count as f64 / selection.results.len() as f64;
    println!("null selection fraction at alpha 0.05: {fraction:.4}");
    assert!(
        (0.03..=0.07).contains(&fraction),
        "selected fraction {fraction} outside [0.03, 0.07]"
    );
}

#[test]
fn null_cohort_p_values_are_uniform() {
    // raw-column Welch p-values under the null should look U(0, 1)
    let atlas = Atlas::synthetic(250).unwrap();
    let dataset = cohort_from(&SynthSpec::null_cohort(555, 100, 100), atlas);
    let labels = dataset.labels();
    let asd: Vec<usize> = (0..dataset.len()).filter(|&i| labels[i] == Group::Asd).collect();
    let td: Vec<usize> = (0..dataset.len()).filter(|&i| labels[i] == Group::Td).collect();

    let mut ps = Vec::with_capacity(1000);
    for region in 0..dataset.atlas.len() {
        for measure in 0..4 {
            let a: Vec<f64> = asd
                .iter()
                .map(|&i| dataset.morphometry[i].values[[region, measure]])
                .collect();
            let b: Vec<f64> = td
                .iter()
                .map(|&i| dataset.morphometry[i].values[[region, measure]])
                .collect();
            let (t, df) = welch_t(&a, &b).unwrap();
            ps.push(t_two_sided_p(t, df).unwrap());
        }
    }
    assert_eq!(ps.len(), 1000);
    let d = ks_distance_from_uniform(&ps);
    println!("KS distance from uniform over 1000 null p-values: {d:.4}");
    assert!(d < 0.05, "KS distance {d} >= 0.05");
}

/// Coupling-only cohort: no marginal signal, strong pairwise signal.
fn mcf_contrast_spec(seed: u64) -> SynthSpec {
    let mut spec = SynthSpec::null_cohort(seed, 150, 150);
    // couple 8 disjoint region pairs at rho = 0.9 in the ASD group
    for k in 0..8 {
        spec.mcf_effects.push(McfEffect {
            region_i: 2 * k,
            region_j: 2 * k + 1,
            coupling: 0.9,
        });
    }
    spec
}

#[test]
fn mcf_effect_leaves_marginal_tests_uninformative() {
    let atlas = Atlas::synthetic(24).unwrap();
    let dataset = cohort_from(&mcf_contrast_spec(31337), atlas);
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let params = fit_standardizer(&dataset, &rows, FitScope::FullCohort).unwrap();
    let tensor = apply_standardizer(&params, &dataset).unwrap();
    let matrix = build_mf(&tensor, &dataset, &params);
    let selection = select_features(&matrix, &dataset.labels(), 0.05).unwrap();
    let fraction = selection.selected_count as f64 / selection.results.len() as f64;
    println!("MF selection fraction under coupling-only effect: {fraction:.4}");
    assert!(
        (0.0..=0.12).contains(&fraction),
        "marginal tests should stay near the 5% false-positive rate, got {fraction}"
    );
}

#[test]
fn mcf_experiment_beats_mf_on_coupled_cohort() {
    let atlas = Atlas::synthetic(24).unwrap();
    let dataset = cohort_from(&mcf_contrast_spec(31337), atlas);
    let band = &default_bands()[2]; // 6to18 holds everyone
    assert_eq!(stratify(&dataset, band).len(), 300);

    let config = ExperimentConfig::with_seed(90210);
    let mf = run_experiment(&dataset, band, FeatureKind::Mf, &config).unwrap();
    let mcf = run_experiment(&dataset, band, FeatureKind::Mcf, &config).unwrap();
    println!(
        "contrast: MF accuracy {:.3}, MCF accuracy {:.3}",
        mf.metrics.accuracy, mcf.metrics.accuracy
    );
    assert!(
        mcf.metrics.accuracy - mf.metrics.accuracy >= 0.10,
        "MCF ({}) must beat MF ({}) by >= 10 points",
        mcf.metrics.accuracy,
        mf.metrics.accuracy
    );
    // the planted pairs dominate the top of the edge ranking
    let edges = mcf.top_edges.as_ref().unwrap();
    assert!(!edges.is_empty());
    let planted: Vec<(String, String)> = (0..8)
        .map(|k| {
            (
                dataset.atlas.region(2 * k).name.clone(),
                dataset.atlas.region(2 * k + 1).name.clone(),
            )
        })
        .collect();
    let top8_hits = edges
        .iter()
        .take(8)
        .filter(|e| planted.contains(&(e.region_i.clone(), e.region_j.clone())))
        .count();
    assert!(top8_hits >= 6, "only {top8_hits}/8 planted pairs in the top 8 edges");
}

#[test]
fn reports_are_deterministic() {
    let atlas = Atlas::synthetic(12).unwrap();
    let mut spec = SynthSpec::null_cohort(77, 40, 40);
    spec.mcf_effects.push(McfEffect {
        region_i: 0,
        region_j: 5,
        coupling: 0.8,
    });
    let dataset = cohort_from(&spec, atlas);
    let band = &default_bands()[2];
    let config = ExperimentConfig::with_seed(1);

    let a = run_experiment(&dataset, band, FeatureKind::Mcf, &config).unwrap();
    let b = run_experiment(&dataset, band, FeatureKind::Mcf, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());

    // a different master seed shifts the derived seeds
    let c = run_experiment(&dataset, band, FeatureKind::Mcf, &ExperimentConfig::with_seed(2)).unwrap();
    assert_ne!(a.seeds.split, c.seeds.split);
    assert_ne!(a.seeds.forest, c.seeds.forest);
}

#[test]
fn experiment_errors_are_stage_tagged() {
    let atlas = Atlas::synthetic(12).unwrap();
    let dataset = cohort_from(&SynthSpec::null_cohort(5, 30, 30), atlas);
    let band = &default_bands()[2];
    // alpha = 0 selects nothing: the select stage must say so
    let config = ExperimentConfig {
        alpha: 0.0,
        ..ExperimentConfig::with_seed(9)
    };
    let err = run_experiment(&dataset, band, FeatureKind::Mf, &config).unwrap_err();
    let message = err.to_string();
    assert!(message.contains("select"), "unexpected message: {message}");
}
