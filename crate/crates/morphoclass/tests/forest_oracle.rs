//! Forest correctness against independent oracles: exhaustive-search CART
//! for single trees, and a nearest-centroid bound for planted-margin data.

use morphoclass::forest::{train_forest, ForestParams, MaxFeatures};
use morphoclass::ingest::Group;
use morphoclass::testing::{brute_cart, brute_predict, NearestCentroid};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Deterministic single tree on all features, no bootstrap.
fn single_tree_params() -> ForestParams {
    ForestParams {
        n_trees: 1,
        max_features: MaxFeatures::All,
        bootstrap: false,
        ..ForestParams::with_seed(0)
    }
}

#[test]
fn single_tree_equals_brute_force_cart() {
    // all small instances: n <= 8 rows, p <= 3 features, values drawn from a
    // coarse grid so duplicated values and impurity ties actually occur
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let mut checked = 0;
    for instance in 0..400 {
        let n = rng.gen_range(2..=8);
        let p = rng.gen_range(1..=3);
        let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(0..5) as f64 * 0.5);
        let classes: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        if classes.iter().all(|&c| c == 0) || classes.iter().all(|&c| c == 1) {
            continue; // single-class draws are rejected by train_forest
        }
        let y: Vec<Group> = classes.iter().map(|&c| Group::LABEL_ORDER[c]).collect();

        let model = train_forest(x.view(), &y, &single_tree_params()).unwrap();
        let brute = brute_cart(x.view(), &classes);
        let mut priors = [0usize; 2];
        for &c in &classes {
            priors[c] += 1;
        }

        // agreement on every training row and on random probe points
        for i in 0..n {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let ours = model.predict(&row).unwrap().label.class_index();
            let theirs = brute_predict(&brute, &row, &priors);
            assert_eq!(ours, theirs, "instance {instance}, training row {i}");
        }
        for _ in 0..20 {
            let row: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.5..3.0)).collect();
            let ours = model.predict(&row).unwrap().label.class_index();
            let theirs = brute_predict(&brute, &row, &priors);
            assert_eq!(ours, theirs, "instance {instance}, probe {row:?}");
        }
        checked += 1;
    }
    assert!(checked > 300, "only {checked} usable instances");
}

#[test]
fn forest_reaches_95_percent_on_planted_3_sigma_margin() {
    // two unit-variance Gaussian clusters whose means differ by 3 sigma on
    // each of 4 informative features (8 noise features): Bayes error is
    // far below 5%, which the nearest-centroid oracle confirms
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let n_train = 200;
    let n_test = 200;
    let p = 12;
    let informative = 4;
    let mut draw = |n: usize| {
        let mut x = Array2::<f64>::zeros((n, p));
        let mut classes = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 2;
            classes.push(class);
            for j in 0..p {
                let noise: f64 = rng.sample(rand_distr::StandardNormal);
                let shift = if j < informative && class == 1 { 3.0 } else { 0.0 };
                x[[i, j]] = noise + shift;
            }
        }
        (x, classes)
    };
    let (x_train, c_train) = draw(n_train);
    let (x_test, c_test) = draw(n_test);
    let y_train: Vec<Group> = c_train.iter().map(|&c| Group::LABEL_ORDER[c]).collect();

    // the margin is real: nearest centroid alone separates the clusters
    let oracle = NearestCentroid::fit(x_train.view(), &c_train);
    let oracle_acc = oracle.accuracy(x_test.view(), &c_test);
    assert!(oracle_acc >= 0.95, "centroid oracle accuracy {oracle_acc}");

    let model = train_forest(x_train.view(), &y_train, &ForestParams::with_seed(42)).unwrap();
    let predictions = model.predict_matrix(x_test.view()).unwrap();
    let correct = predictions
        .iter()
        .zip(&c_test)
        .filter(|(pred, &c)| pred.label.class_index() == c)
        .count();
    let accuracy = correct as f64 / n_test as f64;
    println!("planted-margin forest accuracy: {accuracy:.3} (centroid {oracle_acc:.3})");
    assert!(accuracy >= 0.95, "forest accuracy {accuracy}");
}

#[test]
fn parallel_training_reproduces_serial() {
    // same seed, different rayon pool widths: identical forests
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = Array2::from_shape_fn((60, 8), |_| rng.gen::<f64>());
    let y: Vec<Group> = (0..60).map(|i| Group::LABEL_ORDER[i % 2]).collect();
    let params = ForestParams::with_seed(12345);

    let serial_pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide_pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let serial = serial_pool.install(|| train_forest(x.view(), &y, &params).unwrap());
    let wide = wide_pool.install(|| train_forest(x.view(), &y, &params).unwrap());
    assert_eq!(serial, wide);
}
