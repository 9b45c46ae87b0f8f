//! Independent verification oracles used by the test suite.
//!
//! Nothing here is called by the pipeline itself. Each oracle recomputes a
//! result through a deliberately different route than the production code:
//! the t tail probability by adaptive quadrature of the density instead of
//! the incomplete beta function, CART by exhaustive threshold search instead
//! of the sort-based sweep, and class separation by a nearest-centroid rule
//! instead of a forest.

use ndarray::ArrayView2;

/// Adaptive Simpson integration with Richardson correction.
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&|x| f(x), a, b, fa, fm, fb, whole, eps, 50)
}

/// Two-sided t tail probability by quadrature of the (unnormalized) density
/// `g(x) = (1 + x^2/df)^(-(df+1)/2)`:
///
/// ```text
/// p = integral_{|t|}^inf g / integral_0^inf g
/// ```
///
/// The infinite tails are mapped to [0, 1/T] with u = 1/x, whose integrand
/// is evaluated in log space so large df cannot overflow. No gamma function
/// is involved anywhere, which keeps this fully independent of the
/// incomplete-beta route used by the pipeline.
pub fn t_two_sided_p_quadrature(t: f64, df: f64) -> f64 {
    assert!(df >= 1.0, "quadrature oracle requires df >= 1");
    let t = t.abs();
    if t == 0.0 {
        return 1.0;
    }
    let eps = 1e-13;
    let expo = (df + 1.0) / 2.0;
    let g = move |x: f64| (1.0 + x * x / df).powf(-expo);
    // transformed tail integrand: h(u) = g(1/u)/u^2, u in (0, 1/T0]
    let h = move |u: f64| {
        if u == 0.0 {
            // limit: df > 1 -> 0; df = 1 -> 1
            return if df > 1.0 { 0.0 } else { 1.0 };
        }
        let ln = expo * df.ln() + (df - 1.0) * u.ln() - expo * (df * u * u + 1.0).ln();
        ln.exp()
    };
    let tail_from = |lo: f64| {
        let pivot = lo.max(1.0);
        integrate(g, lo, pivot, eps) + integrate(h, 0.0, 1.0 / pivot, eps)
    };
    tail_from(t) / tail_from(0.0)
}

/// Exhaustive-search CART used to cross-check single trees. Same stopping
/// and tie rules as the production tree (min_samples_split = 2,
/// min_samples_leaf = 1, unlimited depth, all features as candidates), but
/// every (feature, threshold) pair is scored by a naive full scan.
#[derive(Debug, Clone, PartialEq)]
pub enum BruteNode {
    Leaf {
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<BruteNode>,
        right: Box<BruteNode>,
    },
}

fn brute_gini(counts: &[usize; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    let p0 = counts[0] as f64 / total;
    let p1 = counts[1] as f64 / total;
    // same association order as the production impurity, so float-level
    // ties resolve identically in both trees
    1.0 - (p0 * p0 + p1 * p1)
}

fn brute_counts(y: &[usize], rows: &[usize]) -> [usize; 2] {
    let mut c = [0usize; 2];
    for &r in rows {
        c[y[r]] += 1;
    }
    c
}

fn brute_grow(x: ArrayView2<f64>, y: &[usize], rows: &[usize]) -> BruteNode {
    let counts = brute_counts(y, rows);
    if counts[0] == 0 || counts[1] == 0 || rows.len() < 2 {
        return BruteNode::Leaf { counts };
    }
    let parent = brute_gini(&counts);

    let mut best: Option<(f64, usize, f64)> = None; // (impurity, feature, threshold)
    for feature in 0..x.ncols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[[r, feature]]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let threshold = w[0] + (w[1] - w[0]) / 2.0;
            let left: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| x[[r, feature]] <= threshold)
                .collect();
            let right: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| x[[r, feature]] > threshold)
                .collect();
            if left.is_empty() || right.is_empty() {
                continue;
            }
            let impurity = (left.len() as f64 * brute_gini(&brute_counts(y, &left))
                + right.len() as f64 * brute_gini(&brute_counts(y, &right)))
                / rows.len() as f64;
            let better = match best {
                None => impurity < parent,
                Some((bi, bf, bt)) => {
                    impurity < bi || (impurity == bi && (feature, threshold) < (bf, bt))
                }
            };
            if better {
                best = Some((impurity, feature, threshold));
            }
        }
    }

    match best {
        None => BruteNode::Leaf { counts },
        Some((_, feature, threshold)) => {
            let left_rows: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| x[[r, feature]] <= threshold)
                .collect();
            let right_rows: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| x[[r, feature]] > threshold)
                .collect();
            BruteNode::Split {
                feature,
                threshold,
                left: Box::new(brute_grow(x, y, &left_rows)),
                right: Box::new(brute_grow(x, y, &right_rows)),
            }
        }
    }
}

/// Fit the brute-force tree on all rows.
pub fn brute_cart(x: ArrayView2<f64>, y: &[usize]) -> BruteNode {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    brute_grow(x, y, &rows)
}

/// Predict with the brute tree. `priors` are the full-training class counts,
/// used for the leaf tie rule (larger prior, then first label).
pub fn brute_predict(node: &BruteNode, row: &[f64], priors: &[usize; 2]) -> usize {
    match node {
        BruteNode::Leaf { counts } => {
            if counts[0] > counts[1] {
                0
            } else if counts[1] > counts[0] {
                1
            } else if priors[1] > priors[0] {
                1
            } else {
                0
            }
        }
        BruteNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if row[*feature] <= *threshold {
                brute_predict(left, row, priors)
            } else {
                brute_predict(right, row, priors)
            }
        }
    }
}

/// Nearest-centroid classifier: the sanity oracle for planted-margin data.
pub struct NearestCentroid {
    centroids: [Vec<f64>; 2],
}

impl NearestCentroid {
    pub fn fit(x: ArrayView2<f64>, y: &[usize]) -> NearestCentroid {
        let p = x.ncols();
        let mut sums = [vec![0.0; p], vec![0.0; p]];
        let mut counts = [0usize; 2];
        for (i, &class) in y.iter().enumerate() {
            counts[class] += 1;
            for j in 0..p {
                sums[class][j] += x[[i, j]];
            }
        }
        for class in 0..2 {
            for v in sums[class].iter_mut() {
                *v /= counts[class].max(1) as f64;
            }
        }
        NearestCentroid { centroids: sums }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let dist = |c: &[f64]| -> f64 {
            c.iter()
                .zip(row)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        if dist(&self.centroids[1]) < dist(&self.centroids[0]) {
            1
        } else {
            0
        }
    }

    pub fn accuracy(&self, x: ArrayView2<f64>, y: &[usize]) -> f64 {
        let correct = (0..x.nrows())
            .filter(|&i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                self.predict(&row) == y[i]
            })
            .count();
        correct as f64 / x.nrows() as f64
    }
}

/// Kolmogorov-Smirnov distance of a sample from the uniform distribution on
/// [0, 1].
pub fn ks_distance_from_uniform(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        let ecdf_before = i as f64 / n;
        let ecdf_after = (i + 1) as f64 / n;
        d = d.max((v - ecdf_before).abs()).max((ecdf_after - v).abs());
    }
    d
}
