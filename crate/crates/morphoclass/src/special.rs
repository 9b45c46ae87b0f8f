//! Special functions backing the t-test p-values.
//!
//! The two-sided tail probability of Student's t distribution reduces to the
//! regularized incomplete beta function:
//!
//! ```text
//! P(|T| >= t) = I_x(df/2, 1/2),   x = df / (df + t^2)
//! ```
//!
//! which is evaluated here with the classic continued-fraction expansion
//! (modified Lentz iteration) and a Lanczos log-gamma. Both are implemented
//! directly so the statistics stack has no opaque numeric dependency; the
//! test suite checks the result against adaptive quadrature of the t density
//! to 1e-9 absolute.

/// Lanczos approximation (g = 7, 9 terms) of ln Γ(x) for x > 0.
///
/// Relative error is below 1e-13 over the range this crate uses
/// (half-integer-ish arguments up to a few hundred).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    const G: f64 = 7.0;
    debug_assert!(x > 0.0);

    if x < 0.5 {
        // Reflection keeps the Lanczos series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }

    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b) with the complement `xc = 1 - x`
/// supplied by the caller. Passing the complement explicitly avoids the
/// cancellation that `1.0 - x` would introduce when x is close to 1.
fn reg_inc_beta_with_complement(a: f64, b: f64, x: f64, xc: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if xc <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * xc.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, xc) / b
    }
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    reg_inc_beta_with_complement(a, b, x, 1.0 - x)
}

/// Two-sided tail probability of Student's t distribution, clamped to (0, 1].
///
/// An infinite statistic (perfect separation in a degenerate test) maps to
/// the smallest positive double rather than 0 so that strict `p < alpha`
/// thresholds still select it.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return f64::MIN_POSITIVE;
    }
    let t2 = t * t;
    // x and its complement computed independently: both are exact ratios.
    let x = df / (df + t2);
    let xc = t2 / (df + t2);
    let p = reg_inc_beta_with_complement(df / 2.0, 0.5, x, xc);
    if p <= 0.0 {
        f64::MIN_POSITIVE
    } else {
        p.min(1.0)
    }
}
