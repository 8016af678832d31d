//! F-distribution CDF by direct quadrature, plus the pooled two-sample t.

/// CDF of F(d1, d2) evaluated through the regularized incomplete beta
/// integral I_x(d1/2, d2/2) with x = d1*f / (d1*f + d2).
///
/// The substitution t = u^2 removes the integrable singularity of the
/// integrand at t = 0 when d1 = 1, after which adaptive Simpson quadrature
/// converges quickly. Requires d2 >= 2 so the upper endpoint stays finite.
pub fn f_cdf(f: f64, d1: f64, d2: f64) -> f64 {
    assert!(d1 > 0.0 && d2 >= 2.0, "quadrature oracle needs d1 > 0, d2 >= 2");
    if f <= 0.0 {
        return 0.0;
    }
    let a = d1 / 2.0;
    let b = d2 / 2.0;
    let x = d1 * f / (d1 * f + d2);
    // After t = u^2: integral over [0, sqrt(x)] of 2 u^(2a-1) (1-u^2)^(b-1).
    let integrand = |u: f64| 2.0 * u.powf(2.0 * a - 1.0) * (1.0 - u * u).powf(b - 1.0);
    let upper = x.sqrt();
    let whole = simpson_slice(&integrand, 0.0, upper);
    let integral = adaptive_simpson(&integrand, 0.0, upper, 1e-13, whole, 60);
    (integral / beta(a, b)).clamp(0.0, 1.0)
}

/// Pooled-variance two-sample t statistic.
pub fn pooled_t(a: &[f64], b: &[f64]) -> f64 {
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let ssa: f64 = a.iter().map(|v| (v - ma) * (v - ma)).sum();
    let ssb: f64 = b.iter().map(|v| (v - mb) * (v - mb)).sum();
    let sp2 = (ssa + ssb) / (na + nb - 2.0);
    (ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt()
}

fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-13 for z > 0.
fn ln_gamma(z: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

fn simpson_slice(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b))
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    eps: f64,
    whole: f64,
    depth: u32,
) -> f64 {
    let m = (a + b) / 2.0;
    let left = simpson_slice(f, a, m);
    let right = simpson_slice(f, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, eps / 2.0, left, depth - 1)
        + adaptive_simpson(f, m, b, eps / 2.0, right, depth - 1)
}
