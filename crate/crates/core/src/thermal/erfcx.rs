use std::f64::consts::PI;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SERIES_LIMIT: f64 = 2.0;

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Below `x = 2` the positive-term series for `exp(x²)·erf(x)` is subtracted
/// from `exp(x²)`; above it the Laplace continued fraction is evaluated with
/// the modified Lentz algorithm. Negative arguments use the reflection
/// `erfcx(−x) = 2exp(x²) − erfcx(x)`.
pub fn erfcx_scaled(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx_scaled(-x);
    }
    if x < SERIES_LIMIT {
        (x * x).exp() - scaled_erf_series(x)
    } else if x.is_infinite() {
        0.0
    } else {
        continued_fraction(x)
    }
}

/// `exp(x²)·erf(x) = (2/√π) Σ 2ⁿ x^{2n+1} / (2n+1)!!`.
fn scaled_erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// `erfcx(x) = 1 / (√π (x + (1/2)/(x + 1/(x + (3/2)/(x + …)))))`.
fn continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for j in 1..5000 {
        let a = 0.5 * j as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (PI.sqrt() * f)
}
