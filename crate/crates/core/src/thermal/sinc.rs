/// `(φ/2)^{2(q+1)} [(2/φ) d/d(φ/2)]^q [sin²(φ/2)/(φ/2)²]`.
///
/// With `x = φ/2` the operator is `(1/x d/dx)^q = 2^q d^q/d(x²)^q`. Small
/// `x` sums the power series in `x²` term by term; large `x` applies the
/// operator exactly to the Laurent–trigonometric form
/// `P(1/x) + A(1/x) cos 2x + B(1/x) sin 2x`.
pub fn sinc_derivative_term(phi: f64, q: usize) -> f64 {
    let x = 0.5 * phi.abs();
    if x == 0.0 {
        return 0.0;
    }
    if x <= 4.0 + q as f64 {
        series_branch(x, q)
    } else {
        closed_branch(x, q)
    }
}

fn series_branch(x: f64, q: usize) -> f64 {
    let t = x * x;
    let qf = q as f64;
    // leading coefficient c_{q+1} = (−1)^q 2^q 4^{q+1} q! / (2 (2q+2)!) · t^{q+1}
    let mut c = t;
    for j in 1..=q {
        let jf = j as f64;
        c *= -8.0 * jf * t / ((2.0 * jf + 1.0) * (2.0 * jf + 2.0));
    }
    let mut sum = c;
    let mut s = qf + 1.0;
    let mut prev = c.abs();
    loop {
        c *= -4.0 * t * s / ((2.0 * s + 1.0) * (2.0 * s + 2.0) * (s - qf));
        s += 1.0;
        sum += c;
        let size = c.abs();
        if size < prev && size <= 1e-17 * sum.abs() {
            break;
        }
        prev = size;
    }
    sum
}

fn closed_branch(x: f64, q: usize) -> f64 {
    let len = 2 * q + 3;
    let mut p = vec![0.0; len];
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    p[2] = 0.5;
    a[2] = -0.5;
    for _ in 0..q {
        let mut np = vec![0.0; len];
        let mut na = vec![0.0; len];
        let mut nb = vec![0.0; len];
        for m in 0..len - 2 {
            let mf = m as f64;
            np[m + 2] -= mf * p[m];
            na[m + 2] -= mf * a[m];
            nb[m + 1] -= 2.0 * a[m];
            nb[m + 2] -= mf * b[m];
            na[m + 1] += 2.0 * b[m];
        }
        p = np;
        a = na;
        b = nb;
    }
    // multiply by x^{2q+2}: coefficient of x^{-m} becomes x^{2q+2-m}
    let top = 2 * q + 2;
    let eval = |coeffs: &[f64]| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| c * x.powi(top as i32 - m as i32))
            .sum()
    };
    let (s2, c2) = (2.0 * x).sin_cos();
    eval(&p) + c2 * eval(&a) + s2 * eval(&b)
}

/// Partial sum over `q < n_terms` of the sinc-derivative expansion,
/// `1 − Σ_q (ρ/2)^{2q} (2q)!/q!² T_q(φ)`.
pub fn p0_thermal_sinc_partial(phi: f64, rho: f64, n_terms: usize) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for q in 0..n_terms {
        if q > 0 {
            let qf = q as f64;
            weight *= rho * rho * (2.0 * qf - 1.0) / (2.0 * qf);
        }
        total += weight * sinc_derivative_term(phi, q);
    }
    1.0 - total
}
