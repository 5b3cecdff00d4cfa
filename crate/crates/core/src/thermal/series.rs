use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SeriesFailure};

/// Power-series coefficients of the thermal transfer `P₋₁ = Σ_s Σ_{q≤s} u_s M_{s,q} v_q`.
///
/// `u_s(φ) = (−φ²)^{s+1} s!/(2s+2)!`, `M_{s,q} = −(2q)!/(2 q!² (s−q)!)`,
/// `v_q(ρ) = (ρ²/2)^q`. `m[s]` holds the row `q = 0..=s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTables {
    pub u: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub truncation_s: usize,
}

impl SeriesTables {
    pub fn new(phi: f64, rho: f64, truncation_s: usize) -> Self {
        let mut rows = RowGenerator::new(phi, rho);
        let mut u = Vec::with_capacity(truncation_s + 1);
        let mut m = Vec::with_capacity(truncation_s + 1);
        for _ in 0..=truncation_s {
            let (us, row) = rows.next_tables();
            u.push(us);
            m.push(row);
        }
        let v = rows.v.clone();
        Self {
            u,
            m,
            v,
            truncation_s,
        }
    }

    /// `Σ_q M_{s,q} v_q` for each row, times `u_s`.
    pub fn row_sums(&self) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.m)
            .map(|(us, row)| us * row.iter().zip(&self.v).map(|(m, v)| m * v).sum::<f64>())
            .collect()
    }
}

/// Builds rows of the double sum incrementally.
struct RowGenerator {
    phi2: f64,
    rho2_half: f64,
    s: usize,
    u: f64,
    central: Vec<f64>,
    inv_fact: Vec<f64>,
    v: Vec<f64>,
}

impl RowGenerator {
    fn new(phi: f64, rho: f64) -> Self {
        Self {
            phi2: phi * phi,
            rho2_half: 0.5 * rho * rho,
            s: 0,
            u: f64::NAN,
            central: Vec::new(),
            inv_fact: Vec::new(),
            v: Vec::new(),
        }
    }

    fn advance(&mut self) {
        let s = self.s;
        if s == 0 {
            self.u = -0.5 * self.phi2;
            self.central.push(1.0);
            self.inv_fact.push(1.0);
            self.v.push(1.0);
        } else {
            let sf = s as f64;
            self.u *= -self.phi2 * sf / ((2.0 * sf + 1.0) * (2.0 * sf + 2.0));
            let c = self.central[s - 1] * (2.0 * sf) * (2.0 * sf - 1.0) / (sf * sf);
            self.central.push(c);
            self.inv_fact.push(self.inv_fact[s - 1] / sf);
            self.v.push(self.v[s - 1] * self.rho2_half);
        }
        self.s += 1;
    }

    fn next_tables(&mut self) -> (f64, Vec<f64>) {
        self.advance();
        let s = self.s - 1;
        let row = (0..=s)
            .map(|q| -0.5 * self.central[q] * self.inv_fact[s - q])
            .collect();
        (self.u, row)
    }

    fn next_row_sum(&mut self) -> f64 {
        self.advance();
        let s = self.s - 1;
        let inner: f64 = (0..=s)
            .map(|q| -0.5 * self.central[q] * self.inv_fact[s - q] * self.v[q])
            .sum();
        self.u * inner
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEvaluation {
    pub value: f64,
    pub rows_used: usize,
    /// Rounding-error estimate from the largest row.
    pub error_estimate: f64,
}

const RELATIVE_STOP: f64 = 1e-14;
const GROWTH_START: usize = 10;
const GROWTH_RUN: usize = 8;
const MAX_ROUNDING: f64 = 1e-9;

/// Zeroth-order population from the double power series.
///
/// Stops at the first decreasing row below `1e-14` of the partial sum.
/// Reports non-convergence when rows grow for eight consecutive `s` past
/// `s = 10`, when the largest row makes rounding exceed `1e-9`, or when
/// `max_s` rows are exhausted.
pub fn p0_thermal_series(phi: f64, rho: f64, max_s: usize) -> Result<SeriesEvaluation> {
    if !(phi.is_finite() && rho.is_finite() && rho >= 0.0) {
        return Err(Error::domain(format!("invalid series arguments phi={phi}, rho={rho}")));
    }
    let mut rows = RowGenerator::new(phi, rho);
    let mut partial = 0.0;
    let mut previous = f64::INFINITY;
    let mut largest = 0.0f64;
    let mut growth = 0;
    let fail = |reason, terms, partial_sum: f64| Error::SeriesNonConvergence {
        reason,
        terms,
        partial_sum: 1.0 - partial_sum,
    };
    for s in 0..=max_s {
        let r = rows.next_row_sum();
        if !r.is_finite() {
            return Err(fail(SeriesFailure::Divergent, s, partial));
        }
        partial += r;
        let size = r.abs();
        largest = largest.max(size);
        if size > previous && s > GROWTH_START {
            growth += 1;
            if growth >= GROWTH_RUN {
                return Err(fail(SeriesFailure::Divergent, s + 1, partial));
            }
        } else {
            growth = 0;
        }
        let decreasing = size < previous || size == 0.0;
        previous = size;
        if decreasing && size <= RELATIVE_STOP * partial.abs() {
            let error_estimate = largest * (s + 1) as f64 * f64::EPSILON;
            if error_estimate > MAX_ROUNDING {
                return Err(fail(SeriesFailure::Cancellation, s + 1, partial));
            }
            return Ok(SeriesEvaluation {
                value: 1.0 - partial,
                rows_used: s + 1,
                error_estimate,
            });
        }
    }
    Err(fail(SeriesFailure::Exhausted, max_s + 1, partial))
}
