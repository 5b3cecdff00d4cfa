use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::measurement::MeasurementSet;
use super::optimize::brent_minimize;
use crate::error::{Error, Result};

/// Whole periods the time average must cover.
pub const MIN_PERIODS: usize = 2;
/// Spectral peak must exceed this multiple of the median power.
const PEAK_TO_FLOOR: f64 = 3.0;
/// Frequency oversampling of the periodogram relative to `2π/span`.
const OVERSAMPLE: f64 = 4.0;
const MAX_FREQUENCIES: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominantFrequency {
    /// Angular frequency in units of `1/τ`.
    pub omega: f64,
    pub peak_power: f64,
    pub noise_floor: f64,
}

/// Dominant angular frequency of the mean-removed series, from the largest
/// peak of a direct (non-uniform) periodogram refined by a least-squares
/// sinusoid fit. `None` when no peak clears three times the median power.
pub fn dominant_frequency(taus: &[f64], values: &[f64]) -> Option<DominantFrequency> {
    let n = taus.len();
    if n < 4 {
        return None;
    }
    let span = taus[n - 1] - taus[0];
    let mean = values.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let variance = centred.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(span > 0.0) || variance < 1e-24 {
        return None;
    }
    let mut gaps: Vec<f64> = taus.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let nyquist = PI / gaps[gaps.len() / 2];
    let step = 2.0 * PI / (OVERSAMPLE * span);
    let count = ((nyquist / step) as usize).clamp(8, MAX_FREQUENCIES);

    let power = |omega: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in taus.iter().zip(&centred) {
            let (s, c) = (omega * (t - taus[0])).sin_cos();
            re += v * c;
            im += v * s;
        }
        (re * re + im * im) / n as f64
    };
    let spectrum: Vec<f64> = (1..=count).map(|m| power(m as f64 * step)).collect();
    let (best, &peak) = spectrum
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let mut sorted = spectrum.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    if !(peak > PEAK_TO_FLOOR * floor) {
        return None;
    }
    let coarse = (best + 1) as f64 * step;
    let refined = brent_minimize(
        |omega| sinusoid_sse(taus, values, omega),
        (coarse - step).max(0.5 * step),
        coarse + step,
        1e-12,
        200,
    )
    .map(|m| m.x)
    .unwrap_or(coarse);
    Some(DominantFrequency {
        omega: refined,
        peak_power: peak,
        noise_floor: floor,
    })
}

/// Residual of the best fit `a + b cos ωτ + c sin ωτ`.
fn sinusoid_sse(taus: &[f64], values: &[f64], omega: f64) -> f64 {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let rows: Vec<Vector3<f64>> = taus
        .iter()
        .map(|t| {
            let (s, c) = (omega * (t - taus[0])).sin_cos();
            Vector3::new(1.0, c, s)
        })
        .collect();
    for (row, v) in rows.iter().zip(values) {
        ata += row * row.transpose();
        atb += row * *v;
    }
    let Some(coef) = ata.lu().solve(&atb) else {
        return f64::INFINITY;
    };
    rows.iter()
        .zip(values)
        .map(|(row, v)| (row.dot(&coef) - v).powi(2))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateEstimate {
    pub p_ss: f64,
    pub sigma: f64,
    /// Dominant angular frequency, if one was found.
    pub omega: Option<f64>,
    /// Number of whole periods averaged over.
    pub periods: usize,
    /// Change in `p_ss` when one period fewer is averaged.
    pub period_sensitivity: Option<f64>,
    /// No spectral peak: plain mean with a widened error bar.
    pub fallback: bool,
}

/// Time average of the trapezium interpolant over `[start, end]`, with the
/// weight each sample receives.
fn window_average(taus: &[f64], values: &[f64], start: f64) -> (f64, Vec<f64>) {
    let n = taus.len();
    let end = taus[n - 1];
    let mut weights = vec![0.0; n];
    for i in 0..n - 1 {
        let (t0, t1) = (taus[i], taus[i + 1]);
        if t1 <= start {
            continue;
        }
        let a = t0.max(start);
        let len = t1 - t0;
        // linear interpolant on [a, t1]: weights of the two end samples
        let fa0 = (t1 - a) / len;
        let fa1 = (a - t0) / len;
        let seg = t1 - a;
        weights[i] += 0.5 * seg * fa0;
        weights[i + 1] += 0.5 * seg * (fa1 + 1.0);
    }
    let total = end - start;
    for c in &mut weights {
        *c /= total;
    }
    let avg = weights.iter().zip(values).map(|(c, v)| c * v).sum();
    (avg, weights)
}

/// Mean of `P₀` over the last whole number of dominant periods.
///
/// Needs at least two periods inside the data span; otherwise reports the
/// minimum duration required. Without a clear spectral peak the whole-series
/// mean is returned with the sample scatter as its error.
pub fn estimate_steady_state(data: &MeasurementSet) -> Result<SteadyStateEstimate> {
    if data.len() < 2 {
        return Err(Error::Measurement("need at least two samples".into()));
    }
    let taus = data.taus();
    let p = data.p0s();
    let sig = data.sigmas();
    let n = taus.len();
    let Some(freq) = dominant_frequency(&taus, &p) else {
        let mean = p.iter().sum::<f64>() / n as f64;
        let scatter = (p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let rms_sigma = (sig.iter().map(|s| s * s).sum::<f64>() / n as f64).sqrt();
        log::warn!("no dominant oscillation found; using the whole-series mean");
        return Ok(SteadyStateEstimate {
            p_ss: mean,
            sigma: scatter.max(rms_sigma),
            omega: None,
            periods: 0,
            period_sensitivity: None,
            fallback: true,
        });
    };
    let period = 2.0 * PI / freq.omega;
    let span = taus[n - 1] - taus[0];
    let covered = span / period;
    let whole = (covered + 1e-9).floor() as usize;
    if whole < MIN_PERIODS {
        return Err(Error::InsufficientSpan {
            span,
            periods: covered,
            required: MIN_PERIODS,
            minimum_duration: MIN_PERIODS as f64 * period,
        });
    }
    let end = taus[n - 1];
    let start = (end - whole as f64 * period).max(taus[0]);
    let (p_ss, weights) = window_average(&taus, &p, start);
    let sigma = weights
        .iter()
        .zip(&sig)
        .map(|(c, s)| (c * s).powi(2))
        .sum::<f64>()
        .sqrt();
    let period_sensitivity = (whole > MIN_PERIODS).then(|| {
        let (shorter, _) = window_average(&taus, &p, end - (whole - 1) as f64 * period);
        (shorter - p_ss).abs()
    });
    Ok(SteadyStateEstimate {
        p_ss,
        sigma,
        omega: Some(freq.omega),
        periods: whole,
        period_sensitivity,
        fallback: false,
    })
}
