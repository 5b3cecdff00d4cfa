use serde::{Deserialize, Serialize};

use super::mb_weight;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::propagator::{sample_p0, MomentumGrid, PropagatorConfig};

/// Gaussian widths sampled on each side of `β = 1/2`.
const BETA_WIDTHS: f64 = 6.0;

/// Quasimomentum nodes and normalised weights of the brute-force average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleNodes {
    pub betas: Vec<f64>,
    pub weights: Vec<f64>,
    /// Trapezium estimate of the Gaussian mass before normalisation.
    pub raw_mass: f64,
}

/// Uniform grid over `[1/2 − 6w, 1/2 + 6w] ∩ [0, 1]` with trapezium weights
/// times the Maxwell–Boltzmann density, normalised to one.
pub fn ensemble_nodes(w: f64, n_beta: usize) -> Result<EnsembleNodes> {
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::domain(format!("w must be positive, got {w}")));
    }
    if n_beta < 3 || n_beta % 2 == 0 {
        return Err(Error::domain(format!("n_beta must be odd and >= 3, got {n_beta}")));
    }
    let lo = (0.5 - BETA_WIDTHS * w).max(0.0);
    let hi = (0.5 + BETA_WIDTHS * w).min(1.0);
    let h = (hi - lo) / (n_beta - 1) as f64;
    let betas: Vec<f64> = (0..n_beta).map(|j| lo + j as f64 * h).collect();
    let mut weights: Vec<f64> = betas
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let trap = if j == 0 || j == n_beta - 1 { 0.5 * h } else { h };
            trap * mb_weight(b, w)
        })
        .collect();
    let raw_mass: f64 = weights.iter().sum();
    for c in &mut weights {
        *c /= raw_mass;
    }
    Ok(EnsembleNodes {
        betas,
        weights,
        raw_mass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries {
    pub taus: Vec<f64>,
    pub p0: Vec<f64>,
    pub n_beta: usize,
    pub raw_mass: f64,
    pub max_edge_population: f64,
    pub edge_warning: bool,
    pub max_norm_drift: f64,
    /// False if any member failed its substep-doubling check.
    pub converged: bool,
}

/// Weighted average of the full-lattice `P₀(β, τ)` over the thermal
/// distribution. Members are independent and run through `exec`; the
/// reduction happens afterwards in node order.
pub fn p0_thermal_ensemble(
    v_eff: f64,
    w: f64,
    taus: &[f64],
    grid: MomentumGrid,
    n_beta: usize,
    config: &PropagatorConfig,
    exec: Execution,
) -> Result<EnsembleSeries> {
    let nodes = ensemble_nodes(w, n_beta)?;
    let runs = exec.map(&nodes.betas, |&beta| sample_p0(grid, 0, beta, v_eff, taus, config));
    let mut p0 = vec![0.0; taus.len()];
    let mut out = EnsembleSeries {
        taus: taus.to_vec(),
        p0: Vec::new(),
        n_beta,
        raw_mass: nodes.raw_mass,
        max_edge_population: 0.0,
        edge_warning: false,
        max_norm_drift: 0.0,
        converged: true,
    };
    for (run, &c) in runs.into_iter().zip(&nodes.weights) {
        let (series, diag) = run?;
        for (acc, p) in p0.iter_mut().zip(series) {
            *acc += c * p;
        }
        out.max_edge_population = out.max_edge_population.max(diag.max_edge_population);
        out.edge_warning |= diag.edge_warning;
        out.max_norm_drift = out.max_norm_drift.max(diag.norm_drift);
        out.converged &= diag.is_converged();
    }
    out.p0 = p0;
    Ok(out)
}
