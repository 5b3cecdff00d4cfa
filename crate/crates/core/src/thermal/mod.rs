//! Finite-temperature response of the zeroth diffraction order.
//!
//! The gas is a Gaussian in quasimomentum of width `w` around the resonant
//! `β = 1/2`. In the two-state picture everything depends on the reduced
//! temperature `ρ = w/V_eff` and the reduced time `φ = V_eff τ`.

mod ensemble;
mod erfcx;
mod quadrature;
mod series;
mod sinc;
mod steady;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ensemble::{ensemble_nodes, p0_thermal_ensemble, EnsembleNodes, EnsembleSeries};
pub use erfcx::erfcx_scaled;
pub use quadrature::{p0_thermal_quadrature, QuadratureConfig, ThermalKernel};
pub use series::{p0_thermal_series, SeriesEvaluation, SeriesTables};
pub use sinc::{p0_thermal_sinc_partial, sinc_derivative_term};
pub use steady::{p0_steady_state, p0_steady_state_with, SteadyStateConvention};

/// Widths above this spill over half of the neighbouring Brillouin zones.
pub const MAX_NARROW_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub w: f64,
    pub rho: f64,
    pub phi: f64,
}

impl ThermalParams {
    pub fn new(v_eff: f64, w: f64, tau: f64) -> Result<Self> {
        if !(v_eff.is_finite() && v_eff > 0.0) {
            return Err(Error::domain(format!("v_eff must be positive, got {v_eff}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::domain(format!("w must be positive, got {w}")));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::domain(format!("tau must be non-negative, got {tau}")));
        }
        if w > MAX_NARROW_WIDTH {
            log::warn!(
                "w = {w} exceeds {MAX_NARROW_WIDTH}: the distribution is no longer confined to half of each zone"
            );
        }
        Ok(Self {
            w,
            rho: w / v_eff,
            phi: v_eff * tau,
        })
    }
}

/// Maxwell–Boltzmann density in quasimomentum, centred on `β = 1/2`.
pub fn mb_weight(beta: f64, w: f64) -> f64 {
    let d = (beta - 0.5) / w;
    (-0.5 * d * d).exp() / (w * (2.0 * std::f64::consts::PI).sqrt())
}
