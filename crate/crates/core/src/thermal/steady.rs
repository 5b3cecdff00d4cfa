use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::erfcx::erfcx_scaled;

/// Which closed form `p0_steady_state_with` returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyStateConvention {
    /// Long-time mean of the zeroth order: `1 − (1/2ρ)√(π/2)·erfcx(1/√2ρ)`.
    #[default]
    ZerothOrder,
    /// The complement, `(1/2ρ)√(π/2)·erfcx(1/√2ρ)`: the time-averaged weight
    /// transferred to the first order. Kept for comparison only; it falls
    /// with temperature.
    Transferred,
}

/// Gaussian mean of the Lorentzian `1/(2(1+γ²))`, evaluated without
/// overflow through the scaled complementary error function.
fn transferred_mean(rho: f64) -> f64 {
    0.5 / rho * (0.5 * PI).sqrt() * erfcx_scaled(1.0 / (std::f64::consts::SQRT_2 * rho))
}

/// Long-time average of the finite-temperature zeroth-order population.
///
/// Tends to `1/2` for a cold gas and to `1` for a hot one.
pub fn p0_steady_state(rho: f64) -> f64 {
    p0_steady_state_with(rho, SteadyStateConvention::ZerothOrder)
}

pub fn p0_steady_state_with(rho: f64, convention: SteadyStateConvention) -> f64 {
    match convention {
        SteadyStateConvention::ZerothOrder => 1.0 - transferred_mean(rho),
        SteadyStateConvention::Transferred => transferred_mean(rho),
    }
}
