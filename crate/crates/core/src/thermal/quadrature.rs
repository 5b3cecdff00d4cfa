use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trapezium-rule mesh over the reduced detuning `γ = (β − 1/2)/V_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Odd number of nodes, symmetric about `γ = 0`.
    pub n_points: usize,
    pub half_range_gamma: f64,
}

impl QuadratureConfig {
    pub const DEFAULT_POINTS: usize = 4001;
    /// Gaussian widths kept on each side of the resonance.
    pub const WIDTHS: f64 = 12.0;

    /// Integrates over `±12ρ`, i.e. the whole Gaussian.
    pub fn for_rho(rho: f64) -> Self {
        Self {
            n_points: Self::DEFAULT_POINTS,
            half_range_gamma: Self::WIDTHS * rho,
        }
    }

    /// As [`for_rho`](Self::for_rho) but clipped to the Brillouin zone
    /// `β ∈ [0, 1]`, i.e. `|γ| ≤ 1/(2V_eff)`.
    pub fn for_lattice(rho: f64, v_eff: f64) -> Self {
        Self {
            n_points: Self::DEFAULT_POINTS,
            half_range_gamma: (Self::WIDTHS * rho).min(0.5 / v_eff),
        }
    }

    pub fn with_points(self, n_points: usize) -> Self {
        Self { n_points, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 3 || self.n_points % 2 == 0 {
            return Err(Error::domain(format!(
                "quadrature needs an odd number of points >= 3, got {}",
                self.n_points
            )));
        }
        if !(self.half_range_gamma.is_finite() && self.half_range_gamma > 0.0) {
            return Err(Error::domain("quadrature half range must be positive"));
        }
        Ok(())
    }
}

/// Precomputed nodes of the finite-temperature integral for one `ρ`.
///
/// `P₀(φ) = Σ_j c_j [1 − L_j sin²(a_j φ/2)]` with Gaussian trapezium
/// weights `c_j`, Lorentzian factor `L_j = 1/(1+γ_j²)` and frequency
/// `a_j = √(1+γ_j²)`. Only `γ ≥ 0` is stored; the integrand is even.
#[derive(Debug, Clone)]
pub struct ThermalKernel {
    rho: f64,
    mass: f64,
    lorentz_weights: Vec<f64>,
    freqs: Vec<f64>,
}

impl ThermalKernel {
    pub fn new(rho: f64, config: &QuadratureConfig) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::domain(format!("rho must be positive, got {rho}")));
        }
        config.validate()?;
        let half = config.n_points / 2;
        let h = config.half_range_gamma / half as f64;
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * rho);
        let mut mass = 0.0;
        let mut lorentz_weights = Vec::with_capacity(half + 1);
        let mut freqs = Vec::with_capacity(half + 1);
        for j in 0..=half {
            let g = j as f64 * h;
            let trap = match j {
                0 => h,
                j if j == half => h,
                _ => 2.0 * h,
            };
            let c = trap * norm * (-0.5 * (g / rho).powi(2)).exp();
            let l = 1.0 / (1.0 + g * g);
            mass += c;
            lorentz_weights.push(c * l);
            freqs.push((1.0 + g * g).sqrt());
        }
        Ok(Self {
            rho,
            mass,
            lorentz_weights,
            freqs,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Trapezium estimate of the Gaussian mass inside the range.
    pub fn captured_mass(&self) -> f64 {
        self.mass
    }

    pub fn mass_deficit(&self) -> f64 {
        1.0 - self.mass
    }

    pub fn p0(&self, phi: f64) -> f64 {
        let transferred: f64 = self
            .lorentz_weights
            .iter()
            .zip(&self.freqs)
            .map(|(cl, a)| cl * (0.5 * a * phi).sin().powi(2))
            .sum();
        (self.mass - transferred).clamp(0.0, 1.0)
    }

    /// Long-time mean, `Σ c_j (1 − L_j/2)`.
    pub fn time_averaged_p0(&self) -> f64 {
        self.mass - 0.5 * self.lorentz_weights.iter().sum::<f64>()
    }
}

/// Trapezium-rule evaluation of the finite-temperature zeroth-order
/// population at reduced time `phi` and reduced width `rho`.
///
/// Logs a warning when the configured range misses more than `1e-6` of the
/// Gaussian mass.
pub fn p0_thermal_quadrature(phi: f64, rho: f64, config: &QuadratureConfig) -> Result<f64> {
    let kernel = ThermalKernel::new(rho, config)?;
    if kernel.mass_deficit() > 1e-6 {
        log::warn!(
            "quadrature range ±{} misses {:.2e} of the Gaussian weight at rho = {rho}",
            config.half_range_gamma,
            kernel.mass_deficit()
        );
    }
    Ok(kernel.p0(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twostate::p0_resonant;

    #[test]
    fn zero_time_is_unity() {
        let v = p0_thermal_quadrature(0.0, 0.3, &QuadratureConfig::for_rho(0.3)).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cold_limit_recovers_rabi() {
        let rho = 1e-6;
        let k = ThermalKernel::new(rho, &QuadratureConfig::for_rho(rho)).unwrap();
        for i in 0..40 {
            let phi = i as f64 * 0.37;
            assert!((k.p0(phi) - p0_resonant(1.0, phi)).abs() < 1e-8);
        }
    }

    #[test]
    fn mesh_convergence_of_default_rule() {
        for &rho in &[0.0125, 0.125, 1.25] {
            let cfg = QuadratureConfig::for_rho(rho);
            let a = ThermalKernel::new(rho, &cfg).unwrap();
            let b = ThermalKernel::new(rho, &cfg.with_points(2 * cfg.n_points - 1)).unwrap();
            for i in 0..50 {
                let phi = i as f64 * 0.8;
                assert!((a.p0(phi) - b.p0(phi)).abs() < 1e-9, "rho {rho} phi {phi}");
            }
        }
    }

    #[test]
    fn clipped_range_reports_missing_mass() {
        // w = 0.125 at V_eff = 0.1 spreads past the zone edges at |γ| = 5
        let cfg = QuadratureConfig::for_lattice(1.25, 0.1);
        assert_eq!(cfg.half_range_gamma, 5.0);
        let k = ThermalKernel::new(1.25, &cfg).unwrap();
        assert!(k.mass_deficit() > 1e-6);
        let full = ThermalKernel::new(1.25, &QuadratureConfig::for_rho(1.25)).unwrap();
        assert!(full.mass_deficit().abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ThermalKernel::new(0.1, &QuadratureConfig::for_rho(0.1).with_points(100)).is_err());
        assert!(ThermalKernel::new(0.0, &QuadratureConfig::for_rho(0.1)).is_err());
    }
}
