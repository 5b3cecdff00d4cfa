use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::propagator::{MomentumGrid, PropagatorConfig};
use crate::thermal::{p0_thermal_ensemble, QuadratureConfig, ThermalKernel};
use crate::units::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TimeKind {
    /// Sample times are already `τ`.
    Dimensionless,
    /// Sample times are seconds, converted with the given parameters.
    Physical { params: PhysicalParams },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub p0: f64,
    pub sigma: f64,
}

/// Zeroth-order populations with standard errors at increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    samples: Vec<Sample>,
    time_kind: TimeKind,
}

impl MeasurementSet {
    pub fn new(samples: Vec<Sample>, time_kind: TimeKind) -> Result<Self> {
        if let TimeKind::Physical { params } = &time_kind {
            params.validate()?;
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.time.is_finite() && (0.0..=1.0).contains(&s.p0)) {
                return Err(Error::Measurement(format!(
                    "sample {i}: need finite time and p0 in [0, 1], got ({}, {})",
                    s.time, s.p0
                )));
            }
            if !(s.sigma.is_finite() && s.sigma > 0.0) {
                return Err(Error::Measurement(format!("sample {i}: sigma must be positive, got {}", s.sigma)));
            }
            if i > 0 && s.time <= samples[i - 1].time {
                return Err(Error::Measurement(format!("sample {i}: times must be strictly increasing")));
            }
        }
        Ok(Self { samples, time_kind })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn time_kind(&self) -> &TimeKind {
        &self.time_kind
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample times in units of `τ`.
    pub fn taus(&self) -> Vec<f64> {
        let scale = match &self.time_kind {
            TimeKind::Dimensionless => 1.0,
            TimeKind::Physical { params } => params.time_scale(),
        };
        self.samples.iter().map(|s| s.time * scale).collect()
    }

    pub fn p0s(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.p0).collect()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.sigma).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Normal noise of standard deviation `scale`, clamped to `[0, 1]`.
    GaussianAdditive,
    /// Binomial counting over `scale` atoms.
    AtomShotNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub scale: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn gaussian(scale: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::GaussianAdditive,
            scale,
            seed,
        }
    }

    pub fn shot_noise(atoms: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::AtomShotNoise,
            scale: atoms,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::domain(format!("noise scale must be positive, got {}", self.scale)));
        }
        if self.kind == NoiseKind::AtomShotNoise && (self.scale < 1.0 || self.scale > u64::MAX as f64) {
            return Err(Error::domain(format!("atom number must be at least 1, got {}", self.scale)));
        }
        Ok(())
    }

    /// Perturbs `clean` in place and returns the standard errors to report.
    fn apply(&self, clean: &mut [f64]) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.kind {
            NoiseKind::GaussianAdditive => {
                let normal = Normal::new(0.0, self.scale).map_err(|e| Error::domain(e.to_string()))?;
                for p in clean.iter_mut() {
                    *p = (*p + normal.sample(&mut rng)).clamp(0.0, 1.0);
                }
                Ok(vec![self.scale; clean.len()])
            }
            NoiseKind::AtomShotNoise => {
                let n = self.scale.round();
                let mut sigmas = Vec::with_capacity(clean.len());
                for p in clean.iter_mut() {
                    let binom = Binomial::new(n as u64, p.clamp(0.0, 1.0))
                        .map_err(|e| Error::domain(e.to_string()))?;
                    *p = binom.sample(&mut rng) as f64 / n;
                    // never report zero error, even for an empty or full order
                    sigmas.push((*p * (1.0 - *p)).max(1.0 / n).sqrt() / n.sqrt());
                }
                Ok(sigmas)
            }
        }
    }
}

/// Model used to generate clean populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Engine {
    /// Two-state thermal quadrature over the full Gaussian.
    Quadrature,
    /// Brute-force ensemble of full-lattice propagations.
    Ensemble {
        n_states: usize,
        n_beta: usize,
        propagator: PropagatorConfig,
        execution: Execution,
    },
}

/// Clean zeroth-order populations from `engine` at dimensionless times.
pub fn engine_p0(v_eff: f64, w: f64, taus: &[f64], engine: &Engine) -> Result<Vec<f64>> {
    if !(v_eff.is_finite() && v_eff > 0.0) {
        return Err(Error::domain(format!("v_eff must be positive, got {v_eff}")));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::domain(format!("w must be positive, got {w}")));
    }
    match *engine {
        Engine::Quadrature => {
            let rho = w / v_eff;
            let kernel = ThermalKernel::new(rho, &QuadratureConfig::for_rho(rho))?;
            Ok(taus.iter().map(|&t| kernel.p0(v_eff * t)).collect())
        }
        Engine::Ensemble {
            n_states,
            n_beta,
            ref propagator,
            execution,
        } => {
            let grid = MomentumGrid::new(n_states)?;
            let e = p0_thermal_ensemble(v_eff, w, taus, grid, n_beta, propagator, execution)?;
            Ok(e.p0)
        }
    }
}

/// Synthetic measurement at dimensionless times `taus`.
pub fn synth_measurements(
    v_eff: f64,
    w: f64,
    taus: &[f64],
    noise: &NoiseModel,
    engine: &Engine,
) -> Result<MeasurementSet> {
    let mut p0 = engine_p0(v_eff, w, taus, engine)?;
    let sigmas = noise.apply(&mut p0)?;
    let samples = taus
        .iter()
        .zip(p0)
        .zip(sigmas)
        .map(|((&time, p0), sigma)| Sample { time, p0, sigma })
        .collect();
    MeasurementSet::new(samples, TimeKind::Dimensionless)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_taus(n: usize, span: f64) -> Vec<f64> {
        (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn vanishing_noise_returns_engine_output() {
        let taus = grid_taus(50, 200.0);
        let clean = engine_p0(0.1, 0.0125, &taus, &Engine::Quadrature).unwrap();
        let m = synth_measurements(0.1, 0.0125, &taus, &NoiseModel::gaussian(1e-15, 3), &Engine::Quadrature)
            .unwrap();
        for (a, b) in m.p0s().iter().zip(&clean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let taus = grid_taus(80, 150.0);
        for noise in [NoiseModel::gaussian(0.01, 11), NoiseModel::shot_noise(500.0, 11)] {
            let a = synth_measurements(0.1, 0.0125, &taus, &noise, &Engine::Quadrature).unwrap();
            let b = synth_measurements(0.1, 0.0125, &taus, &noise, &Engine::Quadrature).unwrap();
            assert_eq!(a, b);
            let c = synth_measurements(0.1, 0.0125, &taus, &NoiseModel { seed: 12, ..noise }, &Engine::Quadrature)
                .unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn shot_noise_has_binomial_spread() {
        let noise = NoiseModel::shot_noise(1e4, 5);
        let mut clean = vec![0.5; 100_000];
        let sigmas = noise.apply(&mut clean).unwrap();
        let mean = clean.iter().sum::<f64>() / clean.len() as f64;
        let var = clean.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (clean.len() - 1) as f64;
        assert!((mean - 0.5).abs() < 1e-4);
        assert!((var.sqrt() - 0.005).abs() < 5e-5, "{}", var.sqrt());
        assert!((sigmas[0] - 0.005).abs() < 5e-4);
    }

    #[test]
    fn physical_times_are_rescaled() {
        let params = PhysicalParams::new(2.0, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let samples = vec![
            Sample { time: 1.0, p0: 0.9, sigma: 0.01 },
            Sample { time: 2.0, p0: 0.8, sigma: 0.01 },
        ];
        let m = MeasurementSet::new(samples, TimeKind::Physical { params }).unwrap();
        assert_eq!(m.taus(), vec![params.time_scale(), 2.0 * params.time_scale()]);
    }

    #[test]
    fn rejects_invalid_samples() {
        let bad_order = vec![
            Sample { time: 2.0, p0: 0.9, sigma: 0.01 },
            Sample { time: 1.0, p0: 0.8, sigma: 0.01 },
        ];
        assert!(MeasurementSet::new(bad_order, TimeKind::Dimensionless).is_err());
        let bad_p = vec![Sample { time: 0.0, p0: 1.2, sigma: 0.01 }];
        assert!(MeasurementSet::new(bad_p, TimeKind::Dimensionless).is_err());
        let bad_sigma = vec![Sample { time: 0.0, p0: 0.5, sigma: 0.0 }];
        assert!(MeasurementSet::new(bad_sigma, TimeKind::Dimensionless).is_err());
        assert!(NoiseModel::gaussian(0.0, 1).validate().is_err());
    }
}
