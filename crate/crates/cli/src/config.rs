//! Run configuration, read from TOML.
//!
//! Every section is optional and falls back to the defaults below, so an
//! empty file (or no file) is a valid configuration. `config_version` must
//! match [`CONFIG_VERSION`].

use std::fmt;
use std::path::{Path, PathBuf};

use latdepth::fit::FitOptions;
use latdepth::propagator::{MomentumGrid, PropagatorConfig};
use latdepth::thermal::QuadratureConfig;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Invalid or unreadable configuration; mapped to its own exit status.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// `count` evenly spaced points on `[start, stop]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linspace {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Linspace {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => {
                let h = (self.stop - self.start) / (n - 1) as f64;
                (0..n).map(|i| self.start + i as f64 * h).collect()
            }
        }
    }

    fn validate(&self, what: &str) -> anyhow::Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(bad(format!("{what}: bounds must be finite")));
        }
        if self.count > 1 && self.stop < self.start {
            return Err(bad(format!("{what}: stop must not be below start")));
        }
        Ok(())
    }

    fn validate_times(&self, what: &str) -> anyhow::Result<()> {
        self.validate(what)?;
        if self.count > 0 && self.start < 0.0 {
            return Err(bad(format!("{what}: times must be non-negative")));
        }
        Ok(())
    }
}

fn check_positive(what: &str, values: &[f64]) -> anyhow::Result<()> {
    if values.is_empty() {
        return Err(bad(format!("{what}: need at least one value")));
    }
    for &v in values {
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(format!("{what}: values must be positive, got {v}")));
        }
    }
    Ok(())
}

fn check_grid(n_states: usize) -> anyhow::Result<()> {
    MomentumGrid::new(n_states).map_err(|e| bad(format!("n_states: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub v_eff: Vec<f64>,
    pub beta: f64,
    pub n_states: usize,
    pub tau: Linspace,
    /// Ladder sites whose populations are written, relative to the initial one.
    pub orders: Vec<i64>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            v_eff: vec![0.07, 0.10, 0.13],
            beta: 0.5,
            n_states: MomentumGrid::DEFAULT_STATES,
            tau: Linspace {
                start: 0.0,
                stop: 30.0 * std::f64::consts::TAU,
                count: 1201,
            },
            orders: vec![-1, 0, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetascanConfig {
    pub v_eff: f64,
    pub beta: Linspace,
    /// Explicit quasimomenta; replaces the `beta` range when non-empty.
    pub slices: Vec<f64>,
    pub n_states: usize,
    pub tau: Linspace,
}

impl Default for BetascanConfig {
    fn default() -> Self {
        Self {
            v_eff: 0.1,
            beta: Linspace {
                start: -0.5,
                stop: 0.5,
                count: 4001,
            },
            slices: Vec::new(),
            n_states: MomentumGrid::DEFAULT_STATES,
            tau: Linspace {
                start: 0.0,
                stop: 40.0 * std::f64::consts::TAU,
                count: 401,
            },
        }
    }
}

impl BetascanConfig {
    pub fn betas(&self) -> Vec<f64> {
        if self.slices.is_empty() {
            self.beta.points()
        } else {
            self.slices.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalConfig {
    pub v_eff: Vec<f64>,
    pub w: Vec<f64>,
    /// Reduced-time axis `φ = V_eff τ`.
    pub phi: Linspace,
    /// Also run the brute-force ensemble of full-lattice propagations.
    pub ensemble: bool,
    pub n_beta: usize,
    pub n_states: usize,
    pub quadrature_points: usize,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self {
            v_eff: vec![0.1, 0.2, 0.5],
            w: vec![0.00125, 0.0125, 0.125],
            phi: Linspace {
                start: 0.0,
                stop: 4.0 * std::f64::consts::PI,
                count: 201,
            },
            ensemble: true,
            n_beta: 4001,
            n_states: MomentumGrid::DEFAULT_STATES,
            quadrature_points: QuadratureConfig::DEFAULT_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyConfig {
    pub rho: Vec<f64>,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self {
            rho: vec![0.0125, 0.125, 1.25],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Quadrature,
    Ensemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKindConfig {
    Gaussian,
    ShotNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub v_eff: f64,
    pub w: f64,
    pub tau: Linspace,
    pub noise: NoiseKindConfig,
    /// Standard deviation for gaussian noise, atom number for shot noise.
    pub noise_scale: f64,
    pub engine: EngineKind,
    pub n_beta: usize,
    pub n_states: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            v_eff: 0.1,
            w: 0.0125,
            tau: Linspace {
                start: 0.0,
                stop: 3.0 * std::f64::consts::TAU / 0.1,
                count: 200,
            },
            noise: NoiseKindConfig::Gaussian,
            noise_scale: 0.01,
            engine: EngineKind::Quadrature,
            n_beta: 1001,
            n_states: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    TwoStage,
    Joint,
    Depth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// CSV with `tau`, `p0` and `sigma` columns, as written by `synth`.
    /// Relative paths resolve against the config file's directory.
    pub data: Option<PathBuf>,
    pub mode: FitMode,
    /// Reduced temperature for `depth`, starting value for `joint`.
    pub rho: Option<f64>,
    pub options: FitOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            data: None,
            mode: FitMode::TwoStage,
            rho: None,
            options: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    pub seed: u64,
    pub propagator: PropagatorConfig,
    pub evolve: EvolveConfig,
    pub betascan: BetascanConfig,
    pub thermal: ThermalConfig,
    pub steady: SteadyConfig,
    pub synth: SynthConfig,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            config_version: CONFIG_VERSION,
            seed: 0,
            propagator: PropagatorConfig::default(),
            evolve: EvolveConfig::default(),
            betascan: BetascanConfig::default(),
            thermal: ThermalConfig::default(),
            steady: SteadyConfig::default(),
            synth: SynthConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(data), Some(dir)) = (&cfg.fit.data, path.parent()) {
            if data.is_relative() {
                cfg.fit.data = Some(dir.join(data));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        if cfg.config_version != CONFIG_VERSION {
            return Err(bad(format!(
                "config_version {} is not supported (expected {CONFIG_VERSION})",
                cfg.config_version
            )));
        }
        cfg.propagator.validate().map_err(|e| bad(format!("propagator: {e}")))?;
        Ok(cfg)
    }

    /// Canonical TOML of the effective configuration, hashed into the
    /// provenance footer.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate_evolve(&self) -> anyhow::Result<()> {
        let c = &self.evolve;
        check_positive("evolve.v_eff", &c.v_eff)?;
        check_grid(c.n_states)?;
        c.tau.validate_times("evolve.tau")?;
        if !c.beta.is_finite() {
            return Err(bad("evolve.beta must be finite"));
        }
        let grid = MomentumGrid::new(c.n_states).expect("checked");
        for &k in &c.orders {
            if grid.index(k).is_none() {
                return Err(bad(format!("evolve.orders: site {k} lies outside the grid")));
            }
        }
        Ok(())
    }

    pub fn validate_betascan(&self) -> anyhow::Result<()> {
        let c = &self.betascan;
        check_positive("betascan.v_eff", &[c.v_eff])?;
        check_grid(c.n_states)?;
        c.tau.validate_times("betascan.tau")?;
        c.beta.validate("betascan.beta")?;
        if c.betas().iter().any(|b| !b.is_finite()) {
            return Err(bad("betascan: quasimomenta must be finite"));
        }
        Ok(())
    }

    pub fn validate_thermal(&self) -> anyhow::Result<()> {
        let c = &self.thermal;
        check_positive("thermal.v_eff", &c.v_eff)?;
        check_positive("thermal.w", &c.w)?;
        c.phi.validate_times("thermal.phi")?;
        if c.quadrature_points < 3 || c.quadrature_points % 2 == 0 {
            return Err(bad("thermal.quadrature_points must be odd and at least 3"));
        }
        if c.ensemble {
            check_grid(c.n_states)?;
            if c.n_beta < 3 || c.n_beta % 2 == 0 {
                return Err(bad("thermal.n_beta must be odd and at least 3"));
            }
        }
        Ok(())
    }

    pub fn validate_steady(&self) -> anyhow::Result<()> {
        check_positive("steady.rho", &self.steady.rho)
    }

    pub fn validate_synth(&self) -> anyhow::Result<()> {
        let c = &self.synth;
        check_positive("synth.v_eff", &[c.v_eff])?;
        check_positive("synth.w", &[c.w])?;
        check_positive("synth.noise_scale", &[c.noise_scale])?;
        c.tau.validate_times("synth.tau")?;
        if c.tau.count > 1 && c.tau.stop <= c.tau.start {
            return Err(bad("synth.tau: sample times must be strictly increasing"));
        }
        if c.noise == NoiseKindConfig::ShotNoise && c.noise_scale < 1.0 {
            return Err(bad("synth.noise_scale: shot noise needs at least one atom"));
        }
        if c.engine == EngineKind::Ensemble {
            check_grid(c.n_states)?;
            if c.n_beta < 3 || c.n_beta % 2 == 0 {
                return Err(bad("synth.n_beta must be odd and at least 3"));
            }
        }
        Ok(())
    }

    pub fn validate_fit(&self) -> anyhow::Result<()> {
        let c = &self.fit;
        if c.data.is_none() {
            return Err(bad("fit.data: path to a tau,p0,sigma CSV is required"));
        }
        if let Some(rho) = c.rho {
            check_positive("fit.rho", &[rho])?;
        }
        if c.mode == FitMode::Depth && c.rho.is_none() {
            return Err(bad("fit.rho is required in depth mode"));
        }
        if c.options.quadrature_points < 3 || c.options.quadrature_points % 2 == 0 {
            return Err(bad("fit.options.quadrature_points must be odd and at least 3"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn canonical_form_round_trips() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.canonical()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_version_and_keys() {
        assert!(RunConfig::parse("config_version = 7").is_err());
        assert!(RunConfig::parse("[evolve]\nvee = 1.0").is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let l = Linspace {
            start: 1.0,
            stop: 2.0,
            count: 5,
        };
        assert_eq!(l.points(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!(Linspace { start: 0.0, stop: 1.0, count: 0 }.points().is_empty());
    }

    #[test]
    fn section_validation() {
        let mut cfg = RunConfig::default();
        cfg.evolve.v_eff = vec![-0.1];
        assert!(cfg.validate_evolve().is_err());
        cfg.evolve.v_eff = vec![0.1];
        cfg.evolve.orders = vec![5000];
        assert!(cfg.validate_evolve().is_err());
        assert!(cfg.validate_fit().is_err());
        cfg.thermal.n_beta = 10;
        assert!(cfg.validate_thermal().is_err());
    }
}
