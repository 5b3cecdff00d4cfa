//! Time evolution of a single quasimomentum subspace.
//!
//! The generator in the ladder basis is
//! `H = (k̂² + 2k̂β)/2 − V_eff cos θ̂`, diagonal in `k` for the kinetic part
//! and diagonal in `θ` for the lattice. [`evolve_split_step`] alternates the
//! two factors through FFTs; [`evolve_eigen_oracle`] diagonalizes the
//! tridiagonal matrix directly and serves as the reference.

mod oracle;
mod split_step;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use split_step::SplitStepper;

pub use oracle::{evolve_eigen_oracle, tridiagonal_hamiltonian, EigenOracle, ORACLE_MAX_STATES};

/// Contiguous block of ladder sites `k_min ..= k_max` with `k_min = -N/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MomentumGrid {
    n_states: usize,
}

impl MomentumGrid {
    pub const DEFAULT_STATES: usize = 2048;

    pub fn new(n_states: usize) -> Result<Self> {
        if n_states < 2 || n_states % 2 != 0 {
            return Err(Error::domain(format!(
                "momentum grid needs a positive even number of states, got {n_states}"
            )));
        }
        Ok(Self { n_states })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn k_min(&self) -> i64 {
        -(self.n_states as i64 / 2)
    }

    pub fn k_max(&self) -> i64 {
        self.n_states as i64 / 2 - 1
    }

    pub fn k_at(&self, index: usize) -> i64 {
        self.k_min() + index as i64
    }

    pub fn index(&self, k: i64) -> Option<usize> {
        (self.k_min()..=self.k_max())
            .contains(&k)
            .then(|| (k - self.k_min()) as usize)
    }
}

impl Default for MomentumGrid {
    fn default() -> Self {
        Self {
            n_states: Self::DEFAULT_STATES,
        }
    }
}

/// Ladder amplitudes `c_k` at fixed quasimomentum.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    grid: MomentumGrid,
    beta: f64,
    amplitudes: Vec<C64>,
}

impl WaveState {
    pub(crate) fn from_parts(grid: MomentumGrid, beta: f64, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), grid.n_states());
        Self {
            grid,
            beta,
            amplitudes,
        }
    }

    /// Builds a state from explicit amplitudes; they are not renormalized.
    pub fn from_amplitudes(grid: MomentumGrid, beta: f64, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != grid.n_states() {
            return Err(Error::domain(format!(
                "expected {} amplitudes, got {}",
                grid.n_states(),
                amplitudes.len()
            )));
        }
        Ok(Self::from_parts(grid, beta, amplitudes))
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, k: i64) -> Option<C64> {
        self.grid.index(k).map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &WaveState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Population within `margin` sites of either grid edge.
    pub fn edge_population(&self, margin: usize) -> f64 {
        let n = self.amplitudes.len();
        let m = margin.min(n / 2);
        self.amplitudes[..m]
            .iter()
            .chain(&self.amplitudes[n - m..])
            .map(|c| c.norm_sqr())
            .sum()
    }
}

/// `|k0, β⟩`: unit amplitude on one ladder site.
pub fn initial_state(grid: MomentumGrid, k0: i64, beta: f64) -> Result<WaveState> {
    let index = grid.index(k0).ok_or(Error::OutsideGrid {
        k: k0,
        k_min: grid.k_min(),
        k_max: grid.k_max(),
    })?;
    let mut amplitudes = vec![C64::new(0.0, 0.0); grid.n_states()];
    amplitudes[index] = C64::new(1.0, 0.0);
    Ok(WaveState::from_parts(grid, beta, amplitudes))
}

/// `P_k = |c_k|²` on every ladder site.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationRecord {
    k_min: i64,
    values: Vec<f64>,
}

impl PopulationRecord {
    /// Population of site `k`; zero outside the grid.
    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.k_min;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.k_min + i as i64, p))
    }
}

pub fn populations(state: &WaveState) -> PopulationRecord {
    PopulationRecord {
        k_min: state.grid.k_min(),
        values: state.amplitudes.iter().map(|c| c.norm_sqr()).collect(),
    }
}

/// Accuracy of the split-step integrator. Higher orders are symmetric
/// compositions of the second-order Strang step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingOrder {
    #[default]
    Second,
    Fourth,
    Sixth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagatorConfig {
    /// Substeps per `2π` of `τ`; each substep is one full composition.
    pub substeps_per_2pi: u32,
    pub order: SplittingOrder,
    /// Largest tolerated amplitude change when the substep count is doubled.
    pub convergence_tolerance: f64,
    /// Re-run with doubled substeps and report the change.
    pub check_convergence: bool,
    pub edge_margin: usize,
    pub edge_cutoff: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            substeps_per_2pi: 256,
            order: SplittingOrder::Second,
            convergence_tolerance: 1e-10,
            check_convergence: false,
            edge_margin: 5,
            edge_cutoff: 1e-11,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.substeps_per_2pi == 0 {
            return Err(Error::domain("substeps_per_2pi must be at least 1"));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(Error::domain("convergence_tolerance must be positive"));
        }
        Ok(())
    }

    fn doubled(&self) -> Self {
        Self {
            substeps_per_2pi: self.substeps_per_2pi * 2,
            check_convergence: false,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub max_amplitude_change: f64,
    pub tolerance: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PropagationDiagnostics {
    pub substeps: u64,
    pub stages: u64,
    pub norm_drift: f64,
    pub max_edge_population: f64,
    pub edge_warning: bool,
    pub convergence: Option<ConvergenceCheck>,
}

impl PropagationDiagnostics {
    pub fn is_converged(&self) -> bool {
        self.convergence.map_or(true, |c| c.converged)
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: WaveState,
    pub diagnostics: PropagationDiagnostics,
}

fn check_inputs(state: &WaveState, v_eff: f64, config: &PropagatorConfig) -> Result<()> {
    config.validate()?;
    if !(v_eff.is_finite() && v_eff >= 0.0) {
        return Err(Error::domain(format!("v_eff must be non-negative, got {v_eff}")));
    }
    if !state.beta.is_finite() {
        return Err(Error::domain("beta must be finite"));
    }
    Ok(())
}

/// Evolves `state` through the non-decreasing sample times `taus` (measured
/// from the state's own time zero), calling `observe` at each sample.
pub fn evolve_series<F>(
    state: &WaveState,
    v_eff: f64,
    taus: &[f64],
    config: &PropagatorConfig,
    mut observe: F,
) -> Result<Evolution>
where
    F: FnMut(usize, f64, &WaveState),
{
    check_inputs(state, v_eff, config)?;
    let mut prev = 0.0;
    for &t in taus {
        if !(t.is_finite() && t >= prev) {
            return Err(Error::domain(format!(
                "sample times must be finite, non-negative and non-decreasing (got {t} after {prev})"
            )));
        }
        prev = t;
    }

    let mut stepper = SplitStepper::new(&state.grid, state.beta, v_eff, config.order);
    let density = config.substeps_per_2pi as f64;
    let mut current = state.clone();
    let norm0 = state.norm_sqr();
    let mut diag = PropagationDiagnostics::default();
    let mut last = 0.0;
    for (i, &t) in taus.iter().enumerate() {
        diag.substeps += stepper.advance(&mut current.amplitudes, t - last, density);
        last = t;
        diag.max_edge_population = diag
            .max_edge_population
            .max(current.edge_population(config.edge_margin));
        observe(i, t, &current);
    }
    diag.stages = diag.substeps * stepper.stages_per_substep() as u64;
    diag.norm_drift = (current.norm_sqr() - norm0).abs();
    if diag.max_edge_population > config.edge_cutoff {
        diag.edge_warning = true;
        log::warn!(
            "population {:.3e} reached the last {} grid sites (cutoff {:.1e}); enlarge the grid",
            diag.max_edge_population,
            config.edge_margin,
            config.edge_cutoff
        );
    }

    if config.check_convergence {
        let fine = evolve_to(state, v_eff, last, &config.doubled())?;
        let change = fine.max_abs_diff(&current);
        let converged = change <= config.convergence_tolerance;
        if !converged {
            log::warn!(
                "split-step not converged: doubling substeps changed amplitudes by {change:.3e} (tolerance {:.1e})",
                config.convergence_tolerance
            );
        }
        diag.convergence = Some(ConvergenceCheck {
            max_amplitude_change: change,
            tolerance: config.convergence_tolerance,
            converged,
        });
    }
    Ok(Evolution {
        state: current,
        diagnostics: diag,
    })
}

fn evolve_to(state: &WaveState, v_eff: f64, tau: f64, config: &PropagatorConfig) -> Result<WaveState> {
    let mut stepper = SplitStepper::new(&state.grid, state.beta, v_eff, config.order);
    let mut out = state.clone();
    stepper.advance(&mut out.amplitudes, tau, config.substeps_per_2pi as f64);
    Ok(out)
}

/// Evolves `state` by `tau` under the lattice Hamiltonian with the
/// split-step integrator.
pub fn evolve_split_step(
    state: &WaveState,
    v_eff: f64,
    tau: f64,
    config: &PropagatorConfig,
) -> Result<Evolution> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::domain(format!("tau must be non-negative, got {tau}")));
    }
    evolve_series(state, v_eff, &[tau], config, |_, _, _| {})
}

/// Time-stamped diffraction-order populations relative to the initial site.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub taus: Vec<f64>,
    pub p0: Vec<f64>,
    pub p_minus1: Option<Vec<f64>>,
    pub p_plus1: Option<Vec<f64>>,
}

impl PopulationSeries {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

/// Runs `|k0, β⟩` through `taus` and records `P_{k0}`, `P_{k0-1}`, `P_{k0+1}`.
pub fn sample_orders(
    grid: MomentumGrid,
    k0: i64,
    beta: f64,
    v_eff: f64,
    taus: &[f64],
    config: &PropagatorConfig,
) -> Result<(PopulationSeries, PropagationDiagnostics)> {
    let psi = initial_state(grid, k0, beta)?;
    let cap = taus.len();
    let mut series = PopulationSeries {
        taus: taus.to_vec(),
        p0: Vec::with_capacity(cap),
        p_minus1: Some(Vec::with_capacity(cap)),
        p_plus1: Some(Vec::with_capacity(cap)),
    };
    let pop = |s: &WaveState, k: i64| s.amplitude(k).map_or(0.0, |c| c.norm_sqr());
    let evo = evolve_series(&psi, v_eff, taus, config, |_, _, s| {
        series.p0.push(pop(s, k0));
        series.p_minus1.as_mut().unwrap().push(pop(s, k0 - 1));
        series.p_plus1.as_mut().unwrap().push(pop(s, k0 + 1));
    })?;
    Ok((series, evo.diagnostics))
}

/// `P_{k0}(τ)` only; cheaper than [`sample_orders`] for ensembles.
pub fn sample_p0(
    grid: MomentumGrid,
    k0: i64,
    beta: f64,
    v_eff: f64,
    taus: &[f64],
    config: &PropagatorConfig,
) -> Result<(Vec<f64>, PropagationDiagnostics)> {
    let psi = initial_state(grid, k0, beta)?;
    let index = grid.index(k0).expect("validated by initial_state");
    let mut p0 = Vec::with_capacity(taus.len());
    let evo = evolve_series(&psi, v_eff, taus, config, |_, _, s| {
        p0.push(s.amplitudes[index].norm_sqr());
    })?;
    Ok((p0, evo.diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> MomentumGrid {
        MomentumGrid::new(n).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = MomentumGrid::default();
        assert_eq!(g.n_states(), 2048);
        assert_eq!(g.k_min(), -1024);
        assert_eq!(g.k_max(), 1023);
        assert_eq!(g.index(0), Some(1024));
        assert_eq!(g.index(1024), None);
        assert!(MomentumGrid::new(7).is_err());
        assert!(MomentumGrid::new(0).is_err());
    }

    #[test]
    fn initial_state_is_a_normalized_delta() {
        let psi = initial_state(MomentumGrid::default(), 0, 0.5).unwrap();
        assert_eq!(psi.norm_sqr(), 1.0);
        let p = populations(&psi);
        assert_eq!(p.get(0), 1.0);
        assert_eq!(p.total(), 1.0);
        assert!(p.iter().filter(|&(k, _)| k != 0).all(|(_, v)| v == 0.0));
        assert!(matches!(
            initial_state(grid(8), 4, 0.5),
            Err(Error::OutsideGrid { k: 4, .. })
        ));
    }

    #[test]
    fn equal_superposition_populations() {
        let g = grid(8);
        let mut amps = vec![C64::new(0.0, 0.0); 8];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        amps[g.index(0).unwrap()] = C64::new(s, 0.0);
        amps[g.index(-1).unwrap()] = C64::new(0.0, s);
        let p = populations(&WaveState::from_amplitudes(g, 0.5, amps).unwrap());
        assert!((p.get(0) - 0.5).abs() < 1e-15);
        assert!((p.get(-1) - 0.5).abs() < 1e-15);
        assert!((p.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_evolution_keeps_populations() {
        let g = grid(32);
        let mut amps: Vec<C64> = (0..32).map(|i| C64::new((i as f64).sin(), 0.3)).collect();
        let n = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|c| *c /= n);
        let psi = WaveState::from_amplitudes(g, 0.2, amps).unwrap();
        let out = evolve_split_step(&psi, 0.0, 17.0, &PropagatorConfig::default()).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(out.state.amplitudes()) {
            assert!((a.norm() - b.norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn resonant_subspace_follows_rabi_curve() {
        let v = 0.1;
        let taus: Vec<f64> = (0..=200).map(|i| i as f64 * PI / v / 100.0).collect();
        let (s, d) = sample_orders(grid(64), 0, 0.5, v, &taus, &PropagatorConfig::default()).unwrap();
        let worst = s
            .p0
            .iter()
            .zip(&taus)
            .map(|(p, t)| (p - (v * t / 2.0).cos().powi(2)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "deviation {worst}");
        // V_eff τ = π: full transfer
        let at_pi = s.p0[100];
        assert!(at_pi < 0.02, "P0 at transfer point {at_pi}");
        assert!(d.norm_drift < 1e-12);
    }

    #[test]
    fn split_step_matches_oracle_on_small_grid() {
        let g = grid(32);
        let cfg = PropagatorConfig {
            substeps_per_2pi: 128,
            order: SplittingOrder::Sixth,
            ..Default::default()
        };
        for &(v, beta, tau) in &[(0.3, 0.5, 20.0), (0.05, -0.2, 40.0), (0.5, 0.1, 7.0)] {
            let psi = initial_state(g, 0, beta).unwrap();
            let a = evolve_split_step(&psi, v, tau, &cfg).unwrap().state;
            let b = evolve_eigen_oracle(&psi, v, tau).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-9, "{v} {beta} {tau}: {}", a.max_abs_diff(&b));
        }
    }

    #[test]
    fn strang_error_shrinks_when_substeps_double() {
        let g = grid(32);
        let psi = initial_state(g, 0, 0.3).unwrap();
        let exact = evolve_eigen_oracle(&psi, 0.2, 30.0).unwrap();
        let err = |n: u32| {
            let cfg = PropagatorConfig {
                substeps_per_2pi: n,
                ..Default::default()
            };
            evolve_split_step(&psi, 0.2, 30.0, &cfg).unwrap().state.max_abs_diff(&exact)
        };
        let (e1, e2, e3) = (err(128), err(256), err(512));
        assert!(e2 < e1 / 3.0 && e3 < e2 / 3.0, "{e1} {e2} {e3}");
    }

    #[test]
    fn two_site_oracle_spectrum() {
        let o = EigenOracle::new(grid(2), 0.5, 0.1).unwrap();
        let e = o.energies();
        let shift = 0.5 * (e[0] + e[1]);
        assert!((e[0] - shift + 0.05).abs() < 1e-15);
        assert!((e[1] - shift - 0.05).abs() < 1e-15);
    }

    #[test]
    fn oracle_time_reversal() {
        let g = grid(48);
        let psi = initial_state(g, 0, 0.37).unwrap();
        let o = EigenOracle::new(g, 0.37, 0.4).unwrap();
        let back = o.evolve(&o.evolve(&psi, 93.0).unwrap(), -93.0).unwrap();
        assert!(back.max_abs_diff(&psi) < 1e-10);
    }

    #[test]
    fn oracle_refuses_large_grid() {
        let psi = initial_state(grid(1024), 0, 0.5).unwrap();
        assert!(matches!(
            evolve_eigen_oracle(&psi, 0.1, 1.0),
            Err(Error::GridTooLarge { n_states: 1024, .. })
        ));
    }

    #[test]
    fn upper_order_leakage_is_small_but_present() {
        let v = 0.13;
        let g = grid(64);
        let o = EigenOracle::new(g, 0.5, v).unwrap();
        let psi = initial_state(g, 0, 0.5).unwrap();
        let taus: Vec<f64> = (1..=120).map(|i| i as f64 * 0.5).collect();
        let peak = taus
            .iter()
            .map(|&t| populations(&o.evolve(&psi, t).unwrap()).get(1))
            .fold(0.0, f64::max);
        assert!(peak > 1e-4 && peak < 0.05, "P+1 peak {peak}");
        let (s, _) = sample_orders(g, 0, 0.5, v, &taus, &PropagatorConfig::default()).unwrap();
        let ss_peak = s.p_plus1.unwrap().into_iter().fold(0.0, f64::max);
        assert!((ss_peak - peak).abs() < 1e-3);
    }

    #[test]
    fn beta_is_a_fixed_parameter() {
        let psi = initial_state(grid(16), 0, 0.31).unwrap();
        let out = evolve_split_step(&psi, 0.2, 5.0, &PropagatorConfig::default()).unwrap();
        assert_eq!(out.state.beta(), 0.31);
    }

    #[test]
    fn convergence_diagnostic_is_reported() {
        let psi = initial_state(grid(32), 0, 0.2).unwrap();
        let coarse = PropagatorConfig {
            substeps_per_2pi: 16,
            check_convergence: true,
            ..Default::default()
        };
        let d = evolve_split_step(&psi, 0.4, 50.0, &coarse).unwrap().diagnostics;
        let c = d.convergence.unwrap();
        assert!(!c.converged && c.max_amplitude_change > 1e-10);
        assert!(!d.is_converged());
    }

    #[test]
    fn edge_monitor_flags_truncation() {
        // a tiny grid with a strong lattice must spill population onto the edges
        let psi = initial_state(grid(8), 0, 0.5).unwrap();
        let d = evolve_split_step(&psi, 0.5, 40.0, &PropagatorConfig::default())
            .unwrap()
            .diagnostics;
        assert!(d.edge_warning);
        let psi = initial_state(grid(256), 0, 0.5).unwrap();
        let d = evolve_split_step(&psi, 0.1, 40.0, &PropagatorConfig::default())
            .unwrap()
            .diagnostics;
        assert!(!d.edge_warning, "{}", d.max_edge_population);
    }

    #[test]
    fn rejects_bad_times() {
        let psi = initial_state(grid(8), 0, 0.5).unwrap();
        let cfg = PropagatorConfig::default();
        assert!(evolve_split_step(&psi, 0.1, -1.0, &cfg).is_err());
        assert!(evolve_series(&psi, 0.1, &[1.0, 0.5], &cfg, |_, _, _| {}).is_err());
    }
}
