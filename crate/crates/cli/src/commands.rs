use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use latdepth::fit::{
    fit_depth, fit_joint, fit_two_stage, synth_measurements, Engine, FitResult, MeasurementSet, NoiseKind,
    NoiseModel, Sample, TimeKind,
};
use latdepth::propagator::{evolve_series, initial_state, sample_p0, MomentumGrid, PropagationDiagnostics};
use latdepth::thermal::{
    p0_steady_state, p0_steady_state_with, p0_thermal_ensemble, QuadratureConfig, SteadyStateConvention,
    ThermalKernel, ThermalParams,
};
use latdepth::twostate::p0_detuned;
use latdepth::Execution;

use crate::config::{ConfigError, EngineKind, FitMode, NoiseKindConfig, RunConfig};
use crate::output::{num, opt, CsvTable};

/// The integrator's own doubling check failed.
#[derive(Debug)]
pub struct ConvergenceFailure(pub String);

impl fmt::Display for ConvergenceFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "convergence failure: {}", self.0)
    }
}

impl std::error::Error for ConvergenceFailure {}

fn check_diagnostics(what: &str, diag: &PropagationDiagnostics) -> Result<()> {
    if let Some(c) = diag.convergence.filter(|c| !c.converged) {
        return Err(ConvergenceFailure(format!(
            "{what}: doubling substeps changed amplitudes by {:.3e} (tolerance {:.1e})",
            c.max_amplitude_change, c.tolerance
        ))
        .into());
    }
    Ok(())
}

fn order_column(k: i64) -> String {
    match k {
        0 => "p_0".into(),
        k if k < 0 => format!("p_m{}", -k),
        k => format!("p_p{k}"),
    }
}

pub fn evolve(cfg: &RunConfig) -> Result<CsvTable> {
    cfg.validate_evolve()?;
    let c = &cfg.evolve;
    let grid = MomentumGrid::new(c.n_states)?;
    let taus = c.tau.points();
    let mut header = vec!["v_eff".to_string(), "tau".into(), "phi".into()];
    header.extend(c.orders.iter().map(|&k| order_column(k)));
    header.push("p0_two_state".into());
    let mut table = CsvTable::new(header);

    let runs = Execution::Parallel.map(&c.v_eff, |&v| -> Result<Vec<Vec<f64>>> {
        let psi = initial_state(grid, 0, c.beta)?;
        let mut rows = Vec::with_capacity(taus.len());
        let evo = evolve_series(&psi, v, &taus, &cfg.propagator, |_, _, s| {
            rows.push(
                c.orders
                    .iter()
                    .map(|&k| s.amplitude(k).map_or(0.0, |a| a.norm_sqr()))
                    .collect(),
            );
        })?;
        check_diagnostics(&format!("v_eff = {v}"), &evo.diagnostics)?;
        Ok(rows)
    });
    for (&v, run) in c.v_eff.iter().zip(runs) {
        for (&t, pops) in taus.iter().zip(run?) {
            let mut row = vec![num(v), num(t), num(v * t)];
            row.extend(pops.into_iter().map(num));
            row.push(num(p0_detuned(v, c.beta, t)));
            table.push(row);
        }
    }
    Ok(table)
}

pub fn betascan(cfg: &RunConfig) -> Result<CsvTable> {
    cfg.validate_betascan()?;
    let c = &cfg.betascan;
    let grid = MomentumGrid::new(c.n_states)?;
    let taus = c.tau.points();
    let betas = c.betas();
    let runs = Execution::Parallel.map(&betas, |&b| sample_p0(grid, 0, b, c.v_eff, &taus, &cfg.propagator));
    let mut table = CsvTable::new(["beta", "tau", "p0", "p0_two_state"]);
    for (&b, run) in betas.iter().zip(runs) {
        let (p0, diag) = run?;
        check_diagnostics(&format!("beta = {b}"), &diag)?;
        for (&t, p) in taus.iter().zip(p0) {
            table.push(vec![num(b), num(t), num(p), num(p0_detuned(c.v_eff, b, t))]);
        }
    }
    Ok(table)
}

pub fn thermal(cfg: &RunConfig) -> Result<CsvTable> {
    cfg.validate_thermal()?;
    let c = &cfg.thermal;
    let phis = c.phi.points();
    let mut table = CsvTable::new([
        "v_eff",
        "w",
        "rho",
        "tau",
        "phi",
        "p0_ensemble",
        "p0_quadrature",
        "p0_steady",
    ]);
    for &v in &c.v_eff {
        for &w in &c.w {
            let params = ThermalParams::new(v, w, 0.0)?;
            let rho = params.rho;
            let taus: Vec<f64> = phis.iter().map(|p| p / v).collect();
            let quad = QuadratureConfig::for_lattice(rho, v).with_points(c.quadrature_points);
            let kernel = ThermalKernel::new(rho, &quad)?;
            if kernel.mass_deficit() > 1e-6 {
                log::warn!(
                    "v_eff = {v}, w = {w}: the zone edges cut {:.2e} of the Gaussian weight",
                    kernel.mass_deficit()
                );
            }
            let ensemble = if c.ensemble {
                let grid = MomentumGrid::new(c.n_states)?;
                let e = p0_thermal_ensemble(v, w, &taus, grid, c.n_beta, &cfg.propagator, Execution::Parallel)?;
                if !e.converged {
                    return Err(ConvergenceFailure(format!("ensemble at v_eff = {v}, w = {w}")).into());
                }
                Some(e.p0)
            } else {
                None
            };
            let steady = p0_steady_state(rho);
            for (i, (&t, &phi)) in taus.iter().zip(&phis).enumerate() {
                table.push(vec![
                    num(v),
                    num(w),
                    num(rho),
                    num(t),
                    num(phi),
                    opt(ensemble.as_ref().map(|e| e[i])),
                    num(kernel.p0(phi)),
                    num(steady),
                ]);
            }
        }
    }
    Ok(table)
}

pub fn steady(cfg: &RunConfig) -> Result<CsvTable> {
    cfg.validate_steady()?;
    let mut table = CsvTable::new(["rho", "p0_steady", "p0_steady_transferred"]);
    for &rho in &cfg.steady.rho {
        table.push(vec![
            num(rho),
            num(p0_steady_state(rho)),
            num(p0_steady_state_with(rho, SteadyStateConvention::Transferred)),
        ]);
    }
    Ok(table)
}

pub fn synth(cfg: &RunConfig) -> Result<CsvTable> {
    cfg.validate_synth()?;
    let c = &cfg.synth;
    let noise = NoiseModel {
        kind: match c.noise {
            NoiseKindConfig::Gaussian => NoiseKind::GaussianAdditive,
            NoiseKindConfig::ShotNoise => NoiseKind::AtomShotNoise,
        },
        scale: c.noise_scale,
        seed: cfg.seed,
    };
    let engine = match c.engine {
        EngineKind::Quadrature => Engine::Quadrature,
        EngineKind::Ensemble => Engine::Ensemble {
            n_states: c.n_states,
            n_beta: c.n_beta,
            propagator: cfg.propagator,
            execution: Execution::Parallel,
        },
    };
    let data = synth_measurements(c.v_eff, c.w, &c.tau.points(), &noise, &engine)?;
    let mut table = CsvTable::new(["tau", "p0", "sigma"]);
    for s in data.samples() {
        table.push(vec![num(s.time), num(s.p0), num(s.sigma)]);
    }
    Ok(table)
}

/// Reads a `tau,p0,sigma` table; `#` lines are comments, columns are found
/// by name so extra columns are ignored.
pub fn read_measurements(path: &Path) -> Result<MeasurementSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| ConfigError(format!("{} has no header line", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| ConfigError(format!("{}: missing column '{name}'", path.display())))
    };
    let (it, ip, is) = (col("tau")?, col("p0")?, col("sigma")?);
    let mut samples = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> Result<f64> {
            let field = fields
                .get(i)
                .ok_or_else(|| ConfigError(format!("{}:{}: too few fields", path.display(), lineno + 1)))?;
            field
                .parse()
                .map_err(|e| ConfigError(format!("{}:{}: '{field}': {e}", path.display(), lineno + 1)).into())
        };
        samples.push(Sample {
            time: get(it)?,
            p0: get(ip)?,
            sigma: get(is)?,
        });
    }
    Ok(MeasurementSet::new(samples, TimeKind::Dimensionless)?)
}

pub fn fit(cfg: &RunConfig) -> Result<FitResult> {
    cfg.validate_fit()?;
    let c = &cfg.fit;
    let data = read_measurements(c.data.as_deref().expect("validated"))?;
    let result = match c.mode {
        FitMode::TwoStage => fit_two_stage(&data, &c.options)?,
        FitMode::Joint => fit_joint(&data, c.rho.unwrap_or(0.1), &c.options)?,
        FitMode::Depth => fit_depth(&data, c.rho.expect("validated"), &c.options)?,
    };
    Ok(result)
}
