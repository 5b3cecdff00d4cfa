//! Physical constants, rescaling to lattice units, and the Bloch
//! decomposition of momenta into ladder index plus quasimomentum.
//!
//! Everything downstream works in rescaled units: momenta in units of
//! `ħK`, energies in `ħ²K²/M`, and time `τ = tħK²/M`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 reduced Planck constant, J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// CODATA 2018 Boltzmann constant, J/K.
pub const BOLTZMANN_SI: f64 = 1.380_649e-23;

/// Dimensionful description of the grating and the atoms.
///
/// `reduced_planck` and `boltzmann` are carried explicitly so that tests can
/// work in unit-free systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Lattice depth `V`, J.
    pub lattice_depth: f64,
    /// Atomic mass `M`, kg.
    pub atomic_mass: f64,
    /// Grating wavenumber `K = 2 k_L`, 1/m.
    pub grating_wavenumber: f64,
    /// Phase velocity of the walking grating, m/s. Zero for a static grating.
    pub phase_velocity: f64,
    pub reduced_planck: f64,
    pub boltzmann: f64,
}

impl PhysicalParams {
    pub fn new(
        lattice_depth: f64,
        atomic_mass: f64,
        grating_wavenumber: f64,
        phase_velocity: f64,
        reduced_planck: f64,
        boltzmann: f64,
    ) -> Result<Self> {
        let p = Self {
            lattice_depth,
            atomic_mass,
            grating_wavenumber,
            phase_velocity,
            reduced_planck,
            boltzmann,
        };
        p.validate()?;
        Ok(p)
    }

    /// SI constants for `ħ` and `k_B`.
    pub fn si(
        lattice_depth: f64,
        atomic_mass: f64,
        grating_wavenumber: f64,
        phase_velocity: f64,
    ) -> Result<Self> {
        Self::new(
            lattice_depth,
            atomic_mass,
            grating_wavenumber,
            phase_velocity,
            HBAR_SI,
            BOLTZMANN_SI,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lattice depth", self.lattice_depth),
            ("atomic mass", self.atomic_mass),
            ("grating wavenumber", self.grating_wavenumber),
            ("reduced Planck constant", self.reduced_planck),
            ("Boltzmann constant", self.boltzmann),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {value}")));
            }
        }
        if !self.phase_velocity.is_finite() {
            return Err(Error::domain("phase velocity must be finite"));
        }
        Ok(())
    }

    /// Momentum quantum `ħK`.
    pub fn recoil_momentum(&self) -> f64 {
        self.reduced_planck * self.grating_wavenumber
    }

    /// Conversion factor from physical time to `τ`.
    pub fn time_scale(&self) -> f64 {
        self.reduced_planck * self.grating_wavenumber.powi(2) / self.atomic_mass
    }

    /// `V_eff = VM/(ħK)²`.
    pub fn v_eff(&self) -> f64 {
        self.lattice_depth * self.atomic_mass / self.recoil_momentum().powi(2)
    }
}

/// Lattice-unit parameters of one evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub v_eff: f64,
    pub tau: f64,
    pub beta: f64,
}

impl DimensionlessParams {
    pub fn new(v_eff: f64, tau: f64, beta: f64) -> Result<Self> {
        if !(v_eff.is_finite() && v_eff > 0.0) {
            return Err(Error::domain(format!("v_eff must be positive, got {v_eff}")));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::domain(format!("tau must be non-negative, got {tau}")));
        }
        if !(-0.5..0.5).contains(&beta) {
            return Err(Error::domain(format!("beta must lie in [-1/2, 1/2), got {beta}")));
        }
        Ok(Self { v_eff, tau, beta })
    }
}

/// Ladder index and quasimomentum with `p/(ħK) = k + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasimomentumDecomposition {
    pub k: i64,
    pub beta: f64,
}

impl QuasimomentumDecomposition {
    pub fn momentum(&self) -> f64 {
        self.k as f64 + self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    StaticGrating,
    WalkingGrating,
}

/// Converts physical parameters and a pulse duration to lattice units.
///
/// The returned `beta` is the quasimomentum of a gas at rest in the lab,
/// seen from the frame comoving with the grating (`p = M v_φ`).
pub fn rescale(params: &PhysicalParams, duration: f64) -> Result<DimensionlessParams> {
    params.validate()?;
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::domain(format!("duration must be non-negative, got {duration}")));
    }
    let comoving = params.atomic_mass * params.phase_velocity / params.recoil_momentum();
    Ok(DimensionlessParams {
        v_eff: params.v_eff(),
        tau: duration * params.time_scale(),
        beta: decompose_momentum(comoving).beta,
    })
}

/// Splits `p/(ħK)` into an integer ladder site and `beta ∈ [-1/2, 1/2)`.
pub fn decompose_momentum(p_over_hbar_k: f64) -> QuasimomentumDecomposition {
    let mut k = (p_over_hbar_k + 0.5).floor();
    let mut beta = p_over_hbar_k - k;
    // rounding in `x + 0.5` can push beta just outside the half-open zone
    if beta < -0.5 {
        k -= 1.0;
        beta = p_over_hbar_k - k;
    } else if beta >= 0.5 {
        k += 1.0;
        beta = p_over_hbar_k - k;
    }
    QuasimomentumDecomposition { k: k as i64, beta }
}

/// Lab-frame momentum (units of `ħK`) of ladder site `k` for the `β = 1/2`
/// preparation.
///
/// For a static grating the lab sees `k + 1/2`; the walking grating moves at
/// `ħK/2M`, so the same state is centred on zero momentum in the lab.
pub fn frame_shift_momentum(k: i64, frame: Frame) -> f64 {
    match frame {
        Frame::StaticGrating => k as f64 + 0.5,
        Frame::WalkingGrating => k as f64,
    }
}

/// Temperature `ħ²K²w²/(M k_B)` associated with a dimensionless momentum width.
pub fn temperature_from_width(w: f64, params: &PhysicalParams) -> f64 {
    params.recoil_momentum().powi(2) * w * w / (params.atomic_mass * params.boltzmann)
}
