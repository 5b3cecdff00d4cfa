//! Recovering lattice depth and gas temperature from zeroth-order data.
//!
//! The default procedure has two stages. The long-time mean of `P₀` fixes
//! `ρ = w/V_eff` through the steady-state closed form, which leaves a
//! one-parameter fit of `V_eff` against the thermal quadrature. A joint
//! refinement of both parameters then removes the bias of the finite-span
//! time average.

mod depth;
mod measurement;
pub mod optimize;
mod steady;

pub use depth::{fit_depth, fit_joint, fit_rho, fit_two_stage, FitOptions, FitResult, StageDiagnostic};
pub use measurement::{
    engine_p0, synth_measurements, Engine, MeasurementSet, NoiseKind, NoiseModel, Sample, TimeKind,
};
pub use steady::{dominant_frequency, estimate_steady_state, DominantFrequency, SteadyStateEstimate, MIN_PERIODS};
