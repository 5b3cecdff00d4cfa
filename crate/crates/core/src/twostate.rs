//! Closed-form populations of the two-state (`k = 0`, `k = -1`) model.

use serde::{Deserialize, Serialize};

/// Eigen-decomposition of the detuned 2×2 Rabi matrix
/// `[[β²/2, −V/2], [−V/2, (1−β)²/2]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiEigensystem {
    pub e_plus: f64,
    pub e_minus: f64,
    /// `cos α = (β − 1/2) / Ω`.
    pub mixing_cos: f64,
    /// `Ω = √((β − 1/2)² + V_eff²)`.
    pub rabi_frequency: f64,
}

pub fn rabi_eigensystem(v_eff: f64, beta: f64) -> RabiEigensystem {
    let detuning = beta - 0.5;
    let omega = detuning.hypot(v_eff);
    let centre = 0.5 * (0.5 - beta + beta * beta);
    RabiEigensystem {
        e_plus: centre + 0.5 * omega,
        e_minus: centre - 0.5 * omega,
        mixing_cos: detuning / omega,
        rabi_frequency: omega,
    }
}

/// `cos²(V_eff τ / 2)`.
pub fn p0_resonant(v_eff: f64, tau: f64) -> f64 {
    (0.5 * v_eff * tau).cos().powi(2)
}

/// `sin²(V_eff τ / 2)`.
pub fn pm1_resonant(v_eff: f64, tau: f64) -> f64 {
    (0.5 * v_eff * tau).sin().powi(2)
}

/// Zeroth-order population of the subspace with quasimomentum `beta`:
/// `1 − (V²/Ω²) sin²(Ωτ/2)`.
pub fn p0_detuned(v_eff: f64, beta: f64, tau: f64) -> f64 {
    let detuning = beta - 0.5;
    if detuning == 0.0 {
        return p0_resonant(v_eff, tau);
    }
    let omega = detuning.hypot(v_eff);
    let contrast = (v_eff / omega).powi(2);
    1.0 - contrast * (0.5 * omega * tau).sin().powi(2)
}

/// Peak-to-trough depth `V²/Ω²` of the detuned oscillation.
pub fn detuned_contrast(v_eff: f64, beta: f64) -> f64 {
    (v_eff / (beta - 0.5).hypot(v_eff)).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{EigenOracle, MomentumGrid};
    use nalgebra::{Matrix2, SymmetricEigen};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn resonant_examples() {
        assert_eq!(p0_resonant(0.1, 0.0), 1.0);
        assert!(p0_resonant(0.1, PI / 0.1) < 1e-30);
        assert!((p0_resonant(0.1, 2.0 * PI / 0.1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigensystem_at_resonance() {
        let e = rabi_eigensystem(0.1, 0.5);
        assert!((e.e_plus - e.e_minus - 0.1).abs() < 1e-15);
        assert_eq!(e.mixing_cos, 0.0);
        assert_eq!(e.rabi_frequency, 0.1);
        // both levels sit symmetrically about (1/2-β+β²)/2
        assert!((e.e_plus + e.e_minus - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eigensystem_at_zero_quasimomentum() {
        let e = rabi_eigensystem(0.1, 0.0);
        assert!((e.rabi_frequency - 0.26f64.sqrt()).abs() < 1e-15);
        assert!((e.rabi_frequency - 0.509_901_951_359_278_5).abs() < 1e-14);
        assert!((e.mixing_cos + 0.980_580_675_690_920_2).abs() < 1e-14);
        // two-site ladder oracle: same splitting, shifted by β²/2
        let o = EigenOracle::new(MomentumGrid::new(2).unwrap(), 0.0, 0.1).unwrap();
        let ev = o.energies();
        assert!((ev[1] - ev[0] - e.rabi_frequency).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_match_dense_solver() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let v: f64 = rng.gen_range(1e-3..1.0);
            let b: f64 = rng.gen_range(-0.5..1.0);
            let m = Matrix2::new(b * b / 2.0, -v / 2.0, -v / 2.0, (1.0 - 2.0 * b + b * b) / 2.0);
            let eig = SymmetricEigen::new(m);
            let (lo, hi) = {
                let (a, c) = (eig.eigenvalues[0], eig.eigenvalues[1]);
                (a.min(c), a.max(c))
            };
            let e = rabi_eigensystem(v, b);
            assert!((e.e_minus - lo).abs() < 1e-14 && (e.e_plus - hi).abs() < 1e-14);
        }
    }

    #[test]
    fn detuned_examples() {
        for &t in &[0.0, 1.0, 13.7, 400.0] {
            assert_eq!(p0_detuned(0.07, 0.5, t), p0_resonant(0.07, t));
        }
        let omega = 0.26f64.sqrt();
        let min = p0_detuned(0.1, 0.0, PI / omega);
        assert!((min - (1.0 - 0.01 / 0.26)).abs() < 1e-15);
        assert!((min - 0.961_538_461_538_461_5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn resonant_pair_sums_to_one(v in 1e-4f64..2.0, t in 0.0f64..1e3) {
            prop_assert!((p0_resonant(v, t) + pm1_resonant(v, t) - 1.0).abs() < 1e-15);
        }

        #[test]
        fn resonant_depends_only_on_product(v in 1e-3f64..1.0, t in 0.0f64..500.0, s in 0.1f64..10.0) {
            prop_assert!((p0_resonant(v, t) - p0_resonant(v * s, t / s)).abs() < 1e-9);
        }

        #[test]
        fn detuned_envelope_and_symmetry(v in 1e-3f64..0.5, d in -0.5f64..0.5) {
            let bound = detuned_contrast(v, 0.5 + d);
            for i in 0..200 {
                let t = i as f64 * 0.73;
                let p = p0_detuned(v, 0.5 + d, t);
                prop_assert!(1.0 - p <= bound + 1e-15);
                prop_assert!(p <= 1.0);
                prop_assert!((p - p0_detuned(v, 0.5 - d, t)).abs() < 1e-14);
            }
        }

        #[test]
        fn rabi_frequency_bounds(v in 1e-3f64..1.0, b in -0.5f64..1.0) {
            let e = rabi_eigensystem(v, b);
            prop_assert!(e.e_plus >= e.e_minus);
            prop_assert!(e.rabi_frequency >= v);
            prop_assert!(e.mixing_cos.abs() <= 1.0);
        }
    }
}
