//! Dense eigendecomposition of the ladder Hamiltonian, used to check the
//! split-step propagator.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::{MomentumGrid, WaveState};
use crate::error::{Error, Result};

pub const ORACLE_MAX_STATES: usize = 512;

/// Diagonal `(k² + 2kβ)/2` and off-diagonal `-V_eff/2` of the ladder
/// Hamiltonian. The coupling does not wrap around the grid edges.
pub fn tridiagonal_hamiltonian(grid: &MomentumGrid, beta: f64, v_eff: f64) -> (Vec<f64>, Vec<f64>) {
    let diag = (0..grid.n_states())
        .map(|i| {
            let k = grid.k_at(i) as f64;
            0.5 * (k * k + 2.0 * k * beta)
        })
        .collect();
    let off = vec![-0.5 * v_eff; grid.n_states() - 1];
    (diag, off)
}

/// Spectral decomposition of one `(grid, β, V_eff)` Hamiltonian.
pub struct EigenOracle {
    grid: MomentumGrid,
    beta: f64,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EigenOracle {
    pub fn new(grid: MomentumGrid, beta: f64, v_eff: f64) -> Result<Self> {
        let n = grid.n_states();
        if n > ORACLE_MAX_STATES {
            return Err(Error::GridTooLarge {
                n_states: n,
                limit: ORACLE_MAX_STATES,
            });
        }
        let (diag, off) = tridiagonal_hamiltonian(&grid, beta, v_eff);
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = diag[i];
        }
        for (i, &o) in off.iter().enumerate() {
            h[(i, i + 1)] = o;
            h[(i + 1, i)] = o;
        }
        let eig = SymmetricEigen::new(h);
        Ok(Self {
            grid,
            beta,
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    /// Eigenvalues in ascending order.
    pub fn energies(&self) -> Vec<f64> {
        let mut e = self.energies.clone();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Applies `exp(-iHτ)`; negative `tau` evolves backwards.
    pub fn evolve(&self, state: &WaveState, tau: f64) -> Result<WaveState> {
        if state.grid() != &self.grid || state.beta() != self.beta {
            return Err(Error::domain("state does not belong to this oracle's subspace"));
        }
        let n = self.grid.n_states();
        let c = state.amplitudes();
        let v = &self.vectors;
        let mut projected = vec![C64::new(0.0, 0.0); n];
        for (m, p) in projected.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                acc += c[i] * v[(i, m)];
            }
            *p = acc * C64::from_polar(1.0, -self.energies[m] * tau);
        }
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (m, p) in projected.iter().enumerate() {
                acc += p * v[(i, m)];
            }
            *o = acc;
        }
        Ok(WaveState::from_parts(self.grid, self.beta, out))
    }
}

/// One-shot oracle evolution; see [`EigenOracle`] for repeated use.
pub fn evolve_eigen_oracle(state: &WaveState, v_eff: f64, tau: f64) -> Result<WaveState> {
    EigenOracle::new(*state.grid(), state.beta(), v_eff)?.evolve(state, tau)
}
