use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use super::{MomentumGrid, SplittingOrder};

/// Composition weights of the symmetric Strang step.
pub(crate) fn stage_weights(order: SplittingOrder) -> Vec<f64> {
    let triple = |p: f64| {
        let a = 1.0 / (2.0 - 2f64.powf(1.0 / p));
        let b = -(2f64.powf(1.0 / p)) * a;
        [a, b, a]
    };
    match order {
        SplittingOrder::Second => vec![1.0],
        SplittingOrder::Fourth => triple(3.0).to_vec(),
        SplittingOrder::Sixth => {
            let outer = triple(5.0);
            let inner = triple(3.0);
            outer
                .iter()
                .flat_map(|o| inner.iter().map(move |i| o * i))
                .collect()
        }
    }
}

struct StepFactors {
    h: f64,
    first: Vec<C64>,
    inner: Vec<Vec<C64>>,
    join: Vec<C64>,
    last: Vec<C64>,
    potential: Vec<Vec<C64>>,
}

/// Kinetic/potential operator splitting for one quasimomentum subspace.
///
/// The ladder amplitude `c_k` with `k = k_min + i` is stored at index `i`.
/// With `k_min = -N/2` the factor `e^{i k_min θ_j} = (-1)^j` relating the
/// stored vector to the position-space wave commutes with the diagonal
/// potential and cancels between the inverse and forward transforms.
pub(crate) struct SplitStepper {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    kinetic: Vec<f64>,
    cos_theta: Vec<f64>,
    v_eff: f64,
    weights: Vec<f64>,
    factors: Option<StepFactors>,
}

impl SplitStepper {
    pub(crate) fn new(grid: &MomentumGrid, beta: f64, v_eff: f64, order: SplittingOrder) -> Self {
        let n = grid.n_states();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let kinetic = (0..n)
            .map(|i| {
                let k = grid.k_at(i) as f64;
                0.5 * (k * k + 2.0 * k * beta)
            })
            .collect();
        let cos_theta = (0..n)
            .map(|j| (2.0 * PI * j as f64 / n as f64).cos())
            .collect();
        Self {
            n,
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
            kinetic,
            cos_theta,
            v_eff,
            weights: stage_weights(order),
            factors: None,
        }
    }

    pub(crate) fn stages_per_substep(&self) -> usize {
        self.weights.len()
    }

    fn kinetic_factor(&self, coeff: f64, h: f64) -> Vec<C64> {
        self.kinetic
            .iter()
            .map(|t| C64::from_polar(1.0, -t * coeff * h))
            .collect()
    }

    fn prepare(&mut self, h: f64) {
        if matches!(&self.factors, Some(f) if f.h == h) {
            return;
        }
        let w = &self.weights;
        let m = w.len();
        let inv_n = 1.0 / self.n as f64;
        let potential = w
            .iter()
            .map(|wi| {
                self.cos_theta
                    .iter()
                    .map(|c| C64::from_polar(inv_n, self.v_eff * c * wi * h))
                    .collect()
            })
            .collect();
        let inner = (0..m.saturating_sub(1))
            .map(|i| self.kinetic_factor(0.5 * (w[i] + w[i + 1]), h))
            .collect();
        self.factors = Some(StepFactors {
            h,
            first: self.kinetic_factor(0.5 * w[0], h),
            inner,
            join: self.kinetic_factor(0.5 * (w[m - 1] + w[0]), h),
            last: self.kinetic_factor(0.5 * w[m - 1], h),
            potential,
        });
    }

    /// Advances `amps` by `dt` using `ceil(dt · density / 2π)` substeps.
    /// Returns the number of substeps taken.
    pub(crate) fn advance(&mut self, amps: &mut [C64], dt: f64, substeps_per_2pi: f64) -> u64 {
        if dt == 0.0 {
            return 0;
        }
        let substeps = ((dt.abs() * substeps_per_2pi / (2.0 * PI)).ceil() as u64).max(1);
        let h = dt / substeps as f64;
        self.prepare(h);
        let f = self.factors.as_ref().expect("factors prepared");
        let m = self.weights.len();

        mul_in_place(amps, &f.first);
        for step in 0..substeps {
            for i in 0..m {
                self.inverse.process_with_scratch(amps, &mut self.scratch);
                mul_in_place(amps, &f.potential[i]);
                self.forward.process_with_scratch(amps, &mut self.scratch);
                let kin = if i + 1 < m {
                    &f.inner[i]
                } else if step + 1 < substeps {
                    &f.join
                } else {
                    &f.last
                };
                mul_in_place(amps, kin);
            }
        }
        substeps
    }
}

#[inline]
fn mul_in_place(a: &mut [C64], b: &[C64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= *y;
    }
}
