//! Derivative-free scalar minimisation, monotone root bracketing, and a small
//! two-parameter Levenberg–Marquardt loop.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Brent's method on `[a, b]`: golden-section steps with parabolic
/// interpolation once the three best points behave.
pub fn brent_minimize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, max_iter: usize) -> Result<Minimum> {
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let (lo, hi) = (a, b);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for iter in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol = rel_tol * x.abs() + 1e-300;
        let tol2 = 2.0 * tol;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(Minimum {
                x,
                fx,
                iterations: iter,
            });
        }
        let mut golden = true;
        if e.abs() > tol {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol } else { -tol };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol { x + d } else { x + tol.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Err(Error::NonConvergence {
        message: format!("Brent minimisation used {max_iter} iterations"),
        lo,
        hi,
    })
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]` with `lo > 0`,
/// bisecting in `ln x` until the bracket is narrower than `rel_tol`.
pub fn bisect_log_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    target: f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    if f(lo) > target || f(hi) < target {
        return Err(Error::NonConvergence {
            message: format!("target {target} is not bracketed"),
            lo,
            hi,
        });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= rel_tol {
            return Ok(m.exp());
        }
        if f(m.exp()) < target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOutcome {
    pub x: [f64; 2],
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `½Σr_i(x)²` over two parameters. `residuals` writes into the
/// provided buffer; the Jacobian is taken by central differences with step
/// `fd_step` times each parameter's scale.
pub fn levenberg_marquardt<F>(mut residuals: F, x0: [f64; 2], n: usize, rel_tol: f64, max_iter: usize) -> LmOutcome
where
    F: FnMut([f64; 2], &mut [f64]),
{
    let fd_step = 1e-6;
    let mut x = x0;
    let mut r = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut jac = vec![[0.0; 2]; n];
    residuals(x, &mut r);
    let mut cost = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-3;
    for iter in 0..max_iter {
        for k in 0..2 {
            let h = fd_step * x[k].abs().max(1e-3);
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            residuals(xp, &mut plus);
            residuals(xm, &mut minus);
            for i in 0..n {
                jac[i][k] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for i in 0..n {
            let j = Vector2::new(jac[i][0], jac[i][1]);
            jtj += j * j.transpose();
            jtr += j * r[i];
        }
        if jtr.amax() == 0.0 {
            return LmOutcome {
                x,
                cost,
                iterations: iter,
                converged: true,
            };
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj;
            for k in 0..2 {
                a[(k, k)] *= 1.0 + lambda;
                a[(k, k)] += 1e-300;
            }
            let step = match a.try_inverse() {
                Some(inv) => -(inv * jtr),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let xn = [x[0] + step[0], x[1] + step[1]];
            residuals(xn, &mut trial);
            let cn = 0.5 * trial.iter().map(|v| v * v).sum::<f64>();
            if cn.is_finite() && cn <= cost {
                let small = (step[0] / x[0].abs().max(1e-300)).abs() < rel_tol
                    && (step[1] / x[1].abs().max(1.0)).abs() < rel_tol;
                let stalled = cost - cn <= 1e-15 * cost;
                x = xn;
                std::mem::swap(&mut r, &mut trial);
                cost = cn;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if small || (stalled && iter > 2) {
                    return LmOutcome {
                        x,
                        cost,
                        iterations: iter + 1,
                        converged: true,
                    };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: already at a minimum to rounding
            return LmOutcome {
                x,
                cost,
                iterations: iter + 1,
                converged: true,
            };
        }
    }
    LmOutcome {
        x,
        cost,
        iterations: max_iter,
        converged: false,
    }
}
