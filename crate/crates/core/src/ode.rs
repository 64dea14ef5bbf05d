//! Adaptive Dormand-Prince 5(4) integration of complex matrix ODEs.
//!
//! The state is a dense complex matrix (all shooting columns advance
//! together); the embedded 4th-order solution drives the step-size
//! controller. FSAL: the last stage of an accepted step seeds the next.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Tolerances and limits for the integrator.
#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// difference between the 5th- and 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `Y' = f(x, Y)` from `x0` to `x1` (`x1 > x0`), returning the
/// terminal state. `f` writes the derivative into its third argument.
pub fn integrate<F>(f: F, y0: DMatrix<Complex64>, x0: f64, x1: f64, opts: &OdeOptions) -> Result<DMatrix<Complex64>>
where
    F: Fn(f64, &DMatrix<Complex64>, &mut DMatrix<Complex64>),
{
    let span = x1 - x0;
    assert!(span > 0.0, "integration span must be positive");
    let (rows, cols) = (y0.nrows(), y0.ncols());
    let mut k: Vec<DMatrix<Complex64>> = (0..7).map(|_| DMatrix::zeros(rows, cols)).collect();
    let mut y = y0;
    let mut x = x0;
    let mut h = span / 100.0;
    let mut stage = DMatrix::zeros(rows, cols);
    let mut y_new = DMatrix::zeros(rows, cols);
    f(x, &y, &mut k[0]);
    let mut steps = 0usize;
    while x < x1 {
        if steps >= opts.max_steps {
            return Err(Error::Numerical(format!(
                "integrator exceeded {} steps",
                opts.max_steps
            )));
        }
        steps += 1;
        if x + h > x1 {
            h = x1 - x;
        }
        if h < 1e-14 * span {
            return Err(Error::StepUnderflow { x });
        }
        // stages 2..7
        for s in 0..6 {
            stage.copy_from(&y);
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let a = A[s][j];
                if a != 0.0 {
                    stage.zip_apply(kj, |acc, kv| *acc += kv * Complex64::new(h * a, 0.0));
                }
            }
            let (head, tail) = k.split_at_mut(s + 1);
            let _ = head;
            f(x + C[s] * h, &stage, &mut tail[0]);
        }
        // 5th-order solution is the last stage evaluation point (FSAL)
        y_new.copy_from(&y);
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[5][j];
            if a != 0.0 {
                y_new.zip_apply(kj, |acc, kv| *acc += kv * Complex64::new(h * a, 0.0));
            }
        }
        // scaled RMS error estimate
        let mut err_sq = 0.0;
        let count = (rows * cols) as f64;
        for idx in 0..rows * cols {
            let mut e = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[idx] * Complex64::new(h * E[j], 0.0);
                }
            }
            let sc = opts.abs_tol + opts.rel_tol * y[idx].norm().max(y_new[idx].norm());
            let r = e.norm() / sc;
            err_sq += r * r;
        }
        let err = (err_sq / count).sqrt();
        if err <= 1.0 {
            x += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    Ok(y)
}
