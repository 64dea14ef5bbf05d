//! Shooting construction of the transition matrix and its determinant.
//!
//! For `z = lambda + i s` the operator is the Euler-Lagrange operator of
//! the form rescaled to `lambda`, shifted by `i s`. The Cauchy problem
//! starts with zero (m-1)-jet and the derivative slots `m..2m-1` filled
//! with the standard basis of C^{nm}; the transition matrix maps that
//! initial data to the terminal (m-1)-jet. Its determinant is carried as
//! a (log-magnitude, phase) pair so large solution growth cannot
//! overflow anything downstream.

use crate::error::{Error, Result};
use crate::form::{DiffOperator, HermitianForm};
use crate::ode::{integrate, OdeOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Options for the transition-matrix solve.
#[derive(Debug, Clone, Default)]
pub struct ShootingOptions {
    pub ode: OdeOptions,
}

/// First-order companion reduction of `l_lambda u + i s u = 0`, acting on
/// the stacked jet `(u, u', ..., u^(2m-1))` of dimension `2mn`.
pub struct FirstOrderSystem {
    op: DiffOperator,
    s: f64,
    lead_inv: DMatrix<Complex64>,
}

impl FirstOrderSystem {
    pub fn dim(&self) -> usize {
        2 * self.op.order() * self.op.dim()
    }

    pub fn order(&self) -> usize {
        self.op.order()
    }

    pub fn system_dim(&self) -> usize {
        self.op.dim()
    }

    /// Writes the derivative of the stacked state into `out`; the state
    /// may carry several columns.
    pub fn rhs(&self, x: f64, y: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let n = self.op.dim();
        let m = self.op.order();
        let blocks = 2 * m;
        let cols = y.ncols();
        // shift blocks: (Y_r)' = Y_{r+1}
        out.view_mut((0, 0), ((blocks - 1) * n, cols))
            .copy_from(&y.view((n, 0), ((blocks - 1) * n, cols)));
        // bottom block: -p_2m^{-1} ( sum_k p_k(x) Y_k + i s Y_0 )
        let mut acc = DMatrix::zeros(n, cols);
        for k in 0..blocks {
            let pk = self.op.coefficient(k);
            if pk.is_zero() {
                continue;
            }
            acc += pk.eval(x) * y.view((k * n, 0), (n, cols));
        }
        acc += y.view((0, 0), (n, cols)) * Complex64::new(0.0, self.s);
        let bottom = &self.lead_inv * acc * Complex64::new(-1.0, 0.0);
        out.view_mut(((blocks - 1) * n, 0), (n, cols)).copy_from(&bottom);
    }

    /// The full companion matrix `A(x)`; intended for inspection and
    /// tests, the integrator uses the block `rhs` directly.
    pub fn matrix(&self, x: f64) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut a = DMatrix::zeros(d, d);
        let id = DMatrix::identity(d, d);
        let mut col = DMatrix::zeros(d, d);
        self.rhs(x, &id, &mut col);
        a.copy_from(&col);
        a
    }
}

/// Companion reduction of a (rescaled) operator with the spectral shift
/// `i s`. Requires the invertible constant leading coefficient produced
/// by the Euler-Lagrange conversion.
pub fn assemble_system(op: DiffOperator, s: f64) -> FirstOrderSystem {
    let m = op.order();
    let lead = op.coefficient(2 * m);
    assert_eq!(lead.degree(), 0, "leading coefficient must be constant");
    let mat = lead.coeff(0);
    // p_2m is diag(+-1); its inverse is itself
    let lead_inv = mat;
    FirstOrderSystem { op, s, lead_inv }
}

/// Transition matrix together with the determinant data.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub z: Complex64,
    pub r: DMatrix<Complex64>,
    pub log_det: f64,
    pub phase: f64,
}

fn wrap_phase(mut p: f64) -> f64 {
    use std::f64::consts::PI;
    p = p.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Log-magnitude and phase of `det M` via partial-pivot LU. A singular
/// pivot yields `log_det = -inf`.
pub fn log_det_lu(m: &DMatrix<Complex64>) -> (f64, f64) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut log_det = 0.0;
    let mut phase = 0.0;
    let mut swaps = 0usize;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[(col, col)].norm();
        for r in col + 1..n {
            let v = a[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if piv != col {
            a.swap_rows(piv, col);
            swaps += 1;
        }
        let p = a[(col, col)];
        log_det += p.norm().ln();
        phase += p.arg();
        for r in col + 1..n {
            let f = a[(r, col)] / p;
            for c in col + 1..n {
                let v = a[(col, c)];
                a[(r, c)] -= f * v;
            }
        }
    }
    if swaps % 2 == 1 {
        phase += std::f64::consts::PI;
    }
    (log_det, wrap_phase(phase))
}

/// Integrates the Cauchy columns of `l_lambda u + i s u = 0` across [0, 1]
/// and extracts the terminal (m-1)-jet map.
pub fn transition(form: &HermitianForm, z: Complex64, opts: &ShootingOptions) -> Result<TransitionMatrix> {
    let lambda = z.re;
    let s = z.im;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange(format!(
            "Re z = {lambda} outside [0, 1]"
        )));
    }
    let m = form.order();
    let n = form.dim();
    let op = form.rescale(lambda)?.euler_lagrange();
    let sys = assemble_system(op, s);
    let dim = sys.dim();
    let cols = n * m;
    let mut y0 = DMatrix::zeros(dim, cols);
    // initial jets: e_k in the derivative slots m..2m-1
    for k in 0..cols {
        y0[(m * n + k, k)] = Complex64::new(1.0, 0.0);
    }
    let y1 = integrate(|x, y, dy| sys.rhs(x, y, dy), y0, 0.0, 1.0, &opts.ode)?;
    let r = y1.view((0, 0), (cols, cols)).into_owned();
    let (log_det, phase) = log_det_lu(&r);
    Ok(TransitionMatrix { z, r, log_det, phase })
}

/// `(log |rho|, arg rho)` of the shooting determinant `rho(z) = det R_z`.
pub fn rho(form: &HermitianForm, z: Complex64, opts: &ShootingOptions) -> Result<(f64, f64)> {
    let t = transition(form, z, opts)?;
    Ok((t.log_det, t.phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MatrixPolynomial as MP;

    fn p1_form(c: f64) -> HermitianForm {
        HermitianForm::builder(1, 1, 0)
            .entry(0, 0, MP::scalar(&[-c]))
            .build()
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn companion_matrix_free_particle() {
        // l u = -u'' (c = 0): A = [[0, 1], [0, 0]]
        let op = p1_form(0.0).euler_lagrange();
        let sys = assemble_system(op, 0.0);
        let a = sys.matrix(0.3);
        assert!((a[(0, 0)].norm()) < 1e-15);
        assert!((a[(0, 1)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((a[(1, 0)].norm()) < 1e-15);
        assert!((a[(1, 1)].norm()) < 1e-15);
    }

    #[test]
    fn companion_matrix_with_potential_and_shift() {
        // l u = -u'' - c u, s = 1: u'' = -c u + i s u
        let c = 4.0;
        let op = p1_form(c).euler_lagrange();
        let sys = assemble_system(op, 1.0);
        let a = sys.matrix(0.5);
        assert!((a[(1, 0)] - c64(-c, 1.0)).norm() < 1e-14);
        // residual check: numerically integrated solution satisfies the ODE
        let sol = integrate(
            |x, y, dy| sys.rhs(x, y, dy),
            DMatrix::from_row_slice(2, 1, &[c64(0.0, 0.0), c64(1.0, 0.0)]),
            0.0,
            1.0,
            &OdeOptions::default(),
        )
        .unwrap();
        // u(1) for u'' = (-c + i) u: with k^2 = c - i, u = sin(kx)/k
        let k = (c64(c, -1.0)).sqrt();
        let want = k.sin() / k;
        assert!((sol[(0, 0)] - want).norm() < 1e-9, "{:?} vs {want:?}", sol[(0, 0)]);
    }

    #[test]
    fn transition_free_particle_is_identity() {
        // c = 0: rescaled operator stays -u''; u(x) = w x, so R = [1]
        let f = p1_form(0.0);
        for lam in [0.2, 0.7, 1.0] {
            let t = transition(&f, c64(lam, 0.0), &ShootingOptions::default()).unwrap();
            assert!((t.r[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-9);
            assert!(t.log_det.abs() < 1e-9);
            assert!(t.phase.abs() < 1e-9);
        }
    }

    #[test]
    fn transition_detects_conjugate_instant() {
        // P1 with c = (2.5 pi)^2 has instants at 0.4 and 0.8: det R ~ 0
        let c = (2.5 * std::f64::consts::PI).powi(2);
        let f = p1_form(c);
        let t = transition(&f, c64(0.4, 0.0), &ShootingOptions::default()).unwrap();
        let scale = t.r.norm();
        assert!(
            t.log_det.exp() <= 1e-6 * scale.max(1.0),
            "|det| = {}",
            t.log_det.exp()
        );
        // closed form away from the instant: u(1) = sin(k)/k, k = lambda sqrt(c)
        let lam = 0.6;
        let t = transition(&f, c64(lam, 0.0), &ShootingOptions::default()).unwrap();
        let k = lam * c.sqrt();
        let want = k.sin() / k;
        assert!((t.r[(0, 0)].re - want).abs() < 1e-8);
        assert!(t.log_det.exp() > 1e-3);
    }

    #[test]
    fn transition_lambda_zero_corner() {
        // rescaled operator at lambda = 0 is constant-coefficient; for
        // m = 1 the solution is u = w x and det R = 1
        let c = (2.5 * std::f64::consts::PI).powi(2);
        let t = transition(&p1_form(c), c64(0.0, 0.0), &ShootingOptions::default()).unwrap();
        assert!((t.log_det.exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn determinant_pair_matches_direct_determinant() {
        let f = HermitianForm::builder(1, 2, 1)
            .entry(
                0,
                0,
                MP::from_coeffs(
                    2,
                    vec![DMatrix::from_row_slice(
                        2,
                        2,
                        &[c64(-30.0, 0.0), c64(1.0, 0.5), c64(1.0, -0.5), c64(10.0, 0.0)],
                    )],
                ),
            )
            .build();
        let t = transition(&f, c64(0.8, 0.3), &ShootingOptions::default()).unwrap();
        let direct = t.r.clone().lu().determinant();
        let recon = Complex64::from_polar(t.log_det.exp(), t.phase);
        assert!(
            (direct - recon).norm() <= 1e-10 * direct.norm().max(1e-30),
            "{direct:?} vs {recon:?}"
        );
    }

    #[test]
    fn rho_conjugation_symmetry() {
        let c = (1.7 * std::f64::consts::PI).powi(2);
        let f = p1_form(c);
        let opts = ShootingOptions::default();
        for &(lam, s) in &[(0.3, 0.4), (0.55, 0.9), (0.9, 0.15), (0.15, 1.0)] {
            let (la, pa) = rho(&f, c64(lam, s), &opts).unwrap();
            let (lb, pb) = rho(&f, c64(lam, -s), &opts).unwrap();
            assert!((la - lb).abs() < 1e-8 * (1.0 + la.abs()));
            assert!((pa + pb).abs() < 1e-7, "phases {pa} {pb}");
        }
    }

    #[test]
    fn rho_finite_off_axis() {
        // off the real axis the operator is invertible, so rho stays finite
        let c = (2.5 * std::f64::consts::PI).powi(2);
        let f = p1_form(c);
        let (lm, _) = rho(&f, c64(0.4, 0.5), &ShootingOptions::default()).unwrap();
        assert!(lm.is_finite());
        let (lm1, _) = rho(&f, c64(0.6, 0.0), &ShootingOptions::default()).unwrap();
        assert!(lm1.exp() > 1e-3);
    }

    #[test]
    fn rho_converges_under_tolerance_halving() {
        let c = (2.2 * std::f64::consts::PI).powi(2);
        let f = p1_form(c);
        let loose = ShootingOptions::default();
        let tight = ShootingOptions {
            ode: OdeOptions {
                abs_tol: 5e-12,
                rel_tol: 5e-11,
                max_steps: 1_000_000,
            },
        };
        for &(lam, s) in &[
            (0.1, 0.5),
            (0.35, -0.2),
            (0.62, 0.0),
            (0.77, 0.9),
            (0.95, -0.6),
        ] {
            let (a, _) = rho(&f, c64(lam, s), &loose).unwrap();
            let (b, _) = rho(&f, c64(lam, s), &tight).unwrap();
            assert!((a - b).abs() <= 1e-6, "log-mag drift {} at ({lam},{s})", (a - b).abs());
        }
    }

    #[test]
    fn log_det_lu_handles_permutations() {
        let m = DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(0.0, 0.0)]);
        let (lm, ph) = log_det_lu(&m);
        // det = -6
        assert!((lm - 6.0f64.ln()).abs() < 1e-12);
        assert!((ph - std::f64::consts::PI).abs() < 1e-12);
    }
}
