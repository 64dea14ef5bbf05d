//! Closed-form reference problems and the seeded random-form generator.
//!
//! The four fixtures have hand-derivable instants and indices:
//!
//! * P1 `|u'|^2 - (2.5 pi)^2 |u|^2`: Dirichlet sine spectrum, instants
//!   at 0.4 and 0.8, index +2.
//! * P2 decoupled indefinite pair of P1 and P3 blocks: instants 0.4,
//!   2/3, 0.8 with mixed crossing signs, index +1.
//! * P3 `-|u'|^2 + (1.5 pi)^2 |u|^2`: one upward crossing at 2/3,
//!   index -1.
//! * P4 clamped fourth-order beam `|u''|^2 - 6^4 |u|^2`: single instant
//!   at kappa_1/6 where `cos(kappa) cosh(kappa) = 1`, index +1.

use crate::form::HermitianForm;
use crate::poly::MatrixPolynomial;
use crate::problem::{ProblemFile, ProblemOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

const PI: f64 = std::f64::consts::PI;

/// A reference problem with its expected instants and index.
#[derive(Debug, Clone)]
pub struct OracleProblem {
    pub name: &'static str,
    pub file: ProblemFile,
    pub instants: Vec<f64>,
    pub mu: i32,
    /// Expected crossing signatures in instant order, when all crossings
    /// are regular.
    pub signatures: Vec<i32>,
}

impl OracleProblem {
    pub fn form(&self) -> HermitianForm {
        self.file.to_form().expect("oracle fixtures are valid")
    }
}

/// First positive root of `cos(k) cosh(k) = 1` by bisection on [4, 5].
pub fn clamped_beam_root() -> f64 {
    let f = |k: f64| k.cos() * k.cosh() - 1.0;
    let (mut a, mut b) = (4.0f64, 5.0f64);
    assert!(f(a) < 0.0 && f(b) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

pub fn p1() -> OracleProblem {
    let c = (2.5 * PI).powi(2);
    let form = HermitianForm::builder(1, 1, 0)
        .entry(0, 0, MatrixPolynomial::scalar(&[-c]))
        .build();
    OracleProblem {
        name: "p1",
        file: ProblemFile::from_form(&form, ProblemOptions::default()),
        instants: vec![0.4, 0.8],
        mu: 2,
        signatures: vec![-1, -1],
    }
}

pub fn p2() -> OracleProblem {
    let a = (2.5 * PI).powi(2);
    let b = (1.5 * PI).powi(2);
    let mut w00 = DMatrix::zeros(2, 2);
    w00[(0, 0)] = Complex64::new(-a, 0.0);
    w00[(1, 1)] = Complex64::new(b, 0.0);
    let form = HermitianForm::builder(1, 2, 1)
        .entry(0, 0, MatrixPolynomial::constant(w00))
        .build();
    OracleProblem {
        name: "p2",
        file: ProblemFile::from_form(&form, ProblemOptions::default()),
        instants: vec![0.4, 2.0 / 3.0, 0.8],
        mu: 1,
        signatures: vec![-1, 1, -1],
    }
}

pub fn p3() -> OracleProblem {
    let b = (1.5 * PI).powi(2);
    let form = HermitianForm::builder(1, 1, 1)
        .entry(0, 0, MatrixPolynomial::scalar(&[b]))
        .build();
    OracleProblem {
        name: "p3",
        file: ProblemFile::from_form(&form, ProblemOptions::default()),
        instants: vec![2.0 / 3.0],
        mu: -1,
        signatures: vec![1],
    }
}

pub fn p4() -> OracleProblem {
    let c = 6.0f64.powi(4);
    let form = HermitianForm::builder(2, 1, 0)
        .entry(0, 0, MatrixPolynomial::scalar(&[-c]))
        .build();
    OracleProblem {
        name: "p4",
        file: ProblemFile::from_form(&form, ProblemOptions::default()),
        instants: vec![clamped_beam_root() / 6.0],
        mu: 1,
        signatures: vec![-1],
    }
}

/// The full fixture list P1..P4.
pub fn corpus() -> Vec<OracleProblem> {
    vec![p1(), p2(), p3(), p4()]
}

fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    for r in 0..n {
        m[(r, r)] = Complex64::new(rng.gen_range(-scale..scale), 0.0);
        for c in r + 1..n {
            let z = Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    m
}

/// A random valid form: `m <= max_m`, `n <= max_n`, any admissible `nu`,
/// polynomial degrees up to `max_degree` and coefficient entries bounded
/// by `coeff_norm`. Entries forced to vanish by the structure constraints
/// are left zero; everything else gets a Hermitian-pair of random
/// polynomials.
pub fn random_form(
    rng: &mut impl Rng,
    max_m: usize,
    max_n: usize,
    max_degree: usize,
    coeff_norm: f64,
) -> HermitianForm {
    let m = rng.gen_range(1..=max_m);
    let n = rng.gen_range(1..=max_n);
    let nu = rng.gen_range(0..=n);
    let mut b = HermitianForm::builder(m, n, nu);
    for i in 0..=m {
        for j in i..=m {
            if i == m && j == m {
                continue;
            }
            if i + j == 2 * m - 1 {
                continue;
            }
            let deg = rng.gen_range(0..=max_degree);
            let coeffs: Vec<DMatrix<Complex64>> = (0..=deg)
                .map(|_| {
                    if i == j {
                        random_hermitian(rng, n, coeff_norm)
                    } else {
                        DMatrix::from_fn(n, n, |_, _| {
                            Complex64::new(
                                rng.gen_range(-coeff_norm..coeff_norm),
                                rng.gen_range(-coeff_norm..coeff_norm),
                            )
                        })
                    }
                })
                .collect();
            let p = MatrixPolynomial::from_coeffs(n, coeffs);
            if i == j {
                // diagonal entries must be Hermitian-valued for the pair
                // condition omega_ii = omega_ii^* to hold
                b = b.entry(i, j, p);
            } else {
                b = b.entry_pair(i, j, p);
            }
        }
    }
    b.build()
}

/// Shifts `omega_00` by `amount * I`; used to retry a problem whose
/// endpoint form came out degenerate.
pub fn perturb_zero_order(form: &HermitianForm, amount: f64) -> HermitianForm {
    let n = form.dim();
    let mut b = HermitianForm::builder(form.order(), n, form.negative_signature());
    for i in 0..=form.order() {
        for j in 0..=form.order() {
            let mut p = form.entry(i, j).clone();
            if i == 0 && j == 0 {
                p = p.add(&MatrixPolynomial::scaled_identity(
                    n,
                    Complex64::new(amount, 0.0),
                ));
            }
            if !p.is_zero() {
                b = b.entry(i, j, p);
            }
        }
    }
    b.build()
}
