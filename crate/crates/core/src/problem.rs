//! Problem-file schema: JSON in, validated Hermitian form out.
//!
//! Complex scalars are `[re, im]` pairs, matrices are row-major `n x n`
//! arrays of pairs, and a polynomial is the list of its coefficient
//! matrices from degree zero upward. Only nonzero entries of the
//! coefficient family need to be present; the leading entry defaults to
//! the signature matrix.

use crate::error::{Error, Result};
use crate::form::HermitianForm;
use crate::galerkin::FlowOptions;
use crate::ode::OdeOptions;
use crate::poly::MatrixPolynomial;
use crate::shooting::ShootingOptions;
use crate::winding::WindingOptions;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One coefficient entry `omega_ij` as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OmegaEntry {
    pub i: usize,
    pub j: usize,
    /// Coefficient matrices `C_0..C_d`; each matrix is `n` rows of `n`
    /// `[re, im]` pairs.
    pub poly: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Solver options carried by a problem file; every field is optional and
/// falls back to the documented default.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ProblemOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instant_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strip_height: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow_eigenvalues: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// On-disk description of a problem.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    pub m: usize,
    pub n: usize,
    pub nu: usize,
    pub omega: Vec<OmegaEntry>,
    #[serde(default)]
    pub options: ProblemOptions,
}

/// Resolved solver settings after merging file options, CLI flags and
/// defaults.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub basis_n: usize,
    pub flow: FlowOptions,
    pub shooting: ShootingOptions,
    pub winding: WindingOptions,
    pub instant_tol: f64,
    pub flow_eigenvalues: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            basis_n: 24,
            flow: FlowOptions::default(),
            shooting: ShootingOptions::default(),
            winding: WindingOptions::default(),
            instant_tol: 1e-6,
            flow_eigenvalues: 8,
            seed: 0,
        }
    }
}

impl ProblemFile {
    /// Applies the file's option block on top of the defaults.
    pub fn solver_options(&self) -> SolverOptions {
        let mut s = SolverOptions::default();
        let o = &self.options;
        if let Some(v) = o.basis_n {
            s.basis_n = v;
        }
        if let Some(v) = o.grid {
            s.flow.grid = v;
        }
        if let Some(v) = o.instant_tol {
            s.instant_tol = v;
        }
        if let Some(v) = o.contour_samples {
            s.winding.samples_per_side = v;
        }
        if let Some(v) = o.strip_height {
            s.winding.height = v;
        }
        if let Some(v) = o.ode_abs_tol {
            s.shooting.ode.abs_tol = v;
        }
        if let Some(v) = o.ode_rel_tol {
            s.shooting.ode.rel_tol = v;
        }
        if let Some(v) = o.flow_eigenvalues {
            s.flow_eigenvalues = v;
        }
        if let Some(v) = o.seed {
            s.seed = v;
        }
        s
    }

    /// Builds and validates the Hermitian form; any invariant violation
    /// fails the load with the full violation list.
    pub fn to_form(&self) -> Result<HermitianForm> {
        if self.m < 1 || self.n < 1 {
            return Err(Error::InvalidForm(vec![format!(
                "m = {} and n = {} must be at least 1",
                self.m, self.n
            )]));
        }
        if self.nu > self.n {
            return Err(Error::InvalidForm(vec![format!(
                "nu = {} exceeds n = {}",
                self.nu, self.n
            )]));
        }
        let mut b = HermitianForm::builder(self.m, self.n, self.nu);
        for e in &self.omega {
            if e.i > self.m || e.j > self.m {
                return Err(Error::InvalidForm(vec![format!(
                    "entry ({}, {}) outside 0..={}",
                    e.i, e.j, self.m
                )]));
            }
            let mut coeffs = Vec::with_capacity(e.poly.len());
            for (k, mat) in e.poly.iter().enumerate() {
                if mat.len() != self.n || mat.iter().any(|row| row.len() != self.n) {
                    return Err(Error::InvalidForm(vec![format!(
                        "coefficient {k} of entry ({}, {}) is not {n} x {n}",
                        e.i,
                        e.j,
                        n = self.n
                    )]));
                }
                let flat: Vec<Complex64> = mat
                    .iter()
                    .flat_map(|row| row.iter().map(|p| Complex64::new(p[0], p[1])))
                    .collect();
                coeffs.push(DMatrix::from_row_slice(self.n, self.n, &flat));
            }
            b = b.entry(e.i, e.j, MatrixPolynomial::from_coeffs(self.n, coeffs));
        }
        let form = b.build();
        let violations = form.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidForm(violations));
        }
        Ok(form)
    }

    /// Rebuilds the on-disk description of a form, listing every nonzero
    /// entry in row-major order.
    pub fn from_form(form: &HermitianForm, options: ProblemOptions) -> Self {
        let m = form.order();
        let n = form.dim();
        let mut omega = Vec::new();
        for i in 0..=m {
            for j in 0..=m {
                let p = form.entry(i, j);
                if p.is_zero() {
                    continue;
                }
                let poly = p
                    .coeffs()
                    .iter()
                    .map(|c| {
                        (0..n)
                            .map(|r| (0..n).map(|cc| [c[(r, cc)].re, c[(r, cc)].im]).collect())
                            .collect()
                    })
                    .collect();
                omega.push(OmegaEntry { i, j, poly });
            }
        }
        Self {
            m,
            n,
            nu: form.negative_signature(),
            omega,
            options,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidForm(vec![format!("parse error: {e}")]))
    }
}
