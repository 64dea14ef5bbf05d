//! Derivative-dependent Hermitian forms and their Euler-Lagrange operators.
//!
//! A form of order `m` on n-component functions is the jet quadratic
//!
//! ```text
//! Omega(x)[u] = sum_{i,j=0..m} < D^i u(x), omega_ij(x) D^j u(x) >
//! ```
//!
//! with matrix-polynomial coefficients `omega_ij`. The leading entry
//! `omega_mm` is the constant signature matrix `J = diag(I_{n-nu}, -I_nu)`,
//! the entries pairing to total derivative order `2m-1` vanish, and
//! `omega_ji = omega_ij^*` so the integrated form is Hermitian.
//!
//! Integration by parts against a test function whose (m-1)-jet vanishes
//! at both endpoints turns the form into the differential operator
//!
//! ```text
//! l(x,D) u = sum_{i,j} (-1)^i D^i ( omega_ij(x) D^j u ),
//! ```
//!
//! whose coefficients `p_0..p_2m` are computed here by exact Leibniz
//! expansion; in particular `p_2m = (-1)^m J`.

use crate::error::{Error, Result};
use crate::poly::{binomial, MatrixPolynomial, VectorPolynomial};
use crate::quad::{gauss_legendre, points_for_degree};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// A square family of matrix-polynomial coefficients indexed by
/// derivative orders `0..=m`. This is the shape shared by a form, its
/// rescalings and the lambda-derivative of a rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFamily {
    m: usize,
    n: usize,
    entries: Vec<MatrixPolynomial>,
}

impl CoefficientFamily {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            entries: vec![MatrixPolynomial::zero(n); (m + 1) * (m + 1)],
        }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &MatrixPolynomial {
        &self.entries[i * (self.m + 1) + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, p: MatrixPolynomial) {
        assert!(i <= self.m && j <= self.m, "entry index out of range");
        assert_eq!(p.dim(), self.n, "entry dimension mismatch");
        self.entries[i * (self.m + 1) + j] = p;
    }

    /// Largest polynomial degree over all entries.
    pub fn max_degree(&self) -> usize {
        self.entries.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Largest coefficient magnitude over all entries.
    pub fn max_coeff_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|p| p.max_coeff_norm())
            .fold(0.0, f64::max)
    }

    /// Evaluates the full jet-block matrix `[omega_ij(x)]` of size
    /// `(m+1)n`, block `(i,j)` holding `omega_ij(x)`.
    pub fn block_eval(&self, x: f64) -> DMatrix<Complex64> {
        let (m, n) = (self.m, self.n);
        let mut out = DMatrix::zeros((m + 1) * n, (m + 1) * n);
        for i in 0..=m {
            for j in 0..=m {
                let b = self.entry(i, j).eval(x);
                out.view_mut((i * n, j * n), (n, n)).copy_from(&b);
            }
        }
        out
    }
}

/// The signature matrix `diag(I_{n-nu}, -I_nu)`.
pub fn signature_matrix(n: usize, nu: usize) -> DMatrix<Complex64> {
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n {
        j[(k, k)] = if k < n - nu {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        };
    }
    j
}

/// A derivative-dependent Hermitian form: the coefficient family plus the
/// data `(m, n, nu)` fixing the leading signature.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    m: usize,
    n: usize,
    nu: usize,
    omega: CoefficientFamily,
}

/// Incremental constructor; unspecified entries stay zero and the leading
/// entry defaults to the signature matrix.
pub struct FormBuilder {
    form: HermitianForm,
    leading_set: bool,
}

impl FormBuilder {
    pub fn entry(mut self, i: usize, j: usize, p: MatrixPolynomial) -> Self {
        if i == self.form.m && j == self.form.m {
            self.leading_set = true;
        }
        self.form.omega.set_entry(i, j, p);
        self
    }

    /// Sets entry (i, j) and its conjugate-transpose mirror (j, i).
    pub fn entry_pair(self, i: usize, j: usize, p: MatrixPolynomial) -> Self {
        if i == j {
            return self.entry(i, j, p);
        }
        let adj = p.adjoint();
        self.entry(i, j, p).entry(j, i, adj)
    }

    pub fn build(mut self) -> HermitianForm {
        if !self.leading_set {
            let j = signature_matrix(self.form.n, self.form.nu);
            let m = self.form.m;
            self.form.omega.set_entry(m, m, MatrixPolynomial::constant(j));
        }
        self.form
    }
}

impl HermitianForm {
    /// Starts a builder for a form of derivative order `m` on `n`
    /// components with `nu` negative signature directions.
    pub fn builder(m: usize, n: usize, nu: usize) -> FormBuilder {
        assert!(m >= 1, "derivative order must be at least 1");
        assert!(n >= 1, "system dimension must be at least 1");
        assert!(nu <= n, "negative signature count cannot exceed n");
        FormBuilder {
            form: HermitianForm {
                m,
                n,
                nu,
                omega: CoefficientFamily::zeros(m, n),
            },
            leading_set: false,
        }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn negative_signature(&self) -> usize {
        self.nu
    }

    pub fn omega(&self) -> &CoefficientFamily {
        &self.omega
    }

    pub fn entry(&self, i: usize, j: usize) -> &MatrixPolynomial {
        self.omega.entry(i, j)
    }

    pub fn signature(&self) -> DMatrix<Complex64> {
        signature_matrix(self.n, self.nu)
    }

    /// Checks every structural invariant and returns one message per
    /// violation; a valid form yields an empty list.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let m = self.m;
        let j = self.signature();
        let lead = self.entry(m, m);
        if lead.degree() != 0 || lead.is_zero() || lead.coeff(0) != j {
            v.push(format!(
                "omega_{{m,m}} != diag(I_{{n-nu}}, -I_nu) for nu = {}",
                self.nu
            ));
        }
        for i in 0..=m {
            for jj in 0..=m {
                if i + jj == 2 * m - 1 && !self.entry(i, jj).is_zero() {
                    v.push(format!("omega_{{i,2m-1-i}}=0 fails at ({i},{jj})"));
                }
            }
        }
        for i in 0..=m {
            for jj in i..=m {
                let a = self.entry(i, jj);
                let b = self.entry(jj, i);
                if !a.adjoint().approx_eq(b, 0.0) {
                    v.push(format!("omega_{{{jj},{i}}} != omega_{{{i},{jj}}}^*"));
                }
            }
        }
        v
    }

    /// The rescaled family: entry `(i, j)` becomes
    /// `x -> lambda^(2m-i-j) omega_ij(lambda x)`, exact on coefficients.
    /// The leading entry keeps exponent zero and stays `J`.
    pub fn rescale(&self, lambda: f64) -> Result<HermitianForm> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange(format!(
                "rescale parameter lambda = {lambda} outside [0, 1]"
            )));
        }
        let mut omega = CoefficientFamily::zeros(self.m, self.n);
        for i in 0..=self.m {
            for j in 0..=self.m {
                let e = 2 * self.m - i - j;
                let mut factor = 1.0;
                for _ in 0..e {
                    factor *= lambda;
                }
                omega.set_entry(i, j, self.entry(i, j).scale_arg_and_mul(lambda, factor));
            }
        }
        Ok(HermitianForm {
            m: self.m,
            n: self.n,
            nu: self.nu,
            omega,
        })
    }

    /// Coefficient family of the lambda-derivative of the rescaling:
    /// entry `(i, j)` is `sum_k (e+k) lambda^(e+k-1) C_k x^k` where
    /// `e = 2m-i-j` and `C_k` are the coefficients of `omega_ij`. The
    /// `(m, m)` entry is identically zero.
    pub fn d_lambda_rescale(&self, lambda: f64) -> Result<CoefficientFamily> {
        if lambda < 0.0 || lambda > 1.0 {
            return Err(Error::OutOfRange(format!(
                "rescale derivative parameter lambda = {lambda} outside [0, 1]"
            )));
        }
        let mut fam = CoefficientFamily::zeros(self.m, self.n);
        for i in 0..=self.m {
            for j in 0..=self.m {
                let e = 2 * self.m - i - j;
                let p = self.entry(i, j);
                if p.is_zero() || (i == self.m && j == self.m) {
                    continue;
                }
                let d = p.scale_coeff_by(|k| {
                    let tot = (e + k) as f64;
                    if e + k == 0 {
                        0.0
                    } else {
                        tot * lambda.powi((e + k - 1) as i32)
                    }
                });
                fam.set_entry(i, j, d);
            }
        }
        Ok(fam)
    }

    /// Euler-Lagrange operator by exact Leibniz expansion:
    /// `p_{j+r} += (-1)^i C(i, r) omega_ij^(i-r)` over all `i, j, r<=i`.
    pub fn euler_lagrange(&self) -> DiffOperator {
        let m = self.m;
        let mut p = vec![MatrixPolynomial::zero(self.n); 2 * m + 1];
        for i in 0..=m {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..=m {
                let w = self.entry(i, j);
                if w.is_zero() {
                    continue;
                }
                for r in 0..=i {
                    let term = w
                        .derivative_n(i - r)
                        .scale(Complex64::new(sign * binomial(i, r), 0.0));
                    p[j + r] = p[j + r].add(&term);
                }
            }
        }
        DiffOperator { m, n: self.n, p }
    }

    /// The sesquilinear form `q(u, v) = int sum < D^i v, omega_ij D^j u >`,
    /// conjugate-linear in `v`, by quadrature exact for the polynomial
    /// integrand.
    pub fn sesquilinear(&self, u: &VectorPolynomial, v: &VectorPolynomial) -> Complex64 {
        let deg = u.degree() + v.degree() + self.omega.max_degree();
        let rule = gauss_legendre(points_for_degree(deg));
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let ju = u.jet(x, self.m);
            let jv = v.jet(x, self.m);
            let mut val = Complex64::new(0.0, 0.0);
            for i in 0..=self.m {
                for j in 0..=self.m {
                    let om = self.entry(i, j);
                    if om.is_zero() {
                        continue;
                    }
                    val += jv[i].dotc(&(om.eval(x) * &ju[j]));
                }
            }
            acc += val * Complex64::new(w, 0.0);
        }
        acc
    }

    /// Residual of the weak identity `q(u, v) = int < v, l u >` for a test
    /// function `v` with vanishing (m-1)-jet at both endpoints. Returns
    /// `|q(u,v) - int < v, l u >|`.
    pub fn weak_form_residual(&self, u: &VectorPolynomial, v: &VectorPolynomial) -> Result<f64> {
        if u.dim() != self.n || v.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "test functions must have {} components",
                self.n
            )));
        }
        let scale = v.max_coeff_norm().max(1.0);
        for &x in &[0.0, 1.0] {
            let jet = v.jet(x, self.m - 1);
            for (r, d) in jet.iter().enumerate() {
                if d.norm() > 1e-12 * scale {
                    return Err(Error::JetCondition(format!(
                        "D^{r} v({x}) = {:.3e} is not zero",
                        d.norm()
                    )));
                }
            }
        }
        let q = self.sesquilinear(u, v);
        let op = self.euler_lagrange();
        let deg = v.degree() + op.max_degree() + u.degree();
        let rule = gauss_legendre(points_for_degree(deg));
        let mut strong = Complex64::new(0.0, 0.0);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let lu = op.apply_at(u, x);
            strong += v.eval(x).dotc(&lu) * Complex64::new(w, 0.0);
        }
        Ok((q - strong).norm())
    }
}

/// The differential operator `l(x, D) u = sum_k p_k(x) D^k u` obtained
/// from a form by integration by parts. The leading coefficient `p_2m`
/// is the constant `(-1)^m J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffOperator {
    m: usize,
    n: usize,
    p: Vec<MatrixPolynomial>,
}

impl DiffOperator {
    pub fn order(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Coefficient `p_k`, `k = 0..=2m`.
    pub fn coefficient(&self, k: usize) -> &MatrixPolynomial {
        &self.p[k]
    }

    pub fn max_degree(&self) -> usize {
        self.p.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Value of `l u` at `x` for a polynomial `u`.
    pub fn apply_at(&self, u: &VectorPolynomial, x: f64) -> nalgebra::DVector<Complex64> {
        let jet = u.jet(x, 2 * self.m);
        let mut acc = nalgebra::DVector::zeros(self.n);
        for (k, pk) in self.p.iter().enumerate() {
            if pk.is_zero() {
                continue;
            }
            acc += pk.eval(x) * &jet[k];
        }
        acc
    }
}
