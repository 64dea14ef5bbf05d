//! Matrix- and vector-valued polynomials in one real variable.
//!
//! Coefficients are stored densely in the monomial basis, lowest degree
//! first, and all arithmetic (differentiation, rescaling of the argument,
//! linear combinations) is exact on the coefficients. The value at `x` of
//! a `MatrixPolynomial` with coefficients `C_0..C_d` is `sum_k C_k x^k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Binomial coefficient as f64; exact for the small arguments used here.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// An n-by-n complex-matrix-valued polynomial in a real variable.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    n: usize,
    coeffs: Vec<DMatrix<Complex64>>,
}

impl MatrixPolynomial {
    /// The zero polynomial of matrix dimension `n`.
    pub fn zero(n: usize) -> Self {
        Self { n, coeffs: Vec::new() }
    }

    /// A constant polynomial.
    pub fn constant(mat: DMatrix<Complex64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "coefficient matrices must be square");
        let n = mat.nrows();
        let mut p = Self { n, coeffs: vec![mat] };
        p.trim();
        p
    }

    /// Builds a polynomial from coefficient matrices `C_0..C_d`.
    pub fn from_coeffs(n: usize, coeffs: Vec<DMatrix<Complex64>>) -> Self {
        for c in &coeffs {
            assert_eq!((c.nrows(), c.ncols()), (n, n), "coefficient shape mismatch");
        }
        let mut p = Self { n, coeffs };
        p.trim();
        p
    }

    /// Scalar (1x1) polynomial from real coefficients, lowest degree first.
    pub fn scalar(coeffs: &[f64]) -> Self {
        Self::from_coeffs(
            1,
            coeffs
                .iter()
                .map(|&c| DMatrix::from_element(1, 1, Complex64::new(c, 0.0)))
                .collect(),
        )
    }

    /// `c * I_n` as a constant polynomial.
    pub fn scaled_identity(n: usize, c: Complex64) -> Self {
        Self::constant(DMatrix::from_diagonal_element(n, n, c))
    }

    fn trim(&mut self) {
        while let Some(last) = self.coeffs.last() {
            if last.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> DMatrix<Complex64> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.n, self.n))
    }

    pub fn coeffs(&self) -> &[DMatrix<Complex64>] {
        &self.coeffs
    }

    /// Horner evaluation at a real point.
    pub fn eval(&self, x: f64) -> DMatrix<Complex64> {
        let mut acc = DMatrix::zeros(self.n, self.n);
        for c in self.coeffs.iter().rev() {
            acc *= Complex64::new(x, 0.0);
            acc += c;
        }
        acc
    }

    /// Derivative with respect to the variable.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero(self.n);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Complex64::new(k as f64, 0.0))
            .collect();
        Self::from_coeffs(self.n, coeffs)
    }

    /// k-th derivative.
    pub fn derivative_n(&self, k: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.derivative();
        }
        p
    }

    /// Entry-wise conjugate transpose of every coefficient.
    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c.adjoint()).collect(),
        }
    }

    /// True when every coefficient matrix is Hermitian.
    pub fn is_hermitian_valued(&self) -> bool {
        self.coeffs.iter().all(|c| c == &c.adjoint())
    }

    /// The polynomial `x -> factor * self(scale * x)`; coefficient `k`
    /// becomes `factor * scale^k * C_k`.
    pub fn scale_arg_and_mul(&self, scale: f64, factor: f64) -> Self {
        let mut pow = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let out = c * Complex64::new(factor * pow, 0.0);
                pow *= scale;
                out
            })
            .collect();
        Self::from_coeffs(self.n, coeffs)
    }

    /// Coefficient-wise map `C_k -> weight(k) * C_k`.
    pub fn scale_coeff_by(&self, weight: impl Fn(usize) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::new(weight(k), 0.0))
            .collect();
        Self::from_coeffs(self.n, coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(len);
        for k in 0..len {
            coeffs.push(self.coeff(k) + other.coeff(k));
        }
        Self::from_coeffs(self.n, coeffs)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_coeffs(self.n, self.coeffs.iter().map(|m| m * c).collect())
    }

    /// Largest entry magnitude over all coefficients.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Coefficient-wise comparison with an absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len).all(|k| (self.coeff(k) - other.coeff(k)).iter().all(|z| z.norm() <= tol))
    }
}

/// An n-component complex-vector-valued polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPolynomial {
    n: usize,
    coeffs: Vec<DVector<Complex64>>,
}

impl VectorPolynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, coeffs: Vec::new() }
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<DVector<Complex64>>) -> Self {
        for c in &coeffs {
            assert_eq!(c.len(), n, "coefficient length mismatch");
        }
        let mut p = Self { n, coeffs };
        p.trim();
        p
    }

    /// Scalar (1-component) polynomial from real coefficients.
    pub fn scalar(coeffs: &[f64]) -> Self {
        Self::from_coeffs(
            1,
            coeffs
                .iter()
                .map(|&c| DVector::from_element(1, Complex64::new(c, 0.0)))
                .collect(),
        )
    }

    fn trim(&mut self) {
        while let Some(last) = self.coeffs.last() {
            if last.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> DVector<Complex64> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| DVector::zeros(self.n))
    }

    pub fn eval(&self, x: f64) -> DVector<Complex64> {
        let mut acc = DVector::zeros(self.n);
        for c in self.coeffs.iter().rev() {
            acc *= Complex64::new(x, 0.0);
            acc += c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero(self.n);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Complex64::new(k as f64, 0.0))
            .collect();
        Self::from_coeffs(self.n, coeffs)
    }

    /// Derivatives of all orders `0..=order`, evaluated at `x`.
    pub fn jet(&self, x: f64, order: usize) -> Vec<DVector<Complex64>> {
        let mut out = Vec::with_capacity(order + 1);
        let mut p = self.clone();
        for _ in 0..=order {
            out.push(p.eval(x));
            p = p.derivative();
        }
        out
    }

    /// Product with a scalar polynomial `w` (same variable), exact on
    /// coefficients.
    pub fn mul_scalar_poly(&self, w: &[f64]) -> Self {
        if self.is_zero() || w.is_empty() {
            return Self::zero(self.n);
        }
        let mut coeffs = vec![DVector::zeros(self.n); self.coeffs.len() + w.len() - 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            for (j, &wj) in w.iter().enumerate() {
                coeffs[k + j] += c * Complex64::new(wj, 0.0);
            }
        }
        Self::from_coeffs(self.n, coeffs)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_matches_direct_sum() {
        // p(x) = [[1,0],[0,2]] + [[0,1],[1,0]] x^2
        let c0 = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let c2 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let p = MatrixPolynomial::from_coeffs(2, vec![c0.clone(), DMatrix::zeros(2, 2), c2.clone()]);
        let x = 0.7;
        let want = c0 + c2 * c(x * x, 0.0);
        assert!((p.eval(x) - want).norm() < 1e-15);
    }

    #[test]
    fn derivative_drops_degree() {
        let p = MatrixPolynomial::scalar(&[1.0, 2.0, 3.0]);
        assert_eq!(p.degree(), 2);
        let d = p.derivative();
        assert_eq!(d.degree(), 1);
        assert!((d.eval(0.5)[(0, 0)] - c(2.0 + 3.0, 0.0)).norm() < 1e-15);
        let constant = MatrixPolynomial::scalar(&[4.0]);
        assert!(constant.derivative().is_zero());
    }

    #[test]
    fn hermitian_detection_is_coefficient_wise() {
        let i = c(0.0, 1.0);
        let herm = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), i, -i, c(3.0, 0.0)]);
        let p = MatrixPolynomial::from_coeffs(2, vec![herm.clone()]);
        assert!(p.is_hermitian_valued());
        let not = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), i, i, c(3.0, 0.0)]);
        assert!(!MatrixPolynomial::from_coeffs(2, vec![not]).is_hermitian_valued());
    }

    #[test]
    fn scale_arg_substitutes_lambda_x() {
        // p(x) = x, p(0.5 x) scaled by 0.25 -> x/8
        let p = MatrixPolynomial::scalar(&[0.0, 1.0]);
        let q = p.scale_arg_and_mul(0.5, 0.25);
        assert!(q.approx_eq(&MatrixPolynomial::scalar(&[0.0, 0.125]), 0.0));
    }

    #[test]
    fn vector_jet_and_scalar_product() {
        // u(x) = (x(1-x), 0) has jet (0, 1) at 0 and (0, -1) at 1
        let u = VectorPolynomial::scalar(&[0.0, 1.0, -1.0]);
        let j0 = u.jet(0.0, 1);
        let j1 = u.jet(1.0, 1);
        assert!(j0[0][0].norm() < 1e-15 && (j0[1][0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(j1[0][0].norm() < 1e-15 && (j1[1][0] + c(1.0, 0.0)).norm() < 1e-15);
        let w = u.mul_scalar_poly(&[0.0, 1.0]); // x * u
        assert_eq!(w.degree(), 3);
        assert!((w.eval(0.5)[0] - c(0.5 * 0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
    }
}
