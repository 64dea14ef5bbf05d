//! Galerkin discretization of the rescaled form family and the spectral
//! flow of the resulting Hermitian matrix path.
//!
//! The basis on each component is `phi_k(x) = x^m (1-x)^m L_k(2x - 1)`
//! with Legendre factors, so every basis function has vanishing (m-1)-jet
//! at both endpoints and all integrands are polynomials integrated
//! exactly by Gauss-Legendre rules. Basis values at quadrature nodes are
//! tabulated through the Legendre three-term and derivative recurrences;
//! the monomial coefficient expansion is kept only for low mode numbers,
//! where it is well conditioned, as an independent cross-check.
//!
//! The regularized Morse index is the endpoint inertia difference
//! `n_-(Q_1) - n_-(Q_0)`, validated crossing by crossing against the
//! signatures of the crossing forms `K* Q'_lambda K` on the kernels.

use crate::eigen::{hermitian_eigen, hermitian_eigenvalues};
use crate::error::{Error, Result};
use crate::form::{CoefficientFamily, HermitianForm};
use crate::poly::binomial;
use crate::quad::{gauss_legendre, points_for_degree};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

/// Polynomial basis of the m-th order Dirichlet space, `modes` functions
/// per component over `n` components.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    m: usize,
    n: usize,
    modes: usize,
    gram_condition: f64,
}

/// Tabulated derivative values `vals[r][(k, q)] = D^r phi_k(x_q)`.
struct BasisTable {
    vals: Vec<DMatrix<f64>>,
}

impl GalerkinBasis {
    pub fn new(m: usize, n: usize, modes: usize) -> Self {
        assert!(m >= 1 && n >= 1 && modes >= 1);
        let mut basis = Self {
            m,
            n,
            modes,
            gram_condition: 0.0,
        };
        basis.gram_condition = basis.estimate_gram_condition();
        basis
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Total discretization dimension `modes * n`.
    pub fn total_dim(&self) -> usize {
        self.modes * self.n
    }

    /// Degree of the highest basis polynomial.
    pub fn max_poly_degree(&self) -> usize {
        2 * self.m + self.modes - 1
    }

    /// Condition estimate of the H^m Gram matrix recorded at build time.
    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }

    /// Monomial coefficients of `x^m (1-x)^m`, exact.
    fn weight_coeffs(&self) -> Vec<f64> {
        let m = self.m;
        let mut c = vec![0.0; 2 * m + 1];
        for j in 0..=m {
            c[m + j] = if j % 2 == 0 { binomial(m, j) } else { -binomial(m, j) };
        }
        c
    }

    /// Exact monomial coefficients of `phi_k`; reliable only for small
    /// mode numbers, where the shifted-Legendre coefficients stay modest.
    pub fn monomial_coeffs(&self, k: usize) -> Vec<f64> {
        // L_k(2x-1) by the coefficient recurrence
        let mut prev = vec![1.0];
        if k == 0 {
            return convolve(&self.weight_coeffs(), &prev);
        }
        let mut cur = vec![-1.0, 2.0];
        for j in 1..k {
            // L_{j+1} = ((2j+1)(2x-1) L_j - j L_{j-1}) / (j+1)
            let mut next = vec![0.0; cur.len() + 1];
            for (i, &c) in cur.iter().enumerate() {
                next[i] -= (2 * j + 1) as f64 * c;
                next[i + 1] += 2.0 * (2 * j + 1) as f64 * c;
            }
            for (i, &c) in prev.iter().enumerate() {
                next[i] -= j as f64 * c;
            }
            for v in next.iter_mut() {
                *v /= (j + 1) as f64;
            }
            prev = cur;
            cur = next;
        }
        convolve(&self.weight_coeffs(), &cur)
    }

    /// Derivative values of all basis functions at the given nodes, by
    /// the Legendre recurrences (stable at any mode count).
    fn tabulate(&self, nodes: &[f64]) -> BasisTable {
        let (m, modes) = (self.m, self.modes);
        let nq = nodes.len();
        // weight derivatives W[a][q]
        let mut wc = self.weight_coeffs();
        let mut weight = vec![vec![0.0; nq]; m + 1];
        for wa in weight.iter_mut() {
            for (q, &x) in nodes.iter().enumerate() {
                wa[q] = horner(&wc, x);
            }
            wc = differentiate(&wc);
        }
        let mut vals = vec![DMatrix::zeros(modes, nq); m + 1];
        let mut leg = vec![vec![0.0; modes]; m + 1];
        for (q, &x) in nodes.iter().enumerate() {
            let t = 2.0 * x - 1.0;
            // leg[b][k] = d^b/dt^b L_k(t)
            for b in 0..=m {
                leg[b][0] = if b == 0 { 1.0 } else { 0.0 };
                if modes > 1 {
                    leg[b][1] = match b {
                        0 => t,
                        1 => 1.0,
                        _ => 0.0,
                    };
                }
            }
            for k in 1..modes.saturating_sub(1) {
                leg[0][k + 1] = ((2 * k + 1) as f64 * t * leg[0][k] - k as f64 * leg[0][k - 1])
                    / (k + 1) as f64;
                for b in 1..=m {
                    leg[b][k + 1] = (2 * k + 1) as f64 * leg[b - 1][k] + leg[b][k - 1];
                }
            }
            for r in 0..=m {
                for k in 0..modes {
                    let mut v = 0.0;
                    for a in 0..=r {
                        let b = r - a;
                        v += binomial(r, a) * weight[a][q] * 2f64.powi(b as i32) * leg[b][k];
                    }
                    vals[r][(k, q)] = v;
                }
            }
        }
        BasisTable { vals }
    }

    /// L2 Gram matrix of the full vector-valued basis.
    pub fn gram_l2(&self) -> DMatrix<Complex64> {
        let rule = gauss_legendre(points_for_degree(2 * self.max_poly_degree()));
        let tab = self.tabulate(&rule.nodes);
        let modes = self.modes;
        let mut g = DMatrix::<f64>::zeros(modes, modes);
        for (q, &w) in rule.weights.iter().enumerate() {
            for k in 0..modes {
                let a = tab.vals[0][(k, q)];
                for l in 0..modes {
                    g[(k, l)] += w * a * tab.vals[0][(l, q)];
                }
            }
        }
        expand_blocks(&g.map(|v| Complex64::new(v, 0.0)), self.n)
    }

    fn estimate_gram_condition(&self) -> f64 {
        let rule = gauss_legendre(points_for_degree(2 * self.max_poly_degree()));
        let tab = self.tabulate(&rule.nodes);
        let modes = self.modes;
        let mut g = DMatrix::<Complex64>::zeros(modes, modes);
        for (q, &w) in rule.weights.iter().enumerate() {
            for r in 0..=self.m {
                for k in 0..modes {
                    let a = tab.vals[r][(k, q)];
                    for l in 0..modes {
                        g[(k, l)] += Complex64::new(w * a * tab.vals[r][(l, q)], 0.0);
                    }
                }
            }
        }
        let ev = hermitian_eigenvalues(&g);
        let lo = ev.first().copied().unwrap_or(0.0).abs();
        let hi = ev.last().copied().unwrap_or(0.0).abs();
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn differentiate(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Tensors a scalar mode matrix with the component identity: entry
/// `(k, l)` becomes the block `g[(k,l)] I_n`.
fn expand_blocks(g: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    let modes = g.nrows();
    let mut out = DMatrix::zeros(modes * n, modes * n);
    for k in 0..modes {
        for l in 0..modes {
            for e in 0..n {
                out[(k * n + e, l * n + e)] = g[(k, l)];
            }
        }
    }
    out
}

/// Assembles the Hermitian matrix of a coefficient family on the basis:
/// `Q[(k,e),(l,f)] = int sum_ij D^i phi_k . omega_ij[e,f] . D^j phi_l`,
/// symmetrized after quadrature.
pub fn assemble_family(basis: &GalerkinBasis, fam: &CoefficientFamily) -> DMatrix<Complex64> {
    assert_eq!(fam.dim(), basis.n, "component count mismatch");
    assert_eq!(fam.order(), basis.m, "derivative order mismatch");
    let (m, n, modes) = (basis.m, basis.n, basis.modes);
    let degree = 2 * basis.max_poly_degree() + fam.max_degree();
    let rule = gauss_legendre(points_for_degree(degree));
    let tab = basis.tabulate(&rule.nodes);
    let dim = modes * n;
    let mut q = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..=m {
        for j in 0..=m {
            let om = fam.entry(i, j);
            if om.is_zero() {
                continue;
            }
            for (qi, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                let wmat = om.eval(x) * Complex64::new(w, 0.0);
                for k in 0..modes {
                    let a = tab.vals[i][(k, qi)];
                    if a == 0.0 {
                        continue;
                    }
                    for l in 0..modes {
                        let c = a * tab.vals[j][(l, qi)];
                        if c == 0.0 {
                            continue;
                        }
                        let cc = Complex64::new(c, 0.0);
                        for e in 0..n {
                            for f in 0..n {
                                q[(k * n + e, l * n + f)] += cc * wmat[(e, f)];
                            }
                        }
                    }
                }
            }
        }
    }
    let adj = q.adjoint();
    (q + adj) * Complex64::new(0.5, 0.0)
}

/// `Q_lambda` of a form: assembly of the exactly rescaled coefficients.
pub fn assemble(form: &HermitianForm, basis: &GalerkinBasis, lambda: f64) -> Result<DMatrix<Complex64>> {
    Ok(assemble_family(basis, form.rescale(lambda)?.omega()))
}

/// `dQ/dlambda` of a form: assembly of the lambda-derivative family.
pub fn assemble_derivative(
    form: &HermitianForm,
    basis: &GalerkinBasis,
    lambda: f64,
) -> Result<DMatrix<Complex64>> {
    Ok(assemble_family(basis, &form.d_lambda_rescale(lambda)?))
}

/// Eigenvalue counts below, inside and above the `[-eps, eps]` band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub minus: usize,
    pub zero: usize,
    pub plus: usize,
}

/// Inertia of a Hermitian matrix with the band `eps = eps_rel * max|eig|`.
pub fn inertia(q: &DMatrix<Complex64>, eps_rel: f64) -> Inertia {
    let ev = hermitian_eigenvalues(q);
    let scale = ev.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let eps = eps_rel * scale;
    let mut out = Inertia { minus: 0, zero: 0, plus: 0 };
    for v in ev {
        if v < -eps {
            out.minus += 1;
        } else if v > eps {
            out.plus += 1;
        } else {
            out.zero += 1;
        }
    }
    out
}

/// A path of Hermitian matrices with its lambda-derivative; the discrete
/// counterpart of the rescaled form family.
pub trait HermitianPencil: Sync {
    fn dim(&self) -> usize;
    fn q(&self, lambda: f64) -> DMatrix<Complex64>;
    fn q_dot(&self, lambda: f64) -> DMatrix<Complex64>;
    /// The matrix added per unit shift by `delta_perturb`.
    fn shift_metric(&self) -> DMatrix<Complex64>;
}

/// Galerkin pencil of a Hermitian form.
pub struct FormPencil<'a> {
    pub form: &'a HermitianForm,
    pub basis: &'a GalerkinBasis,
}

impl HermitianPencil for FormPencil<'_> {
    fn dim(&self) -> usize {
        self.basis.total_dim()
    }

    fn q(&self, lambda: f64) -> DMatrix<Complex64> {
        assemble(self.form, self.basis, lambda).expect("lambda within [0, 1]")
    }

    fn q_dot(&self, lambda: f64) -> DMatrix<Complex64> {
        assemble_derivative(self.form, self.basis, lambda).expect("lambda within [0, 1]")
    }

    fn shift_metric(&self) -> DMatrix<Complex64> {
        self.basis.gram_l2()
    }
}

/// The pencil `Q_lambda + delta G`, the discrete analogue of shifting the
/// operator by `delta Id`.
pub struct ShiftedPencil<'a, P: HermitianPencil> {
    inner: &'a P,
    delta: f64,
    metric: DMatrix<Complex64>,
}

impl<'a, P: HermitianPencil> HermitianPencil for ShiftedPencil<'a, P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn q(&self, lambda: f64) -> DMatrix<Complex64> {
        self.inner.q(lambda) + &self.metric * Complex64::new(self.delta, 0.0)
    }

    fn q_dot(&self, lambda: f64) -> DMatrix<Complex64> {
        self.inner.q_dot(lambda)
    }

    fn shift_metric(&self) -> DMatrix<Complex64> {
        self.metric.clone()
    }
}

/// Shifts a pencil by `delta` times its metric; `delta = 0` leaves the
/// path unchanged.
pub fn delta_perturb<P: HermitianPencil>(pencil: &P, delta: f64) -> ShiftedPencil<'_, P> {
    ShiftedPencil {
        inner: pencil,
        delta,
        metric: pencil.shift_metric(),
    }
}

/// Tuning knobs of the spectral-flow engine.
#[derive(Debug, Clone)]
pub struct FlowOptions {
    /// Number of lambda grid intervals.
    pub grid: usize,
    /// Relative band for inertia counts.
    pub eps_rel: f64,
    /// Bisection width for crossing localization.
    pub bisect_tol: f64,
    /// Relative nondegeneracy band for crossing forms.
    pub gamma_eps_rel: f64,
    /// Route non-regular crossings through the delta perturbation.
    pub allow_delta: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            grid: 32,
            eps_rel: 1e-9,
            bisect_tol: 1e-10,
            gamma_eps_rel: 1e-7,
            allow_delta: true,
        }
    }
}

/// One zero crossing of the pencil path.
#[derive(Debug, Clone, Copy)]
pub struct CrossingRecord {
    pub lambda: f64,
    pub kernel_dim: usize,
    pub signature: i32,
    pub regular: bool,
    pub delta_used: f64,
}

/// Result of a spectral-flow computation.
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    /// `n_-(Q_1) - n_-(Q_0)`, the regularized Morse index.
    pub mu: i32,
    pub crossings: Vec<CrossingRecord>,
    pub instants: Vec<f64>,
    pub inertia_start: Inertia,
    pub inertia_end: Inertia,
    /// Shift applied when a non-regular crossing forced a perturbed rerun.
    pub delta_used: f64,
}

enum Attempt {
    Done(FlowOutcome),
    Retry(String),
}

fn frob(q: &DMatrix<Complex64>) -> f64 {
    q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Columns of the eigenvector matrix whose eigenvalues fall in the kernel
/// band. The band combines the relative inertia threshold with a slack
/// proportional to how far the bisected point can sit from the true
/// crossing.
fn kernel_columns(
    q: &DMatrix<Complex64>,
    qdot_norm: f64,
    opts: &FlowOptions,
) -> (DMatrix<Complex64>, usize) {
    let (vals, vecs) = hermitian_eigen(q);
    let scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let eps = (opts.eps_rel * scale).max(50.0 * opts.bisect_tol * qdot_norm);
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() <= eps).collect();
    let mut k = DMatrix::zeros(q.nrows(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        k.set_column(c, &vecs.column(i));
    }
    (k, idx.len())
}

/// Signature and regularity of the crossing form `K* Q'(lambda) K`.
pub fn crossing_form<P: HermitianPencil>(
    pencil: &P,
    lambda: f64,
    kernel: &DMatrix<Complex64>,
    gamma_eps_rel: f64,
) -> Result<(i32, bool)> {
    if kernel.ncols() == 0 {
        return Err(Error::EmptyKernel { lambda });
    }
    let qdot = pencil.q_dot(lambda);
    let gamma = kernel.adjoint() * &qdot * kernel;
    let gamma = (&gamma + gamma.adjoint()) * Complex64::new(0.5, 0.0);
    let scale = frob(&qdot).max(f64::MIN_POSITIVE);
    let ev = hermitian_eigenvalues(&gamma);
    let eps = gamma_eps_rel * scale;
    let mut plus = 0i32;
    let mut minus = 0i32;
    let mut zero = 0usize;
    for v in ev {
        if v > eps {
            plus += 1;
        } else if v < -eps {
            minus += 1;
        } else {
            zero += 1;
        }
    }
    Ok((plus - minus, zero == 0))
}

/// Plain count of strictly negative eigenvalues; bisection brackets use
/// the raw sign so they converge to the branch zero rather than to the
/// edge of the inertia band.
fn raw_minus(q: &DMatrix<Complex64>) -> usize {
    hermitian_eigenvalues(q).iter().filter(|&&v| v < 0.0).count()
}

fn locate_crossings<P: HermitianPencil>(
    pencil: &P,
    opts: &FlowOptions,
    a: f64,
    na: usize,
    b: f64,
    nb: usize,
    out: &mut Vec<f64>,
) {
    if na == nb {
        return;
    }
    if b - a <= opts.bisect_tol {
        out.push(0.5 * (a + b));
        return;
    }
    let mid = 0.5 * (a + b);
    let nm = raw_minus(&pencil.q(mid));
    locate_crossings(pencil, opts, a, na, mid, nm, out);
    locate_crossings(pencil, opts, mid, nm, b, nb, out);
}

/// One localization pass: grid scan, bisection, crossing forms and the
/// signature identity when every crossing is regular. Does not perturb.
fn flow_scan<P: HermitianPencil>(pencil: &P, grid: usize, opts: &FlowOptions) -> Result<Attempt> {
    let lambdas: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let scans: Vec<(Inertia, usize)> = lambdas
        .par_iter()
        .map(|&l| {
            let q = pencil.q(l);
            (inertia(&q, opts.eps_rel), raw_minus(&q))
        })
        .collect();
    let start = scans[0].0;
    let end = scans[grid].0;
    if start.zero > 0 {
        return Err(Error::DegenerateEndpoint(
            "Q_0 has a numerical kernel".into(),
        ));
    }
    if end.zero > 0 {
        return Err(Error::DegenerateEndpoint(
            "Q_1 has a numerical kernel; lambda = 1 is a conjugate instant".into(),
        ));
    }
    if scans[1..grid].iter().any(|(i, _)| i.zero > 0) {
        return Ok(Attempt::Retry("kernel sits on a grid point".into()));
    }
    let mut located = Vec::new();
    for w in 0..grid {
        locate_crossings(
            pencil,
            opts,
            lambdas[w],
            scans[w].1,
            lambdas[w + 1],
            scans[w + 1].1,
            &mut located,
        );
    }
    located.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut crossings = Vec::with_capacity(located.len());
    for &l in &located {
        let qdot = pencil.q_dot(l);
        let qn = frob(&qdot);
        let (kernel, dim) = kernel_columns(&pencil.q(l), qn, opts);
        if dim == 0 {
            return Ok(Attempt::Retry(format!(
                "inertia jump without localized crossing near lambda = {l}"
            )));
        }
        let (signature, regular) = crossing_form(pencil, l, &kernel, opts.gamma_eps_rel)?;
        crossings.push(CrossingRecord {
            lambda: l,
            kernel_dim: dim,
            signature,
            regular,
            delta_used: 0.0,
        });
    }
    let mu = end.minus as i32 - start.minus as i32;
    if crossings.iter().all(|c| c.regular) {
        let sig_sum: i32 = crossings.iter().map(|c| c.signature).sum();
        if mu != -sig_sum {
            return Ok(Attempt::Retry(format!(
                "endpoint inertia difference {mu} does not match crossing signatures {sig_sum}"
            )));
        }
    }
    Ok(Attempt::Done(FlowOutcome {
        mu,
        instants: crossings.iter().map(|c| c.lambda).collect(),
        crossings,
        inertia_start: start,
        inertia_end: end,
        delta_used: 0.0,
    }))
}

/// Scan plus the automatic delta fallback for non-regular crossings: the
/// index is validated along a regular perturbed path whose endpoint
/// inertias match the unperturbed ones, and the unperturbed crossing
/// locations are reported as the instants.
fn flow_once<P: HermitianPencil>(pencil: &P, grid: usize, opts: &FlowOptions) -> Result<Attempt> {
    let mut out = match flow_scan(pencil, grid, opts)? {
        Attempt::Done(out) => out,
        retry => return Ok(retry),
    };
    if out.crossings.iter().all(|c| c.regular) {
        return Ok(Attempt::Done(out));
    }
    if !opts.allow_delta {
        return Err(Error::Numerical(
            "non-regular crossing encountered with perturbation disabled".into(),
        ));
    }
    let first = out.crossings.iter().find(|c| !c.regular).unwrap();
    let mut delta = initial_delta(&pencil.q(first.lambda));
    for _ in 0..8 {
        let shifted = delta_perturb(pencil, delta);
        match flow_scan(&shifted, grid, opts) {
            Ok(Attempt::Done(s))
                if s.inertia_start == out.inertia_start
                    && s.inertia_end == out.inertia_end
                    && s.crossings.iter().all(|c| c.regular) =>
            {
                if s.mu != out.mu {
                    return Err(Error::Numerical(format!(
                        "perturbed path index {} disagrees with {}",
                        s.mu, out.mu
                    )));
                }
                for c in out.crossings.iter_mut() {
                    c.delta_used = delta;
                }
                out.delta_used = delta;
                return Ok(Attempt::Done(out));
            }
            _ => delta *= 0.5,
        }
    }
    Err(Error::Numerical(
        "delta perturbation could not regularize the crossing path".into(),
    ))
}

/// Half the median gap of the sorted absolute spectrum; the starting
/// shift for the delta perturbation.
fn initial_delta(q: &DMatrix<Complex64>) -> f64 {
    let mut abs: Vec<f64> = hermitian_eigenvalues(q).iter().map(|v| v.abs()).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gaps: Vec<f64> = abs
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|g| *g > 0.0)
        .collect();
    if gaps.is_empty() {
        return 1e-6;
    }
    0.5 * gaps[gaps.len() / 2]
}

/// Spectral flow of a pencil path over [0, 1]: endpoint inertia
/// difference with crossing-by-crossing validation; the grid is doubled
/// once if localization and the endpoint count disagree.
pub fn spectral_flow<P: HermitianPencil>(pencil: &P, opts: &FlowOptions) -> Result<FlowOutcome> {
    let mut grid = opts.grid.max(2);
    let mut last_reason = String::new();
    for _ in 0..2 {
        match flow_once(pencil, grid, opts)? {
            Attempt::Done(out) => return Ok(out),
            Attempt::Retry(reason) => {
                last_reason = reason;
                // doubling plus one shifts every interior grid point
                grid = 2 * grid + 1;
            }
        }
    }
    Err(Error::Numerical(format!(
        "spectral flow failed after grid refinement: {last_reason}"
    )))
}

/// Regularized Morse index of a form on the given basis, with crossing
/// records and the located instants.
pub fn morse_index(
    form: &HermitianForm,
    basis: &GalerkinBasis,
    opts: &FlowOptions,
) -> Result<FlowOutcome> {
    if opts.grid < 32 {
        return Err(Error::OutOfRange(format!(
            "grid resolution {} below the minimum of 32",
            opts.grid
        )));
    }
    let pencil = FormPencil { form, basis };
    spectral_flow(&pencil, opts)
}

/// Rows `(lambda, k eigenvalues closest to zero, ascending)` for the
/// eigenvalue-flow trace.
pub fn eigenvalue_flow(
    form: &HermitianForm,
    basis: &GalerkinBasis,
    grid: usize,
    k: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let pencil = FormPencil { form, basis };
    let lambdas: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let rows: Vec<(f64, Vec<f64>)> = lambdas
        .par_iter()
        .map(|&l| {
            let ev = hermitian_eigenvalues(&pencil.q(l));
            let mut idx: Vec<usize> = (0..ev.len()).collect();
            idx.sort_by(|&a, &b| ev[a].abs().partial_cmp(&ev[b].abs()).unwrap());
            let mut sel: Vec<f64> = idx.iter().take(k).map(|&i| ev[i]).collect();
            sel.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (l, sel)
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MatrixPolynomial as MP;

    const PI: f64 = std::f64::consts::PI;

    fn p1_form(c: f64) -> HermitianForm {
        HermitianForm::builder(1, 1, 0)
            .entry(0, 0, MP::scalar(&[-c]))
            .build()
    }

    fn p3_form(b: f64) -> HermitianForm {
        HermitianForm::builder(1, 1, 1)
            .entry(0, 0, MP::scalar(&[b]))
            .build()
    }

    /// Decoupled indefinite system: P1 on the first component, P3 on the
    /// second.
    fn p2_form(a: f64, b: f64) -> HermitianForm {
        let mut w00 = DMatrix::zeros(2, 2);
        w00[(0, 0)] = Complex64::new(-a, 0.0);
        w00[(1, 1)] = Complex64::new(b, 0.0);
        HermitianForm::builder(1, 2, 1)
            .entry(0, 0, MP::constant(w00))
            .build()
    }

    fn p4_form(c: f64) -> HermitianForm {
        HermitianForm::builder(2, 1, 0)
            .entry(0, 0, MP::scalar(&[-c]))
            .build()
    }

    #[test]
    fn basis_jets_vanish_and_tabulation_matches_monomials() {
        for (m, modes) in [(1usize, 8usize), (2, 8)] {
            let basis = GalerkinBasis::new(m, 1, modes);
            for k in 0..modes {
                let coeffs = basis.monomial_coeffs(k);
                // (m-1)-jet at 0: low coefficients vanish exactly
                for r in 0..m {
                    assert_eq!(coeffs[r], 0.0, "m={m} k={k} coeff {r}");
                }
                // (m-1)-jet at 1: derivative sums vanish
                let mut d = coeffs.clone();
                for r in 0..m {
                    let at1: f64 = d.iter().sum();
                    assert!(at1.abs() < 1e-10, "m={m} k={k} D^{r} at 1: {at1}");
                    d = differentiate(&d);
                }
            }
            // recurrence tabulation agrees with monomial evaluation
            let nodes = [0.1, 0.37, 0.64, 0.92];
            let tab = basis.tabulate(&nodes);
            for k in 0..modes {
                let mut d = basis.monomial_coeffs(k);
                for r in 0..=m {
                    for (q, &x) in nodes.iter().enumerate() {
                        let want = horner(&d, x);
                        let got = tab.vals[r][(k, q)];
                        // the monomial route itself loses digits to
                        // cancellation as k grows
                        assert!(
                            (want - got).abs() <= 1e-9 * (1.0 + want.abs()),
                            "m={m} k={k} r={r} x={x}: {got} vs {want}"
                        );
                    }
                    d = differentiate(&d);
                }
            }
        }
    }

    #[test]
    fn basis_gram_is_nonsingular() {
        for (m, modes) in [(1, 24), (2, 24), (1, 64), (2, 64)] {
            let basis = GalerkinBasis::new(m, 1, modes);
            let cond = basis.gram_condition();
            assert!(cond.is_finite() && cond < 1e9, "m={m} N={modes} cond={cond}");
        }
    }

    #[test]
    fn assemble_at_zero_is_leading_block() {
        // lambda = 0 leaves only the D^m J D^m block, diagonal over
        // components with the signature signs
        let form = p2_form(10.0, 20.0);
        let basis = GalerkinBasis::new(1, 2, 6);
        let q0 = assemble(&form, &basis, 0.0).unwrap();
        // block signs: component 0 positive definite, component 1 negative
        let ev = hermitian_eigenvalues(&q0);
        let pos = ev.iter().filter(|&&v| v > 0.0).count();
        let neg = ev.iter().filter(|&&v| v < 0.0).count();
        assert_eq!(pos, 6);
        assert_eq!(neg, 6);
        // cross-component entries vanish
        for k in 0..6 {
            for l in 0..6 {
                assert!(q0[(2 * k, 2 * l + 1)].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn assemble_all_negative_leading_block() {
        // nu = n: Q_lambda is negative definite for a pure-leading form
        let form = HermitianForm::builder(1, 2, 2).build();
        let basis = GalerkinBasis::new(1, 2, 5);
        for lam in [0.0, 0.5, 1.0] {
            let q = assemble(&form, &basis, lam).unwrap();
            let ev = hermitian_eigenvalues(&q);
            assert!(ev.iter().all(|&v| v < 0.0));
        }
    }

    #[test]
    fn assembled_matrix_is_hermitian() {
        let i = Complex64::new(0.0, 1.0);
        let w00 = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(-3.0, 0.0),
                Complex64::new(1.0, 0.0) + i,
                Complex64::new(1.0, 0.0) - i,
                Complex64::new(2.0, 0.0),
            ],
        );
        let form = HermitianForm::builder(1, 2, 1)
            .entry(0, 0, MP::from_coeffs(2, vec![w00.clone(), w00]))
            .build();
        let basis = GalerkinBasis::new(1, 2, 8);
        let q = assemble(&form, &basis, 0.8).unwrap();
        assert_eq!(q.clone().adjoint(), q);
    }

    #[test]
    fn inertia_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]));
        assert_eq!(
            inertia(&d, 1e-9),
            Inertia { minus: 1, zero: 1, plus: 1 }
        );
        let id = DMatrix::<Complex64>::identity(7, 7);
        assert_eq!(
            inertia(&id, 1e-9),
            Inertia { minus: 0, zero: 0, plus: 7 }
        );
    }

    #[test]
    fn p1_endpoint_inertia() {
        let c = (2.5 * PI).powi(2);
        let basis = GalerkinBasis::new(1, 1, 16);
        let q1 = assemble(&p1_form(c), &basis, 1.0).unwrap();
        assert_eq!(inertia(&q1, 1e-9).minus, 2);
        let q0 = assemble(&p1_form(c), &basis, 0.0).unwrap();
        let i0 = inertia(&q0, 1e-9);
        assert_eq!(i0.minus, 0);
        assert_eq!(i0.zero, 0);
    }

    #[test]
    fn morse_index_p1() {
        let c = (2.5 * PI).powi(2);
        let basis = GalerkinBasis::new(1, 1, 24);
        let out = morse_index(&p1_form(c), &basis, &FlowOptions::default()).unwrap();
        assert_eq!(out.mu, 2);
        assert_eq!(out.crossings.len(), 2);
        assert!((out.crossings[0].lambda - 0.4).abs() < 1e-6);
        assert!((out.crossings[1].lambda - 0.8).abs() < 1e-6);
        for c in &out.crossings {
            assert_eq!(c.signature, -1);
            assert_eq!(c.kernel_dim, 1);
            assert!(c.regular);
        }
    }

    #[test]
    fn morse_index_p2_mixed_signs() {
        let a = (2.5 * PI).powi(2);
        let b = (1.5 * PI).powi(2);
        let basis = GalerkinBasis::new(1, 2, 24);
        let out = morse_index(&p2_form(a, b), &basis, &FlowOptions::default()).unwrap();
        assert_eq!(out.mu, 1);
        assert_eq!(out.crossings.len(), 3);
        let sig: Vec<i32> = out.crossings.iter().map(|c| c.signature).collect();
        assert_eq!(sig, vec![-1, 1, -1]);
        assert!((out.crossings[0].lambda - 0.4).abs() < 1e-6);
        assert!((out.crossings[1].lambda - 2.0 / 3.0).abs() < 1e-6);
        assert!((out.crossings[2].lambda - 0.8).abs() < 1e-6);
    }

    #[test]
    fn morse_index_p3_negative() {
        let b = (1.5 * PI).powi(2);
        let basis = GalerkinBasis::new(1, 1, 24);
        let out = morse_index(&p3_form(b), &basis, &FlowOptions::default()).unwrap();
        assert_eq!(out.mu, -1);
        assert_eq!(out.crossings.len(), 1);
        assert_eq!(out.crossings[0].signature, 1);
        assert!((out.crossings[0].lambda - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn morse_index_p4_clamped() {
        let basis = GalerkinBasis::new(2, 1, 24);
        let out = morse_index(&p4_form(6.0f64.powi(4)), &basis, &FlowOptions::default()).unwrap();
        assert_eq!(out.mu, 1);
        assert_eq!(out.crossings.len(), 1);
        // first root of cos k cosh k = 1 over 6
        assert!((out.crossings[0].lambda - 0.788340124).abs() < 1e-5);
    }

    #[test]
    fn crossing_form_p1_at_first_instant() {
        let c = (2.5 * PI).powi(2);
        let form = p1_form(c);
        let basis = GalerkinBasis::new(1, 1, 24);
        let pencil = FormPencil { form: &form, basis: &basis };
        let opts = FlowOptions::default();
        let qdot = pencil.q_dot(0.4);
        let (kernel, dim) = kernel_columns(&pencil.q(0.4), frob(&qdot), &opts);
        // lambda = 0.4 is an exact instant of the continuum problem; the
        // discrete kernel there is one-dimensional
        assert_eq!(dim, 1);
        let (sig, regular) = crossing_form(&pencil, 0.4, &kernel, opts.gamma_eps_rel).unwrap();
        assert_eq!(sig, -1);
        assert!(regular);
        // Gamma value is the branch slope, analytically -2 lambda c times
        // a positive normalization
        let g = (kernel.adjoint() * &qdot * &kernel)[(0, 0)].re;
        assert!(g < 0.0);
    }

    #[test]
    fn crossing_form_doubled_problem_has_signature_minus_two() {
        // two decoupled copies of P1 cross together at 0.4
        let c = (2.5 * PI).powi(2);
        let mut w00 = DMatrix::zeros(2, 2);
        w00[(0, 0)] = Complex64::new(-c, 0.0);
        w00[(1, 1)] = Complex64::new(-c, 0.0);
        let form = HermitianForm::builder(1, 2, 0)
            .entry(0, 0, MP::constant(w00))
            .build();
        let basis = GalerkinBasis::new(1, 2, 24);
        let pencil = FormPencil { form: &form, basis: &basis };
        let opts = FlowOptions::default();
        let qdot = pencil.q_dot(0.4);
        let (kernel, dim) = kernel_columns(&pencil.q(0.4), frob(&qdot), &opts);
        assert_eq!(dim, 2);
        let (sig, regular) = crossing_form(&pencil, 0.4, &kernel, opts.gamma_eps_rel).unwrap();
        assert_eq!(sig, -2);
        assert!(regular);
        let out = morse_index(&form, &basis, &opts).unwrap();
        assert_eq!(out.mu, 4);
    }

    #[test]
    fn empty_kernel_is_an_error() {
        let form = p1_form(1.0);
        let basis = GalerkinBasis::new(1, 1, 8);
        let pencil = FormPencil { form: &form, basis: &basis };
        let kernel = DMatrix::<Complex64>::zeros(8, 0);
        assert!(matches!(
            crossing_form(&pencil, 0.5, &kernel, 1e-7),
            Err(Error::EmptyKernel { .. })
        ));
    }

    #[test]
    fn delta_zero_leaves_pencil_unchanged() {
        let form = p1_form(5.0);
        let basis = GalerkinBasis::new(1, 1, 10);
        let pencil = FormPencil { form: &form, basis: &basis };
        let shifted = delta_perturb(&pencil, 0.0);
        assert_eq!(pencil.q(0.7), shifted.q(0.7));
    }

    #[test]
    fn delta_shift_moves_instants_but_not_index() {
        let c = (2.5 * PI).powi(2);
        let form = p1_form(c);
        let basis = GalerkinBasis::new(1, 1, 24);
        let pencil = FormPencil { form: &form, basis: &basis };
        let shifted = delta_perturb(&pencil, 0.1);
        let opts = FlowOptions::default();
        let base = spectral_flow(&pencil, &opts).unwrap();
        let moved = spectral_flow(&shifted, &opts).unwrap();
        assert_eq!(base.mu, moved.mu);
        // instants move: (k pi)^2 = lambda^2 c - 0.1-shift relation
        for (a, b) in base.instants.iter().zip(&moved.instants) {
            assert!((a - b).abs() > 1e-6, "instants should shift: {a} vs {b}");
        }
    }

    /// Two straight eigenvalue branches with opposite slopes meeting at
    /// lambda0, plus one spectator branch; the crossing is regular with
    /// signature zero and invisible to endpoint inertia.
    struct VeeModel {
        lambda0: f64,
        a: f64,
        b: f64,
    }

    impl HermitianPencil for VeeModel {
        fn dim(&self) -> usize {
            3
        }
        fn q(&self, l: f64) -> DMatrix<Complex64> {
            DMatrix::from_diagonal(&DVector::from_vec(vec![
                Complex64::new(self.a * (l - self.lambda0), 0.0),
                Complex64::new(-self.b * (l - self.lambda0), 0.0),
                Complex64::new(1.0 + l, 0.0),
            ]))
        }
        fn q_dot(&self, _l: f64) -> DMatrix<Complex64> {
            DMatrix::from_diagonal(&DVector::from_vec(vec![
                Complex64::new(self.a, 0.0),
                Complex64::new(-self.b, 0.0),
                Complex64::new(1.0, 0.0),
            ]))
        }
        fn shift_metric(&self) -> DMatrix<Complex64> {
            DMatrix::identity(3, 3)
        }
    }

    #[test]
    fn vee_model_delta_splits_crossings_with_zero_sum() {
        let model = VeeModel { lambda0: 0.5, a: 1.0, b: 2.0 };
        let opts = FlowOptions::default();
        // unperturbed: the crossing does not change inertia, so the flow
        // reports index 0 (the crossing is invisible to degree counting
        // and endpoint inertia alike)
        let base = spectral_flow(&model, &opts).unwrap();
        assert_eq!(base.mu, 0);
        // shifted: two regular crossings at lambda0 -/+ delta with
        // signatures +1 and -1 summing to zero
        let delta = 0.05;
        let shifted = delta_perturb(&model, delta);
        let out = spectral_flow(&shifted, &opts).unwrap();
        assert_eq!(out.mu, 0);
        assert_eq!(out.crossings.len(), 2);
        assert!((out.crossings[0].lambda - (0.5 - delta / 1.0)).abs() < 1e-8);
        assert!((out.crossings[1].lambda - (0.5 + delta / 2.0)).abs() < 1e-8);
        assert_eq!(out.crossings[0].signature, 1);
        assert_eq!(out.crossings[1].signature, -1);
        let sum: i32 = out.crossings.iter().map(|c| c.signature).sum();
        assert_eq!(sum, 0);
    }

    /// A cubic tangency: the branch `(l - lambda0)^3` crosses zero with a
    /// vanishing derivative, so the crossing form is degenerate and the
    /// engine must fall back to the delta perturbation.
    struct CubicModel {
        lambda0: f64,
    }

    impl HermitianPencil for CubicModel {
        fn dim(&self) -> usize {
            2
        }
        fn q(&self, l: f64) -> DMatrix<Complex64> {
            let w = l - self.lambda0;
            DMatrix::from_diagonal(&DVector::from_vec(vec![
                Complex64::new(w * w * w, 0.0),
                Complex64::new(1.0 + l, 0.0),
            ]))
        }
        fn q_dot(&self, l: f64) -> DMatrix<Complex64> {
            let w = l - self.lambda0;
            DMatrix::from_diagonal(&DVector::from_vec(vec![
                Complex64::new(3.0 * w * w, 0.0),
                Complex64::new(1.0, 0.0),
            ]))
        }
        fn shift_metric(&self) -> DMatrix<Complex64> {
            DMatrix::identity(2, 2)
        }
    }

    #[test]
    fn cubic_tangency_routes_through_delta() {
        let model = CubicModel { lambda0: 0.6 };
        let out = spectral_flow(&model, &FlowOptions::default()).unwrap();
        assert_eq!(out.mu, -1);
        assert_eq!(out.crossings.len(), 1);
        assert!(!out.crossings[0].regular);
        assert!(out.crossings[0].delta_used > 0.0);
        assert!((out.crossings[0].lambda - 0.6).abs() < 1e-8);
        assert!(out.delta_used > 0.0);
    }

    #[test]
    fn morse_index_rejects_coarse_grid() {
        let basis = GalerkinBasis::new(1, 1, 8);
        let opts = FlowOptions { grid: 8, ..Default::default() };
        assert!(matches!(
            morse_index(&p1_form(1.0), &basis, &opts),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn degenerate_endpoint_is_reported() {
        // c = pi^2: the instant sits exactly at lambda = 1
        let basis = GalerkinBasis::new(1, 1, 24);
        let r = morse_index(&p1_form(PI * PI), &basis, &FlowOptions::default());
        assert!(matches!(r, Err(Error::DegenerateEndpoint(_))), "{r:?}");
    }

    #[test]
    fn basis_refinement_keeps_index() {
        let c = (2.5 * PI).powi(2);
        for modes in [16, 32] {
            let basis = GalerkinBasis::new(1, 1, modes);
            let out = morse_index(&p1_form(c), &basis, &FlowOptions::default()).unwrap();
            assert_eq!(out.mu, 2, "modes = {modes}");
        }
    }

    #[test]
    fn eigenvalue_flow_rows_shape() {
        let basis = GalerkinBasis::new(1, 1, 12);
        let rows = eigenvalue_flow(&p1_form(30.0), &basis, 8, 4).unwrap();
        assert_eq!(rows.len(), 9);
        for (l, ev) in &rows {
            assert!((0.0..=1.0).contains(l));
            assert_eq!(ev.len(), 4);
            assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
