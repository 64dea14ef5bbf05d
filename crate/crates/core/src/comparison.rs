//! Comparison of two forms: pointwise order check and index monotonicity.
//!
//! On the jet variables the pointwise inequality between two forms with
//! the same leading signature is positive semidefiniteness of the block
//! difference `[omega^hi_ij(x) - omega^lo_ij(x)]`, tested on a Chebyshev
//! sample of [0, 1]. Enlarging a form can only remove negative
//! directions, so the pointwise-larger form carries the smaller (or
//! equal) regularized Morse index; `compare_indices` detects which slot
//! holds the larger form and checks that inequality.

use crate::error::{Error, Result};
use crate::form::HermitianForm;
use crate::galerkin::{morse_index, FlowOptions, GalerkinBasis};
use crate::eigen::hermitian_eigenvalues;
use num_complex::Complex64;

/// Two forms with identical `(m, n, nu)` data.
#[derive(Debug, Clone)]
pub struct FormPair {
    pub form0: HermitianForm,
    pub form1: HermitianForm,
}

impl FormPair {
    pub fn new(form0: HermitianForm, form1: HermitianForm) -> Result<Self> {
        if form0.order() != form1.order()
            || form0.dim() != form1.dim()
            || form0.negative_signature() != form1.negative_signature()
        {
            return Err(Error::DimensionMismatch(format!(
                "(m, n, nu) = ({}, {}, {}) vs ({}, {}, {})",
                form0.order(),
                form0.dim(),
                form0.negative_signature(),
                form1.order(),
                form1.dim(),
                form1.negative_signature()
            )));
        }
        Ok(Self { form0, form1 })
    }

    fn swapped(&self) -> Self {
        Self {
            form0: self.form1.clone(),
            form1: self.form0.clone(),
        }
    }
}

/// Outcome of the pointwise order check `form0 <= form1`.
#[derive(Debug, Clone, Copy)]
pub struct OrderReport {
    pub ordered: bool,
    /// Most negative block-difference eigenvalue found, clamped to zero
    /// when the difference is semidefinite everywhere.
    pub worst_violation: f64,
}

/// Checks `form0[u](x) <= form1[u](x)` for all jets `u` at `samples`
/// Chebyshev points: the block coefficient difference must be positive
/// semidefinite at each sample.
pub fn check_order(pair: &FormPair, samples: usize) -> OrderReport {
    let s = samples.max(2);
    let mut min_eig = f64::INFINITY;
    for t in 0..s {
        let x = 0.5 * (1.0 - (std::f64::consts::PI * t as f64 / (s - 1) as f64).cos());
        let d = pair.form1.omega().block_eval(x) - pair.form0.omega().block_eval(x);
        let d = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
        let ev = hermitian_eigenvalues(&d);
        if let Some(&lo) = ev.first() {
            min_eig = min_eig.min(lo);
        }
    }
    OrderReport {
        ordered: min_eig >= -1e-10,
        worst_violation: min_eig.min(0.0),
    }
}

/// Which slot of the pair holds the pointwise-larger form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderDirection {
    /// `form0 >= form1` pointwise.
    FirstLarger,
    /// `form1 >= form0` pointwise.
    SecondLarger,
}

/// Result of a full index comparison.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub mu0: i32,
    pub mu1: i32,
    pub direction: OrderDirection,
    pub worst_violation: f64,
    /// Whether the index of the pointwise-larger form is bounded by the
    /// index of the smaller one.
    pub satisfied: bool,
}

/// Computes both regularized Morse indices and checks monotonicity: the
/// pointwise-larger form must not have the larger index. The pair must be
/// ordered in one direction or the other.
pub fn compare_indices(
    pair: &FormPair,
    basis_modes: usize,
    flow: &FlowOptions,
    order_samples: usize,
) -> Result<ComparisonReport> {
    let first_larger = check_order(&pair.swapped(), order_samples);
    let second_larger = check_order(pair, order_samples);
    let direction = if first_larger.ordered {
        OrderDirection::FirstLarger
    } else if second_larger.ordered {
        OrderDirection::SecondLarger
    } else {
        return Err(Error::OutOfRange(format!(
            "forms are not pointwise ordered in either direction \
             (violations {:.3e} and {:.3e})",
            first_larger.worst_violation, second_larger.worst_violation
        )));
    };
    let basis = GalerkinBasis::new(pair.form0.order(), pair.form0.dim(), basis_modes);
    let (r0, r1) = rayon::join(
        || morse_index(&pair.form0, &basis, flow),
        || morse_index(&pair.form1, &basis, flow),
    );
    let mu0 = r0
        .map_err(|e| Error::Numerical(format!("form0: {e}")))?
        .mu;
    let mu1 = r1
        .map_err(|e| Error::Numerical(format!("form1: {e}")))?
        .mu;
    let satisfied = match direction {
        OrderDirection::FirstLarger => mu0 <= mu1,
        OrderDirection::SecondLarger => mu1 <= mu0,
    };
    let worst = match direction {
        OrderDirection::FirstLarger => first_larger.worst_violation,
        OrderDirection::SecondLarger => second_larger.worst_violation,
    };
    Ok(ComparisonReport {
        mu0,
        mu1,
        direction,
        worst_violation: worst,
        satisfied,
    })
}
