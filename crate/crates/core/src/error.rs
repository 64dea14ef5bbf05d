//! Error type shared by every solver stage.

use thiserror::Error;

/// Errors produced by form validation, integration, winding and the
/// spectral-flow engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A form failed its structural invariants; the list carries one
    /// human-readable entry per violation.
    #[error("invalid form: {}", .0.join("; "))]
    InvalidForm(Vec<String>),

    /// A parameter left its admissible range.
    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    /// Two objects with incompatible shapes were combined.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A test function does not satisfy the boundary jet condition.
    #[error("boundary jet condition violated: {0}")]
    JetCondition(String),

    /// The adaptive integrator could not keep the error bound without
    /// shrinking the step below the representable floor.
    #[error("step size underflow at x = {x:.6e}")]
    StepUnderflow { x: f64 },

    /// The shooting determinant dropped below the magnitude floor on a
    /// contour sample, so no winding number can be assigned.
    #[error("zero on contour near z = {re:.9} + {im:.9}i")]
    ZeroOnContour { re: f64, im: f64 },

    /// Adaptive phase unwrapping hit its subdivision depth limit.
    #[error("phase refinement depth exhausted near z = {re:.9} + {im:.9}i")]
    RefinementExhausted { re: f64, im: f64 },

    /// The summed phase increments are not close enough to a multiple
    /// of 2*pi.
    #[error("unwrapped phase sum {sum:.3e} rad is not near an integer multiple of 2*pi")]
    NonIntegerWinding { sum: f64 },

    /// The form is degenerate at an endpoint of the parameter interval,
    /// where the indices are not defined.
    #[error("degenerate endpoint: {0}")]
    DegenerateEndpoint(String),

    /// An instant sits on a strip boundary and jittering did not clear it.
    #[error("instant on strip boundary near lambda = {lambda:.9}")]
    InstantOnBoundary { lambda: f64 },

    /// A crossing was bracketed but no kernel vector could be extracted.
    #[error("empty kernel at crossing lambda = {lambda:.9}")]
    EmptyKernel { lambda: f64 },

    /// Any other numerical inconsistency.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
