//! Linearised operators about a snoidal wave and their spectra.
//!
//! Operators are dense Fourier collocation matrices on the `N`-point grid:
//!
//! * `L1 = -ω ∂² - 1 + 3h²`
//! * `L  = [[-∂² - 1 + 3h², c∂], [-c∂, 1]]`
//! * their zero-mean versions, obtained by subtracting `(3/L)(h², ·)` from
//!   the first component and restricting to an orthonormal basis of
//!   mean-free vectors.

mod analysis;
mod closed_form;
mod index;
mod operators;

pub use analysis::{analyze, SpectralAnalysis, DEFAULT_DELTA_C};
pub use closed_form::{
    b_coefficients, closed_form_eigenpairs, d1_closed, inverse_of_one, lambda0, lambda4, ClosedFormEigenpair,
    WhichEigenpair,
};
pub use index::{
    d1_numeric, d1_numeric_from, d_matrix, d_matrix_from, d_second_derivative, index_counts, predict_constrained_counts,
    ConstrainedIndexData, D1Solution, D2_QUADRATURE_POINTS,
};
pub use operators::{
    assemble_hill, assemble_l1, assemble_lblock, constrain_zero_mean, decompose, eigen_report, eigen_report_from,
    fourier_d1_matrix, fourier_d2_matrix, zero_mean_basis, Decomposition, OperatorKind, OperatorMatrix,
    SpectralReport, MIN_OPERATOR_POINTS, TAU_ZERO_RELATIVE,
};
