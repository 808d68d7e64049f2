//! `D₁`, the constraint matrix `D`, index formulas and `d''(c)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::operators::{assemble_l1, assemble_lblock, decompose, Decomposition, OperatorMatrix, SpectralReport};
use crate::error::{Error, Result};
use crate::waves::{sample_wave, WaveParameters};

/// Grid used for the `∫ h'² dx` quadrature inside `d''(c)`.
pub const D2_QUADRATURE_POINTS: usize = 1024;

const MIN_SOLVE_POINTS: usize = 64;
/// Backward-error bound for the bordered solve, relative to `‖A‖ ‖x‖ + ‖b‖`.
const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct D1Solution {
    pub value: f64,
    /// `|(f, h')|` for the returned solution `f`.
    pub orthogonality: f64,
    /// The discrete eigenvalue that was deflated.
    pub kernel_eigenvalue: f64,
    #[serde(skip)]
    pub solution: DVector<f64>,
}

/// Solves `M x = rhs` on the orthogonal complement of `kernel` through the
/// bordered system `[[M, v], [vᵀ, 0]]`.
fn solve_deflated(matrix: &DMatrix<f64>, kernel: &DVector<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = matrix.nrows();
    let mut bordered = DMatrix::zeros(n + 1, n + 1);
    bordered.view_mut((0, 0), (n, n)).copy_from(matrix);
    bordered.view_mut((0, n), (n, 1)).copy_from(kernel);
    bordered.view_mut((n, 0), (1, n)).copy_from(&kernel.transpose());
    let mut b = DVector::zeros(n + 1);
    b.rows_mut(0, n).copy_from(rhs);

    let sol = bordered
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem("bordered system has a zero pivot".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    let residual = (&bordered * &sol - &b).amax();
    let scale = bordered.amax() * sol.amax() + rhs.amax();
    if residual > SOLVE_RESIDUAL_TOL * scale {
        return Err(Error::SingularSystem(format!("residual {residual:e} after solve")));
    }
    Ok(sol.rows(0, n).into_owned())
}

/// The unique near-zero eigenvector, or `SingularSystem` if the kernel is
/// not one-dimensional at the decomposition's default tolerance.
fn isolated_kernel(dec: &Decomposition) -> Result<(f64, DVector<f64>)> {
    let tau = dec.default_tau();
    let near_zero = dec.eigenvalues.iter().filter(|v| v.abs() <= tau).count();
    if near_zero != 1 {
        return Err(Error::SingularSystem(format!(
            "expected a one-dimensional kernel, found {near_zero} eigenvalues within {tau:e}"
        )));
    }
    let i = dec.kernel_index();
    Ok((dec.eigenvalues[i], dec.eigenvector(i)))
}

/// `D₁ = (L1⁻¹ 1, 1)` by a linear solve orthogonal to the discrete kernel.
pub fn d1_numeric(wave: &WaveParameters, n: usize) -> Result<D1Solution> {
    if n < MIN_SOLVE_POINTS {
        return Err(Error::InvalidGrid(format!("D1 solve needs at least {MIN_SOLVE_POINTS} points, got {n}")));
    }
    let op = assemble_l1(wave, n)?;
    let dec = decompose(&op)?;
    d1_numeric_from(&op, &dec)
}

pub fn d1_numeric_from(op: &OperatorMatrix, dec: &Decomposition) -> Result<D1Solution> {
    let n = op.grid_points;
    let (kernel_eigenvalue, kernel) = isolated_kernel(dec)?;
    let ones = DVector::from_element(n, 1.0);
    let f = solve_deflated(&op.matrix, &kernel, &ones)?;
    let weight = op.period / n as f64;
    let orthogonality = op
        .expected_kernel
        .as_ref()
        .map(|dh| weight * f.dot(dh).abs())
        .unwrap_or(0.0);
    Ok(D1Solution {
        value: weight * f.sum(),
        orthogonality,
        kernel_eigenvalue,
        solution: f,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstrainedIndexData {
    /// `(L⁻¹(1,0), (1,0))`
    pub d1: f64,
    pub d_matrix: [[f64; 2]; 2],
    pub n0: usize,
    pub z0: usize,
}

impl ConstrainedIndexData {
    /// Builds the record from `D` with `n₀, z₀` read off the sign of `D₁`.
    /// `|D₁| <= zero_tol` counts as `D₁ = 0`.
    pub fn from_matrix(d_matrix: [[f64; 2]; 2], zero_tol: f64) -> Self {
        let d1 = d_matrix[0][0];
        let z0 = usize::from(d1.abs() <= zero_tol);
        let n0 = usize::from(z0 == 0 && d1 < 0.0);
        Self { d1, d_matrix, n0, z0 }
    }
}

/// Relative threshold (times `L`) below which `D₁` is treated as zero.
const D1_ZERO_RELATIVE: f64 = 1e-9;

/// The 2x2 matrix `D` for the constraint directions `(1,0)` and `(0,1)`,
/// computed by solving `L u = e` with the block operator.
pub fn d_matrix(wave: &WaveParameters, n: usize) -> Result<ConstrainedIndexData> {
    if n < MIN_SOLVE_POINTS {
        return Err(Error::InvalidGrid(format!("D solve needs at least {MIN_SOLVE_POINTS} points, got {n}")));
    }
    let op = assemble_lblock(wave, n)?;
    let dec = decompose(&op)?;
    d_matrix_from(&op, &dec)
}

pub fn d_matrix_from(op: &OperatorMatrix, dec: &Decomposition) -> Result<ConstrainedIndexData> {
    let n = op.grid_points;
    let (_, kernel) = isolated_kernel(dec)?;
    let e1 = DVector::from_fn(2 * n, |i, _| if i < n { 1.0 } else { 0.0 });
    let e2 = DVector::from_fn(2 * n, |i, _| if i < n { 0.0 } else { 1.0 });
    let u1 = solve_deflated(&op.matrix, &kernel, &e1)?;
    let u2 = solve_deflated(&op.matrix, &kernel, &e2)?;
    let w = op.period / n as f64;
    let d = [[w * u1.dot(&e1), w * u1.dot(&e2)], [w * u2.dot(&e1), w * u2.dot(&e2)]];
    Ok(ConstrainedIndexData::from_matrix(d, D1_ZERO_RELATIVE * op.period))
}

/// `(n - n₀ - z₀, z + z₀)`.
pub fn predict_constrained_counts(unconstrained: &SpectralReport, idx: &ConstrainedIndexData) -> Result<(usize, usize)> {
    let removed = idx.n0 + idx.z0;
    if removed > unconstrained.n {
        return Err(Error::IndexMismatch {
            predicted: (0, unconstrained.z + idx.z0),
            direct: unconstrained.counts(),
        });
    }
    Ok((unconstrained.n - removed, unconstrained.z + idx.z0))
}

/// Predicted constrained counts, checked against a directly computed
/// constrained spectrum.
pub fn index_counts(
    unconstrained: &SpectralReport,
    idx: &ConstrainedIndexData,
    constrained: &SpectralReport,
) -> Result<(usize, usize)> {
    let predicted = predict_constrained_counts(unconstrained, idx)?;
    let direct = constrained.counts();
    if predicted != direct {
        return Err(Error::IndexMismatch { predicted, direct });
    }
    Ok(predicted)
}

/// `c ∫₀ᴸ h'² dx` on the quadrature grid.
fn momentum_of_wave(period: f64, speed: f64) -> Result<f64> {
    let w = WaveParameters::new(period, speed)?;
    let s = sample_wave(&w, D2_QUADRATURE_POINTS)?;
    Ok(speed * s.dh.inner(&s.dh))
}

/// `d''(c) = -∂/∂c (c ∫ h'² dx)` by a central difference of width `2 δc`.
pub fn d_second_derivative(period: f64, speed: f64, delta_c: f64) -> Result<f64> {
    if !(delta_c > 0.0 && delta_c.is_finite()) {
        return Err(Error::InvalidArgument(format!("δc must be positive, got {delta_c}")));
    }
    // reject an inadmissible centre even when both stencil points are fine
    WaveParameters::new(period, speed)?;
    let plus = momentum_of_wave(period, speed + delta_c)?;
    let minus = momentum_of_wave(period, speed - delta_c)?;
    Ok(-(plus - minus) / (2.0 * delta_c))
}
