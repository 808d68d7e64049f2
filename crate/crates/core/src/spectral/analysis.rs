//! One-shot spectral analysis of a wave: every report the CLI emits.

use nalgebra::DVector;
use serde::Serialize;

use super::closed_form::{closed_form_eigenpairs, d1_closed, inverse_of_one};
use super::index::{d1_numeric_from, d_matrix_from, d_second_derivative, index_counts, ConstrainedIndexData, D1Solution};
use super::operators::{assemble_l1, assemble_lblock, constrain_zero_mean, decompose, eigen_report_from, SpectralReport};
use crate::error::Result;
use crate::waves::{min_speed, ode_residual, WaveParameters};

pub const DEFAULT_DELTA_C: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormCheck {
    pub lambda0: f64,
    pub lambda4: f64,
    /// `‖L1 f₀ - λ₀ f₀‖_∞`
    pub residual0: f64,
    /// `‖L1 f₄ - λ₄ f₄‖_∞`
    pub residual4: f64,
    /// `‖L1 f̃ - 1‖_∞`
    pub inverse_residual: f64,
    /// `|λ₀ - smallest eigenvalue of L1|`
    pub lambda0_error: f64,
    /// 1-based position of the eigenvalue of `L1` closest to `λ₄`.
    pub lambda4_position: usize,
    pub lambda4_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralAnalysis {
    pub parameters: WaveParameters,
    pub grid_points: usize,
    pub ode_residual: f64,
    pub dispersion_residual: f64,
    pub l1: SpectralReport,
    pub lblock: SpectralReport,
    pub l1_constrained: SpectralReport,
    pub lblock_constrained: SpectralReport,
    pub index_l1: ConstrainedIndexData,
    pub index_lblock: ConstrainedIndexData,
    pub predicted_l1_constrained: (usize, usize),
    pub predicted_lblock_constrained: (usize, usize),
    pub d1_closed: f64,
    pub d1_numeric: D1Solution,
    pub d1_relative_error: f64,
    pub closed_form: ClosedFormCheck,
    /// Lowest eigenvalue of the constrained block operator off its kernel.
    pub coercivity: Option<f64>,
    pub d2: f64,
    pub delta_c: f64,
}

/// A central-difference step that keeps `c ± δc` admissible.
pub fn admissible_delta_c(period: f64, speed: f64) -> f64 {
    let c = speed.abs();
    DEFAULT_DELTA_C.min(0.25 * (1.0 - c)).min(0.25 * (c - min_speed(period)))
}

pub fn analyze(wave: &WaveParameters, n: usize) -> Result<SpectralAnalysis> {
    let (scalar, block) = rayon::join(
        || -> Result<_> {
            let op = assemble_l1(wave, n)?;
            let dec = decompose(&op)?;
            let con = constrain_zero_mean(&op)?;
            let con_dec = decompose(&con)?;
            Ok((op, dec, con, con_dec))
        },
        || -> Result<_> {
            let op = assemble_lblock(wave, n)?;
            let dec = decompose(&op)?;
            let con = constrain_zero_mean(&op)?;
            let con_dec = decompose(&con)?;
            Ok((op, dec, con, con_dec))
        },
    );
    let (l1_op, l1_dec, l1c_op, l1c_dec) = scalar?;
    let (lb_op, lb_dec, lbc_op, lbc_dec) = block?;

    let l1 = eigen_report_from(&l1_op, &l1_dec, None);
    let lblock = eigen_report_from(&lb_op, &lb_dec, None);
    let l1_constrained = eigen_report_from(&l1c_op, &l1c_dec, None);
    let lblock_constrained = eigen_report_from(&lbc_op, &lbc_dec, None);

    let d1_numeric = d1_numeric_from(&l1_op, &l1_dec)?;
    let index_lblock = d_matrix_from(&lb_op, &lb_dec)?;
    let index_l1 = ConstrainedIndexData::from_matrix(
        [[d1_numeric.value, 0.0], [0.0, wave.period]],
        1e-9 * wave.period,
    );
    let predicted_l1_constrained = index_counts(&l1, &index_l1, &l1_constrained)?;
    let predicted_lblock_constrained = index_counts(&lblock, &index_lblock, &lblock_constrained)?;

    let d1c = d1_closed(wave);
    let (p0, p4) = closed_form_eigenpairs(wave, n)?;
    let eig_residual = |f: &[f64], lambda: f64| {
        let v = DVector::from_column_slice(f);
        (&l1_op.matrix * &v - &v * lambda).amax()
    };
    let ftilde = DVector::from_vec(inverse_of_one(wave, n)?.into_values());
    let (pos4, err4) = l1
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1, (v - p4.lambda).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY));
    let closed_form = ClosedFormCheck {
        lambda0: p0.lambda,
        lambda4: p4.lambda,
        residual0: eig_residual(p0.eigenfunction.values(), p0.lambda),
        residual4: eig_residual(p4.eigenfunction.values(), p4.lambda),
        inverse_residual: (&l1_op.matrix * &ftilde).add_scalar(-1.0).amax(),
        lambda0_error: (l1.eigenvalues[0] - p0.lambda).abs(),
        lambda4_position: pos4,
        lambda4_error: err4,
    };

    let delta_c = admissible_delta_c(wave.period, wave.speed);
    let d2 = d_second_derivative(wave.period, wave.speed, delta_c)?;

    Ok(SpectralAnalysis {
        parameters: *wave,
        grid_points: n,
        ode_residual: ode_residual(wave, n)?,
        dispersion_residual: wave.dispersion_residual(),
        coercivity: lblock_constrained.lowest_off_kernel,
        l1,
        lblock,
        l1_constrained,
        lblock_constrained,
        index_l1,
        index_lblock,
        predicted_l1_constrained,
        predicted_lblock_constrained,
        d1_relative_error: (d1_numeric.value - d1c).abs() / d1c.abs(),
        d1_closed: d1c,
        d1_numeric,
        closed_form,
        d2,
        delta_c,
    })
}
