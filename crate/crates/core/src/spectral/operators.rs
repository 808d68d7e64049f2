use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{check_grid, GridField};
use crate::waves::{sample_wave, WaveParameters};

pub const MIN_OPERATOR_POINTS: usize = 32;

/// Zero-eigenvalue window, relative to the spectral radius.
pub const TAU_ZERO_RELATIVE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    L1,
    Lblock,
    L1Constrained,
    LblockConstrained,
}

impl OperatorKind {
    pub fn is_block(self) -> bool {
        matches!(self, OperatorKind::Lblock | OperatorKind::LblockConstrained)
    }

    pub fn is_constrained(self) -> bool {
        matches!(self, OperatorKind::L1Constrained | OperatorKind::LblockConstrained)
    }
}

/// Dense symmetric matrix of one of the linearised operators.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    pub period: f64,
    /// Collocation points per component.
    pub grid_points: usize,
    pub matrix: DMatrix<f64>,
    /// Wave profile `h` the operator was linearised about.
    pub profile: GridField,
    /// Analytic kernel direction in the matrix's own coordinates.
    pub expected_kernel: Option<DVector<f64>>,
    /// Columns span the mean-free subspace (constrained kinds only).
    pub basis: Option<DMatrix<f64>>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn symmetry_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0_f64;
        for i in 0..m.nrows() {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }

    /// Maps a vector in grid coordinates into the matrix coordinates.
    pub fn restrict(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(q) => q.tr_mul(v),
            None => v.clone(),
        }
    }

    /// Maps a vector in matrix coordinates back to grid coordinates.
    pub fn lift(&self, w: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(q) => q * w,
            None => w.clone(),
        }
    }
}

/// Fourier collocation first-derivative matrix on `N` points of `[0, L)`.
/// Antisymmetric; annihilates the Nyquist mode.
pub fn fourier_d1_matrix(period: f64, n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = 2.0 * PI / period;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            scale * 0.5 * sign / (0.5 * d * h).tan()
        }
    })
}

/// Fourier collocation second-derivative matrix on `N` points of `[0, L)`.
/// Symmetric; the Nyquist mode has eigenvalue `-(πN/L)²`.
pub fn fourier_d2_matrix(period: f64, n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = (2.0 * PI / period).powi(2);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            scale * (-PI * PI / (3.0 * h * h) - 1.0 / 6.0)
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            scale * (-0.5 * sign / (0.5 * d * h).sin().powi(2))
        }
    })
}

fn check_operator_grid(period: f64, n: usize) -> Result<()> {
    check_grid(period, n)?;
    if n < MIN_OPERATOR_POINTS {
        return Err(Error::InvalidGrid(format!(
            "operator assembly needs at least {MIN_OPERATOR_POINTS} points, got {n}"
        )));
    }
    Ok(())
}

/// `-ω D₂ - I + 3 diag(h²)` for an arbitrary sampled potential profile.
pub fn assemble_hill(omega: f64, profile: &GridField) -> Result<OperatorMatrix> {
    let (period, n) = (profile.period(), profile.len());
    check_operator_grid(period, n)?;
    let mut m = fourier_d2_matrix(period, n) * (-omega);
    for (i, h) in profile.values().iter().enumerate() {
        m[(i, i)] += -1.0 + 3.0 * h * h;
    }
    Ok(OperatorMatrix {
        kind: OperatorKind::L1,
        period,
        grid_points: n,
        matrix: m,
        profile: profile.clone(),
        expected_kernel: None,
        basis: None,
    })
}

pub fn assemble_l1(wave: &WaveParameters, n: usize) -> Result<OperatorMatrix> {
    check_operator_grid(wave.period, n)?;
    let s = sample_wave(wave, n)?;
    let mut op = assemble_hill(wave.omega, &s.h)?;
    op.expected_kernel = Some(DVector::from_column_slice(s.dh.values()));
    Ok(op)
}

pub fn assemble_lblock(wave: &WaveParameters, n: usize) -> Result<OperatorMatrix> {
    check_operator_grid(wave.period, n)?;
    let s = sample_wave(wave, n)?;
    let c = wave.speed;
    let d1 = fourier_d1_matrix(wave.period, n);
    let d2 = fourier_d2_matrix(wave.period, n);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -d2[(i, j)];
            m[(i, n + j)] = c * d1[(i, j)];
            m[(n + i, j)] = -c * d1[(i, j)];
        }
        let h = s.h.values()[i];
        m[(i, i)] += -1.0 + 3.0 * h * h;
        m[(n + i, n + i)] = 1.0;
    }
    let kernel = DVector::from_iterator(
        2 * n,
        s.dh.values().iter().copied().chain(s.d2h.values().iter().map(|v| c * v)),
    );
    Ok(OperatorMatrix {
        kind: OperatorKind::Lblock,
        period: wave.period,
        grid_points: n,
        matrix: m,
        profile: s.h,
        expected_kernel: Some(kernel),
        basis: None,
    })
}

/// `N x (N-1)` matrix with orthonormal columns orthogonal to the constant
/// vector: the trailing columns of the Householder reflector that maps
/// `e₀` onto `1/√N`.
pub fn zero_mean_basis(n: usize) -> DMatrix<f64> {
    let u = 1.0 / (n as f64).sqrt();
    let mut w = DVector::from_element(n, -u);
    w[0] += 1.0;
    let beta = 2.0 / w.norm_squared();
    DMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        delta - beta * w[i] * w[col]
    })
}

/// Zero-mean constrained operator.
///
/// Subtracts `(3/L)(h², ·)·1` from the first component and restricts to the
/// mean-free subspace of every component.
pub fn constrain_zero_mean(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    let n = op.grid_points;
    let (kind, blocks) = match op.kind {
        OperatorKind::L1 => (OperatorKind::L1Constrained, 1),
        OperatorKind::Lblock => (OperatorKind::LblockConstrained, 2),
        other => {
            return Err(Error::InvalidArgument(format!(
                "{other:?} is already constrained"
            )))
        }
    };

    // (3/L) ∫ h² u dx = (3/N) Σ h_j² u_j
    let mut corrected = op.matrix.clone();
    for (j, h) in op.profile.values().iter().enumerate() {
        let w = 3.0 * h * h / n as f64;
        for i in 0..n {
            corrected[(i, j)] -= w;
        }
    }

    let q1 = zero_mean_basis(n);
    let q = if blocks == 1 {
        q1
    } else {
        let mut q = DMatrix::zeros(2 * n, 2 * (n - 1));
        q.view_mut((0, 0), (n, n - 1)).copy_from(&q1);
        q.view_mut((n, n - 1), (n, n - 1)).copy_from(&q1);
        q
    };
    let mut restricted = q.tr_mul(&(&corrected * &q));
    // the correction is annihilated by qᵀ; remove roundoff asymmetry
    let sym = (&restricted + restricted.transpose()) * 0.5;
    restricted = sym;

    let expected_kernel = op.expected_kernel.as_ref().map(|v| q.tr_mul(v));
    Ok(OperatorMatrix {
        kind,
        period: op.period,
        grid_points: n,
        matrix: restricted,
        profile: op.profile.clone(),
        expected_kernel,
        basis: Some(q),
    })
}

/// Sorted eigen-decomposition of a symmetric operator matrix.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
}

impl Decomposition {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn default_tau(&self) -> f64 {
        TAU_ZERO_RELATIVE * self.spectral_radius()
    }

    /// Index of the eigenvalue closest to zero.
    pub fn kernel_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.eigenvalues.iter().enumerate() {
            if v.abs() < self.eigenvalues[best].abs() {
                best = i;
            }
        }
        best
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }
}

pub fn decompose(op: &OperatorMatrix) -> Result<Decomposition> {
    let dim = op.dim();
    let eig = SymmetricEigen::try_new(op.matrix.clone(), f64::EPSILON, 1000 * dim.max(1)).ok_or(Error::EigFailure(dim))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigFailure(dim));
    }
    let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Decomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub kind: OperatorKind,
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below `-tau_zero`.
    pub n: usize,
    /// Eigenvalues in `[-tau_zero, tau_zero]`.
    pub z: usize,
    pub positive: usize,
    pub tau_zero: f64,
    /// `‖M v‖_∞` for the analytic kernel vector `v`, unnormalised.
    pub kernel_residual: Option<f64>,
    /// Lowest eigenvalue once the eigenvector aligned with the expected
    /// kernel is removed.
    pub lowest_off_kernel: Option<f64>,
}

impl SpectralReport {
    pub fn counts(&self) -> (usize, usize) {
        (self.n, self.z)
    }
}

/// Full spectrum and `(n, z)` counts; `tau_zero = None` picks
/// `TAU_ZERO_RELATIVE` times the spectral radius.
pub fn eigen_report(op: &OperatorMatrix, tau_zero: Option<f64>) -> Result<SpectralReport> {
    let dec = decompose(op)?;
    Ok(eigen_report_from(op, &dec, tau_zero))
}

pub fn eigen_report_from(op: &OperatorMatrix, dec: &Decomposition, tau_zero: Option<f64>) -> SpectralReport {
    let tau = tau_zero.unwrap_or_else(|| dec.default_tau());
    let n = dec.eigenvalues.iter().filter(|&&v| v < -tau).count();
    let z = dec.eigenvalues.iter().filter(|&&v| v.abs() <= tau).count();
    let kernel_residual = op.expected_kernel.as_ref().map(|v| (&op.matrix * v).amax());
    let lowest_off_kernel = op.expected_kernel.as_ref().and_then(|v| {
        let v = v.normalize();
        let aligned = (0..dec.eigenvalues.len())
            .max_by(|&a, &b| {
                let oa = dec.eigenvectors.column(a).dot(&v).abs();
                let ob = dec.eigenvectors.column(b).dot(&v).abs();
                oa.total_cmp(&ob)
            })?;
        dec.eigenvalues
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != aligned)
            .map(|(_, &v)| v)
            .reduce(f64::min)
    });
    SpectralReport {
        kind: op.kind,
        dim: dec.eigenvalues.len(),
        eigenvalues: dec.eigenvalues.clone(),
        n,
        z,
        positive: dec.eigenvalues.len() - n - z,
        tau_zero: tau,
        kernel_residual,
        lowest_off_kernel,
    }
}
