//! Uniform periodic collocation grids and Fourier differentiation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_GRID_POINTS: usize = 16;

/// Samples of an `L`-periodic real function at `x_j = j L / N`, `j = 0..N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    period: f64,
    values: Vec<f64>,
}

pub(crate) fn check_grid(period: f64, n: usize) -> Result<()> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
    }
    if n < MIN_GRID_POINTS || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "need an even number of points >= {MIN_GRID_POINTS}, got {n}"
        )));
    }
    Ok(())
}

impl GridField {
    pub fn new(period: f64, values: Vec<f64>) -> Result<Self> {
        check_grid(period, values.len())?;
        Ok(Self { period, values })
    }

    pub fn zeros(period: f64, n: usize) -> Result<Self> {
        Self::new(period, vec![0.0; n])
    }

    pub fn from_fn(period: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(period, n)?;
        let dx = period / n as f64;
        Ok(Self {
            period,
            values: (0..n).map(|j| f(j as f64 * dx)).collect(),
        })
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.period / self.values.len() as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let dx = self.spacing();
        (0..self.values.len()).map(move |j| j as f64 * dx)
    }

    /// Trapezoid rule over one period; spectrally exact for periodic data.
    pub fn integral(&self) -> f64 {
        self.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `L²` inner product with the trapezoid weight `L/N`.
    pub fn inner(&self, other: &GridField) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            period: self.period,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Subtracts the discrete mean in place.
    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
    }

    /// Spectral derivative of the trigonometric interpolant.
    pub fn derivative(&self) -> GridField {
        let mut fourier = Fourier::new(self.period, self.len());
        GridField {
            period: self.period,
            values: fourier.derivative(&self.values),
        }
    }

    /// Returns the field sampled at `x + s` by Fourier phase shift.
    pub fn shifted(&self, s: f64) -> GridField {
        let mut fourier = Fourier::new(self.period, self.len());
        let mut spec = fourier.forward(&self.values);
        let nyquist = self.len() / 2;
        for (m, z) in spec.iter_mut().enumerate() {
            let xi = fourier.wavenumbers[m];
            if m == nyquist {
                *z *= (xi * s).cos();
            } else {
                *z *= Complex64::from_polar(1.0, xi * s);
            }
        }
        GridField {
            period: self.period,
            values: fourier.inverse(&mut spec),
        }
    }
}

/// FFT workspace for one `(L, N)` grid.
///
/// Spectra are normalised so that `p(x_j) = Σ_m p̂_m exp(i ξ_m x_j)`, hence
/// `∫₀ᴸ |p|² dx = L Σ_m |p̂_m|²`.
pub struct Fourier {
    period: f64,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl Fourier {
    pub fn new(period: f64, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let backward = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(backward.get_inplace_scratch_len());
        Self {
            period,
            n,
            forward,
            backward,
            wavenumbers: wavenumbers(period, n),
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Physical wavenumbers `ξ_m = 2π m / L` in FFT order, Nyquist taken positive.
    #[inline]
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn forward(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward_in_place(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    /// Inverse transform; consumes the spectrum buffer and returns real parts.
    pub fn inverse(&mut self, spec: &mut [Complex64]) -> Vec<f64> {
        self.inverse_in_place(spec);
        spec.iter().map(|z| z.re).collect()
    }

    pub fn inverse_in_place(&mut self, spec: &mut [Complex64]) {
        self.backward.process_with_scratch(spec, &mut self.scratch);
    }

    /// First derivative; the Nyquist coefficient is dropped.
    pub fn derivative(&mut self, values: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(values);
        let nyquist = self.n / 2;
        for (m, z) in spec.iter_mut().enumerate() {
            *z = if m == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                *z * Complex64::new(0.0, self.wavenumbers[m])
            };
        }
        self.inverse(&mut spec)
    }
}

pub fn wavenumbers(period: f64, n: usize) -> Vec<f64> {
    let base = 2.0 * PI / period;
    (0..n)
        .map(|m| {
            let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            base * signed
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_small_grids() {
        assert!(GridField::zeros(1.0, 15).is_err());
        assert!(GridField::zeros(1.0, 14).is_err());
        assert!(GridField::zeros(1.0, 33).is_err());
        assert!(GridField::zeros(0.0, 32).is_err());
        assert!(GridField::zeros(1.0, 16).is_ok());
    }

    #[test]
    fn trapezoid_mean_matches_discrete_mean() {
        let f = GridField::from_fn(2.5, 64, |x| 1.0 + (x * 0.3).sin()).unwrap();
        assert!((f.integral() / f.period() - f.mean()).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_trigonometric_polynomial_is_exact() {
        let l = 3.0;
        let xi = 2.0 * PI / l;
        let f = GridField::from_fn(l, 32, |x| (3.0 * xi * x).sin() + 0.5 * (xi * x).cos()).unwrap();
        let df = f.derivative();
        for (x, d) in f.points().zip(df.values()) {
            let exact = 3.0 * xi * (3.0 * xi * x).cos() - 0.5 * xi * (xi * x).sin();
            assert!((d - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_moves_samples() {
        let l = 2.0;
        let xi = 2.0 * PI / l;
        let f = GridField::from_fn(l, 32, |x| (xi * x).sin() + (2.0 * xi * x).cos()).unwrap();
        let s = 0.37;
        let g = f.shifted(s);
        for (x, v) in f.points().zip(g.values()) {
            let exact = (xi * (x + s)).sin() + (2.0 * xi * (x + s)).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn parseval_normalisation() {
        let l = 1.7;
        let f = GridField::from_fn(l, 64, |x| (2.0 * PI * x / l).cos() + 0.25).unwrap();
        let mut fourier = Fourier::new(l, 64);
        let spec = fourier.forward(f.values());
        let via_spec: f64 = l * spec.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let direct = f.inner(&f);
        assert!((via_spec - direct).abs() < 1e-13);
    }
}
