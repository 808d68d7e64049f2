//! Closed-form data for `L1` derived from the Lamé structure of `3h²`.

use serde::Serialize;

use crate::elliptic;
use crate::error::Result;
use crate::grid::GridField;
use crate::waves::WaveParameters;

/// `sqrt(1 - k² + k⁴)`
fn root(k: f64) -> f64 {
    let k2 = k * k;
    (1.0 - k2 + k2 * k2).sqrt()
}

/// Lowest eigenvalue of `L1`.
pub fn lambda0(k: f64) -> f64 {
    let k2 = k * k;
    (1.0 + k2 - 2.0 * root(k)) / (1.0 + k2)
}

/// The eigenvalue paired with `f₄ = 1 - B₁ sn²`.
pub fn lambda4(k: f64) -> f64 {
    let k2 = k * k;
    (1.0 + k2 + 2.0 * root(k)) / (1.0 + k2)
}

/// `(B₁, B₂) = (1 + k² + √Δ, -(1 + k² - √Δ))` with `Δ = 1 - k² + k⁴`.
pub fn b_coefficients(k: f64) -> (f64, f64) {
    let k2 = k * k;
    (1.0 + k2 + root(k), -(1.0 + k2 - root(k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WhichEigenpair {
    First,
    Fifth,
}

#[derive(Debug, Clone)]
pub struct ClosedFormEigenpair {
    pub lambda: f64,
    pub eigenfunction: GridField,
    pub which: WhichEigenpair,
}

fn sn_squared(wave: &WaveParameters, n: usize) -> Result<GridField> {
    GridField::from_fn(wave.period, n, |x| {
        let t = elliptic::jacobi_with_quarter_period(wave.wavenumber * x, wave.modulus, wave.quarter_period);
        t.sn * t.sn
    })
}

/// `(λ₀, f₀)` and `(λ₄, f₄)` sampled on the `N`-point grid, with
/// `f₀ = 1 + B₂ sn²(bx)` and `f₄ = 1 - B₁ sn²(bx)`.
pub fn closed_form_eigenpairs(
    wave: &WaveParameters,
    n: usize,
) -> Result<(ClosedFormEigenpair, ClosedFormEigenpair)> {
    let k = wave.k();
    let (b1, b2) = b_coefficients(k);
    let sn2 = sn_squared(wave, n)?;
    Ok((
        ClosedFormEigenpair {
            lambda: lambda0(k),
            eigenfunction: sn2.map(|s| 1.0 + b2 * s),
            which: WhichEigenpair::First,
        },
        ClosedFormEigenpair {
            lambda: lambda4(k),
            eigenfunction: sn2.map(|s| 1.0 - b1 * s),
            which: WhichEigenpair::Fifth,
        },
    ))
}

/// `f̃ = (λ₄ B₁ f₀ + λ₀ B₂ f₄) / (2 λ₀ λ₄ √Δ)`, the solution of `L1 f̃ = 1`.
pub fn inverse_of_one(wave: &WaveParameters, n: usize) -> Result<GridField> {
    let k = wave.k();
    let (l0, l4) = (lambda0(k), lambda4(k));
    let (b1, b2) = b_coefficients(k);
    let (p0, p4) = closed_form_eigenpairs(wave, n)?;
    let denom = 2.0 * l0 * l4 * root(k);
    let values = p0
        .eigenfunction
        .values()
        .iter()
        .zip(p4.eigenfunction.values())
        .map(|(f0, f4)| (l4 * b1 * f0 + l0 * b2 * f4) / denom)
        .collect();
    GridField::new(wave.period, values)
}

/// `D₁ = (L1⁻¹ 1, 1) = -L (1 + k²)/(1 - k²)² · [(1 + k²) + 2 (E - K)/K]`.
pub fn d1_closed(wave: &WaveParameters) -> f64 {
    let k2 = wave.k().powi(2);
    let kp2 = wave.modulus.complementary().powi(2);
    let (kk, ee) = (wave.quarter_period, wave.complete_e);
    -wave.period * (1.0 + k2) / (kp2 * kp2) * ((1.0 + k2) + 2.0 * (ee - kk) / kk)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_straddle_zero() {
        for i in 1..100 {
            let k = i as f64 / 100.0;
            assert!(lambda0(k) < 0.0 && lambda4(k) > 0.0, "k={k}");
            let (b1, b2) = b_coefficients(k);
            assert!(b1 > 0.0 && b2 < 0.0);
        }
    }

    #[test]
    fn b_combination_is_constant() {
        let w = WaveParameters::new(std::f64::consts::PI, 0.95).unwrap();
        let (b1, b2) = b_coefficients(w.k());
        let (p0, p4) = closed_form_eigenpairs(&w, 64).unwrap();
        let target = 2.0 * root(w.k());
        for (f0, f4) in p0.eigenfunction.values().iter().zip(p4.eigenfunction.values()) {
            assert!((b1 * f0 + b2 * f4 - target).abs() < 1e-12);
        }
    }

    #[test]
    fn d1_small_modulus_limit() {
        let l = 2.0;
        let w = WaveParameters::new(l, crate::waves::speed_at_omega_fraction(l, 1.0 - 1e-9)).unwrap();
        assert!((d1_closed(&w) / l + 1.0).abs() < 1e-3, "{}", d1_closed(&w) / l);
    }
}
