//! Snoidal traveling waves `h(x) = a sn(bx; k)` of `-ω h'' - h + h³ = 0`.
//!
//! A wave is keyed by its period `L` and speed `c`. The modulus follows from
//! the period relation `ω = L² / (16 K(k)² (1 + k²))` with `ω = 1 - c²`,
//! which admits a solution exactly when `0 < ω < L²/4π²`, i.e. for
//! `|c|` in `(sqrt(1 - L²/4π²), 1)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::elliptic::{self, EllipticModulus};
use crate::error::{Error, Result};
use crate::grid::{check_grid, GridField};

/// Bisection bracket for the modulus.
pub const MODULUS_BRACKET: (f64, f64) = (1e-10, 1.0 - 1e-10);
const BISECTION_MAX_ITER: usize = 200;
const NEWTON_POLISH_STEPS: usize = 3;

/// `L²/4π²`, the supremum of admissible `ω` for period `L`.
pub fn omega_max(period: f64) -> f64 {
    (period / (2.0 * PI)).powi(2)
}

/// The speed `c > 0` whose `ω = 1 - c²` equals `fraction · L²/4π²`.
pub fn speed_at_omega_fraction(period: f64, fraction: f64) -> f64 {
    (1.0 - fraction * omega_max(period)).sqrt()
}

/// Smallest admissible `|c|` for period `L` (open endpoint).
pub fn min_speed(period: f64) -> f64 {
    speed_at_omega_fraction(period, 1.0)
}

/// `ω(k) = L² / (16 K² (1 + k²))`.
pub fn omega_of_modulus(period: f64, k: EllipticModulus) -> f64 {
    let kk = elliptic::complete_k(k);
    let k2 = k.value().powi(2);
    period * period / (16.0 * kk * kk * (1.0 + k2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveParameters {
    pub period: f64,
    pub speed: f64,
    pub omega: f64,
    #[serde(serialize_with = "serialize_modulus")]
    pub modulus: EllipticModulus,
    pub amplitude: f64,
    pub wavenumber: f64,
    /// `K(k)`
    pub quarter_period: f64,
    /// `E(k)`
    pub complete_e: f64,
}

fn serialize_modulus<S: serde::Serializer>(k: &EllipticModulus, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(k.value())
}

/// `h`, `h'`, `h''` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
}

/// Profile and its first two derivatives sampled on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSamples {
    pub h: GridField,
    pub dh: GridField,
    pub d2h: GridField,
}

impl WaveParameters {
    pub fn new(period: f64, speed: f64) -> Result<Self> {
        solve_modulus(period, speed)
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.modulus.value()
    }

    /// `|16 K² (1 + k²) ω - L²| / L²`.
    pub fn dispersion_residual(&self) -> f64 {
        let k2 = self.k().powi(2);
        let l2 = self.period * self.period;
        (16.0 * self.quarter_period.powi(2) * (1.0 + k2) * self.omega - l2).abs() / l2
    }

    pub fn profile_eval(&self, x: f64) -> ProfilePoint {
        let t = elliptic::jacobi_with_quarter_period(self.wavenumber * x, self.modulus, self.quarter_period);
        let (a, b, k2) = (self.amplitude, self.wavenumber, self.k().powi(2));
        ProfilePoint {
            h: a * t.sn,
            dh: a * b * t.cn * t.dn,
            d2h: -a * b * b * t.sn * (1.0 + k2 - 2.0 * k2 * t.sn * t.sn),
        }
    }

    pub fn sample(&self, n: usize) -> Result<WaveSamples> {
        sample_wave(self, n)
    }
}

/// Inverts the period relation for the modulus at `(L, c)`.
pub fn solve_modulus(period: f64, speed: f64) -> Result<WaveParameters> {
    let omega = 1.0 - speed * speed;
    let omax = omega_max(period);
    let admissible = period.is_finite()
        && speed.is_finite()
        && period > 0.0
        && period < 2.0 * PI
        && omega > 0.0
        && omega < omax;
    if !admissible {
        return Err(Error::OutOfRange {
            period,
            speed,
            omega,
            omega_max: omax,
        });
    }

    // g(k) = ω(k) - ω is strictly decreasing in k
    let g = |k: f64| omega_of_modulus(period, EllipticModulus::new(k).expect("bracketed modulus")) - omega;
    let (mut lo, mut hi) = MODULUS_BRACKET;
    if g(lo) <= 0.0 || g(hi) >= 0.0 {
        return Err(Error::ModulusAtBoundary {
            omega,
            lo: MODULUS_BRACKET.0,
            hi: MODULUS_BRACKET.1,
        });
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Newton on F(k) = ln(16 ω) + 2 ln K + ln(1 + k²) - 2 ln L
    let mut k = 0.5 * (lo + hi);
    for _ in 0..NEWTON_POLISH_STEPS {
        let m = EllipticModulus::new(k)?;
        let kk = elliptic::complete_k(m);
        let f = (16.0 * omega).ln() + 2.0 * kk.ln() + (1.0 + k * k).ln() - 2.0 * period.ln();
        let df = 2.0 * elliptic::complete_k_derivative(m) / kk + 2.0 * k / (1.0 + k * k);
        let next = k - f / df;
        if !(next > MODULUS_BRACKET.0 && next < MODULUS_BRACKET.1) {
            break;
        }
        k = next;
    }

    let modulus = EllipticModulus::new(k)?;
    let (kk, ee) = elliptic::complete_k_e(modulus);
    Ok(WaveParameters {
        period,
        speed,
        omega,
        modulus,
        amplitude: std::f64::consts::SQRT_2 * k / (1.0 + k * k).sqrt(),
        wavenumber: 4.0 * kk / period,
        quarter_period: kk,
        complete_e: ee,
    })
}

pub fn profile_eval(p: &WaveParameters, x: f64) -> ProfilePoint {
    p.profile_eval(x)
}

pub fn sample_wave(p: &WaveParameters, n: usize) -> Result<WaveSamples> {
    check_grid(p.period, n)?;
    let dx = p.period / n as f64;
    let mut h = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    let mut d2h = Vec::with_capacity(n);
    for j in 0..n {
        let pt = p.profile_eval(j as f64 * dx);
        h.push(pt.h);
        dh.push(pt.dh);
        d2h.push(pt.d2h);
    }
    Ok(WaveSamples {
        h: GridField::new(p.period, h)?,
        dh: GridField::new(p.period, dh)?,
        d2h: GridField::new(p.period, d2h)?,
    })
}

/// `sup_j |-ω h''(x_j) - h(x_j) + h(x_j)³|` with analytic derivatives.
pub fn ode_residual(p: &WaveParameters, n: usize) -> Result<f64> {
    let s = sample_wave(p, n)?;
    Ok(s.h
        .values()
        .iter()
        .zip(s.d2h.values())
        .map(|(&h, &d2h)| (-p.omega * d2h - h + h * h * h).abs())
        .fold(0.0, f64::max))
}
