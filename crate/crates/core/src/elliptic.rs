//! Complete elliptic integrals and Jacobi elliptic functions for a real
//! modulus `0 < k < 1`.
//!
//! `K` and `E` come from the arithmetic-geometric mean; `sn`, `cn`, `dn`
//! from the descending AGM (Landen) recursion on the amplitude.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Moduli closer than this to 0 or 1 are rejected.
pub const MODULUS_MARGIN: f64 = 1e-12;

const AGM_TOL: f64 = 1e-15;
const AGM_MAX_ITER: usize = 64;

/// Modulus of a Jacobi elliptic function, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() && k > MODULUS_MARGIN && k < 1.0 - MODULUS_MARGIN {
            Ok(Self(k))
        } else {
            Err(Error::InvalidModulus(k))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `k' = sqrt(1 - k²)`, evaluated without cancellation near `k = 1`.
    #[inline]
    pub fn complementary(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).sqrt()
    }

    /// Complementary modulus as an `EllipticModulus`.
    pub fn complement(self) -> Result<Self> {
        Self::new(self.complementary())
    }
}

impl TryFrom<f64> for EllipticModulus {
    type Error = Error;

    fn try_from(k: f64) -> Result<Self> {
        Self::new(k)
    }
}

/// Both complete integrals from one AGM sweep: `(K(k), E(k))`.
pub fn complete_k_e(k: EllipticModulus) -> (f64, f64) {
    let mut a = 1.0_f64;
    let mut b = k.complementary();
    let mut c = k.value();
    // E = K (1 - sum_n 2^(n-1) c_n²)
    let mut weight = 0.5;
    let mut sum = weight * c * c;
    for _ in 0..AGM_MAX_ITER {
        let a_next = 0.5 * (a + b);
        let b_next = (a * b).sqrt();
        c = c * c / (4.0 * a_next);
        weight *= 2.0;
        sum += weight * c * c;
        a = a_next;
        b = b_next;
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
    }
    let kk = FRAC_PI_2 / a;
    (kk, kk * (1.0 - sum))
}

/// Complete elliptic integral of the first kind, `∫₀^{π/2} (1 - k² sin²θ)^{-1/2} dθ`.
pub fn complete_k(k: EllipticModulus) -> f64 {
    complete_k_e(k).0
}

/// Complete elliptic integral of the second kind, `∫₀^{π/2} (1 - k² sin²θ)^{1/2} dθ`.
pub fn complete_e(k: EllipticModulus) -> f64 {
    complete_k_e(k).1
}

/// `dK/dk = (E - k'² K) / (k k'²)`.
pub fn complete_k_derivative(k: EllipticModulus) -> f64 {
    let (kk, ee) = complete_k_e(k);
    let kp2 = k.complementary().powi(2);
    (ee - kp2 * kk) / (k.value() * kp2)
}

/// Values of the three Jacobi functions at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

/// `(sn, cn, dn)(u; k)` evaluated together.
///
/// The argument is first reduced to `[-2K, 2K]`; the amplitude is then
/// recovered by descending through the AGM sequence. `dn` is taken from
/// `1 - k² sn²` or the equivalent `k'² + k² cn²`, whichever has no
/// cancellation; it is positive for real arguments.
pub fn jacobi_sn_cn_dn(u: f64, k: EllipticModulus) -> JacobiTriple {
    let kk = complete_k(k);
    jacobi_with_quarter_period(u, k, kk)
}

/// Same as [`jacobi_sn_cn_dn`] with `K(k)` supplied by the caller, for
/// evaluation on many points at a fixed modulus.
pub fn jacobi_with_quarter_period(u: f64, k: EllipticModulus, quarter_period: f64) -> JacobiTriple {
    let period = 4.0 * quarter_period;
    let u = u - period * (u / period).round();

    let kv = k.value();
    let mut a = [0.0_f64; AGM_MAX_ITER + 1];
    let mut c = [0.0_f64; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    c[0] = kv;
    let mut b = k.complementary();
    let mut levels = 0;
    while levels < AGM_MAX_ITER && c[levels].abs() > AGM_TOL {
        let (an, bn) = (a[levels], b);
        a[levels + 1] = 0.5 * (an + bn);
        c[levels + 1] = 0.5 * (an - bn);
        b = (an * bn).sqrt();
        levels += 1;
    }

    let mut phi = (1u64 << levels) as f64 * a[levels] * u;
    for n in (1..=levels).rev() {
        phi = 0.5 * (phi + (c[n] / a[n] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = if sn * sn < 0.5 {
        (1.0 - kv * kv * sn * sn).sqrt()
    } else {
        let kp = k.complementary();
        (kp * kp + kv * kv * cn * cn).sqrt()
    };
    JacobiTriple { sn, cn, dn }
}
