//! Numerical laboratory for the snoidal periodic waves of the φ⁴ equation
//! `φ_tt - φ_xx - φ + φ³ = 0` on a period `0 < L < 2π`.
//!
//! * [`elliptic`]: complete elliptic integrals and Jacobi functions.
//! * [`waves`]: the wave family `h(x) = a sn(bx; k)` keyed by `(L, c)`.
//! * [`spectral`]: linearised operators, zero-mean constrained spectra,
//!   index counts, `D₁` and `d''(c)`.
//! * [`evolution`]: split-step integration of the zero-mean projected flow,
//!   conserved quantities and the orbit distance.

pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod spectral;
pub mod waves;

pub use error::{Error, Result};
pub use grid::GridField;
pub use waves::WaveParameters;
