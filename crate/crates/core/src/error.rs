use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("elliptic modulus {0} must lie strictly inside (1e-12, 1 - 1e-12)")]
    InvalidModulus(f64),

    #[error(
        "no L-periodic snoidal wave at L = {period}, c = {speed}: need 0 < L < 2π and \
         ω = 1 - c² in (0, L²/4π²) = (0, {omega_max}), got ω = {omega}"
    )]
    OutOfRange {
        period: f64,
        speed: f64,
        omega: f64,
        omega_max: f64,
    },

    #[error("modulus root for ω = {omega} falls outside the bisection bracket [{lo}, {hi}]")]
    ModulusAtBoundary { omega: f64, lo: f64, hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("symmetric eigensolver did not converge on a {0}x{0} matrix")]
    EigFailure(usize),

    #[error("projected linear system is singular: {0}")]
    SingularSystem(String),

    #[error("index formula predicts (n, z) = {predicted:?} but the direct spectrum gives {direct:?}")]
    IndexMismatch {
        predicted: (usize, usize),
        direct: (usize, usize),
    },

    #[error("sup-norm of phi reached {norm} > {ceiling} at t = {time}")]
    BlowUp { time: f64, norm: f64, ceiling: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
