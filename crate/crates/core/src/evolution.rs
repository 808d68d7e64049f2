//! Split-step evolution of the zero-mean projected φ⁴ flow
//! `φ_tt - φ_xx - φ + φ³ - mean(φ³) = 0`.
//!
//! One step is kick / rotate / kick: a half nonlinear kick on `φ_t`, the
//! exact flow of `φ_tt = φ_xx + φ` mode by mode, and a second half kick.
//! Every Fourier mode `m ≠ 0` rotates with frequency `sqrt(ξ_m² - 1)`,
//! which is real because `ξ_m ≥ 2π/L > 1`.

use num_complex::Complex64;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{check_grid, Fourier, GridField};
use crate::waves::{sample_wave, WaveParameters};

/// Default blow-up ceiling for experiments, in units of the wave amplitude.
pub const BLOWUP_FACTOR: f64 = 10.0;

const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub phi: GridField,
    pub phidot: GridField,
    pub t: f64,
}

impl FieldState {
    pub fn new(phi: GridField, phidot: GridField, t: f64) -> Result<Self> {
        if phi.len() != phidot.len() || phi.period() != phidot.period() {
            return Err(Error::InvalidGrid("phi and phidot live on different grids".into()));
        }
        Ok(Self { phi, phidot, t })
    }

    pub fn zeros(period: f64, n: usize) -> Result<Self> {
        Self::new(GridField::zeros(period, n)?, GridField::zeros(period, n)?, 0.0)
    }

    /// The traveling wave `(h, c h')` at `t = 0`.
    pub fn from_wave(wave: &WaveParameters, n: usize) -> Result<Self> {
        let s = sample_wave(wave, n)?;
        Self::new(s.h, s.dh.map(|v| wave.speed * v), 0.0)
    }

    /// The exact solution `(h(x + ct), c h'(x + ct))` at time `t`; the state
    /// `(h, c h')` travels to the left.
    pub fn from_wave_at(wave: &WaveParameters, n: usize, t: f64) -> Result<Self> {
        let shift = wave.speed * t;
        let phi = GridField::from_fn(wave.period, n, |x| wave.profile_eval(x + shift).h)?;
        let phidot = GridField::from_fn(wave.period, n, |x| wave.speed * wave.profile_eval(x + shift).dh)?;
        Self::new(phi, phidot, t)
    }

    pub fn period(&self) -> f64 {
        self.phi.period()
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Adds `eps · (p, q)` in place.
    pub fn perturb(&mut self, eps: f64, p: &GridField, q: &GridField) -> Result<()> {
        if p.len() != self.len() || q.len() != self.len() {
            return Err(Error::InvalidGrid("perturbation grid does not match the state".into()));
        }
        for (v, d) in self.phi.values_mut().iter_mut().zip(p.values()) {
            *v += eps * d;
        }
        for (v, d) in self.phidot.values_mut().iter_mut().zip(q.values()) {
            *v += eps * d;
        }
        Ok(())
    }

    /// Reverses `φ_t`; stepping a flipped state forward runs time backward.
    pub fn flip_velocity(&mut self) {
        self.phidot.values_mut().iter_mut().for_each(|v| *v = -*v);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedQuantities {
    /// `½ ∫ (φ_x² + φ_t² - φ² + φ⁴/2) dx`
    pub energy: f64,
    /// `∫ φ_x φ_t dx`
    pub momentum: f64,
    pub mean_phi: f64,
    pub mean_phidot: f64,
}

/// Per-mode coefficients of the linear flow over one time step.
struct Rotation {
    dt: f64,
    /// `(cos Ωdt, sin Ωdt / Ω, -Ω sin Ωdt)` for each FFT index.
    coeffs: Vec<(f64, f64, f64)>,
}

/// Stepper with a reusable FFT workspace for one `(L, N)` grid.
pub struct Integrator {
    fourier: Fourier,
    projected: bool,
    blowup_ceiling: f64,
    rotation: Option<Rotation>,
    phi_hat: Vec<Complex64>,
    psi_hat: Vec<Complex64>,
}

impl Integrator {
    pub fn new(period: f64, n: usize, projected: bool) -> Result<Self> {
        check_grid(period, n)?;
        Ok(Self {
            fourier: Fourier::new(period, n),
            projected,
            blowup_ceiling: f64::INFINITY,
            rotation: None,
            phi_hat: vec![Complex64::new(0.0, 0.0); n],
            psi_hat: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    pub fn with_blowup_ceiling(mut self, ceiling: f64) -> Self {
        self.blowup_ceiling = ceiling;
        self
    }

    pub fn projected(&self) -> bool {
        self.projected
    }

    fn rotation(&mut self, dt: f64) -> &Rotation {
        if self.rotation.as_ref().is_none_or(|r| r.dt != dt) {
            let coeffs = self
                .fourier
                .wavenumbers()
                .iter()
                .map(|&xi| {
                    let s = xi * xi - 1.0;
                    if s > 0.0 {
                        let w = s.sqrt();
                        let (sin, cos) = (w * dt).sin_cos();
                        (cos, sin / w, -w * sin)
                    } else {
                        // mode 0: φ'' = φ
                        let (sinh, cosh) = (dt.sinh(), dt.cosh());
                        (cosh, sinh, sinh)
                    }
                })
                .collect();
            self.rotation = Some(Rotation { dt, coeffs });
        }
        self.rotation.as_ref().expect("rotation cached above")
    }

    fn kick(&self, state: &mut FieldState, tau: f64) {
        let n = state.len() as f64;
        let shift = if self.projected {
            state.phi.values().iter().map(|v| v * v * v).sum::<f64>() / n
        } else {
            0.0
        };
        let phi = state.phi.values();
        for (psi, &p) in state.phidot.values_mut().iter_mut().zip(phi) {
            *psi -= tau * (p * p * p - shift);
        }
    }

    fn rotate(&mut self, state: &mut FieldState, dt: f64) {
        for (z, &v) in self.phi_hat.iter_mut().zip(state.phi.values()) {
            *z = Complex64::new(v, 0.0);
        }
        for (z, &v) in self.psi_hat.iter_mut().zip(state.phidot.values()) {
            *z = Complex64::new(v, 0.0);
        }
        let mut phi_hat = std::mem::take(&mut self.phi_hat);
        let mut psi_hat = std::mem::take(&mut self.psi_hat);
        self.fourier.forward_in_place(&mut phi_hat);
        self.fourier.forward_in_place(&mut psi_hat);

        let projected = self.projected;
        let rot = self.rotation(dt);
        for (m, &(a, b, c)) in rot.coeffs.iter().enumerate() {
            if m == 0 && projected {
                phi_hat[0] = Complex64::new(0.0, 0.0);
                psi_hat[0] = Complex64::new(0.0, 0.0);
                continue;
            }
            let (p, q) = (phi_hat[m], psi_hat[m]);
            phi_hat[m] = p * a + q * b;
            psi_hat[m] = p * c + q * a;
        }

        self.fourier.inverse_in_place(&mut phi_hat);
        self.fourier.inverse_in_place(&mut psi_hat);
        for (v, z) in state.phi.values_mut().iter_mut().zip(&phi_hat) {
            *v = z.re;
        }
        for (v, z) in state.phidot.values_mut().iter_mut().zip(&psi_hat) {
            *v = z.re;
        }
        self.phi_hat = phi_hat;
        self.psi_hat = psi_hat;
    }

    /// Advances `state` by one Strang step of size `dt > 0`.
    pub fn step(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if state.len() != self.fourier.len() || state.period() != self.fourier.period() {
            return Err(Error::InvalidGrid("state does not match the integrator grid".into()));
        }
        self.kick(state, 0.5 * dt);
        self.rotate(state, dt);
        self.kick(state, 0.5 * dt);
        state.t += dt;

        let norm = state.phi.sup_norm();
        if norm.is_nan() || norm > self.blowup_ceiling {
            return Err(Error::BlowUp {
                time: state.t,
                norm,
                ceiling: self.blowup_ceiling,
            });
        }
        Ok(())
    }

    pub fn conserved(&mut self, state: &FieldState) -> ConservedQuantities {
        let phi_x = self.fourier.derivative(state.phi.values());
        conserved_with_derivative(state, &phi_x)
    }
}

fn conserved_with_derivative(state: &FieldState, phi_x: &[f64]) -> ConservedQuantities {
    let dx = state.phi.spacing();
    let mut energy = 0.0;
    let mut momentum = 0.0;
    for ((&p, &q), &px) in state.phi.values().iter().zip(state.phidot.values()).zip(phi_x) {
        let p2 = p * p;
        energy += px * px + q * q - p2 + 0.5 * p2 * p2;
        momentum += px * q;
    }
    ConservedQuantities {
        energy: 0.5 * dx * energy,
        momentum: dx * momentum,
        mean_phi: state.phi.mean(),
        mean_phidot: state.phidot.mean(),
    }
}

/// One Strang step on a copy of `state`.
pub fn step(state: &FieldState, dt: f64, projected: bool) -> Result<FieldState> {
    let mut integrator = Integrator::new(state.period(), state.len(), projected)?;
    let mut next = state.clone();
    integrator.step(&mut next, dt)?;
    Ok(next)
}

pub fn conserved(state: &FieldState) -> ConservedQuantities {
    let phi_x = state.phi.derivative();
    conserved_with_derivative(state, phi_x.values())
}

/// `(‖p‖²_{H¹}, ‖q‖²_{L²})` weights per FFT index.
fn y_weights(fourier: &Fourier) -> (Vec<f64>, Vec<f64>) {
    let l = fourier.period();
    let h1 = fourier.wavenumbers().iter().map(|xi| l * (1.0 + xi * xi)).collect();
    (h1, vec![l; fourier.len()])
}

/// `‖(p, q)‖_Y = (∫ p² + p_x² + q² dx)^{1/2}`, evaluated spectrally.
pub fn y_norm(p: &GridField, q: &GridField) -> f64 {
    let mut fourier = Fourier::new(p.period(), p.len());
    let (w1, w2) = y_weights(&fourier);
    let ph = fourier.forward(p.values());
    let qh = fourier.forward(q.values());
    let s: f64 = ph.iter().zip(&w1).map(|(z, w)| w * z.norm_sqr()).sum::<f64>()
        + qh.iter().zip(&w2).map(|(z, w)| w * z.norm_sqr()).sum::<f64>();
    s.sqrt()
}

/// Distance in `Y = H¹ × L²` from a state to the translation orbit of a wave.
pub struct OrbitMeter {
    fourier: Fourier,
    target_phi: Vec<Complex64>,
    target_psi: Vec<Complex64>,
    w_phi: Vec<f64>,
    w_psi: Vec<f64>,
}

impl OrbitMeter {
    pub fn new(wave: &WaveParameters, n: usize) -> Result<Self> {
        let target = FieldState::from_wave(wave, n)?;
        let mut fourier = Fourier::new(wave.period, n);
        let target_phi = fourier.forward(target.phi.values());
        let target_psi = fourier.forward(target.phidot.values());
        let (w_phi, w_psi) = y_weights(&fourier);
        Ok(Self {
            fourier,
            target_phi,
            target_psi,
            w_phi,
            w_psi,
        })
    }

    fn phase(&self, m: usize, s: f64) -> Complex64 {
        let xi = self.fourier.wavenumbers()[m];
        if m == self.fourier.len() / 2 {
            Complex64::new((xi * s).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, xi * s)
        }
    }

    fn distance_sq_at(&self, phi: &[Complex64], psi: &[Complex64], s: f64) -> f64 {
        let mut acc = 0.0;
        for m in 0..phi.len() {
            let e = self.phase(m, s);
            acc += self.w_phi[m] * (phi[m] * e - self.target_phi[m]).norm_sqr();
            acc += self.w_psi[m] * (psi[m] * e - self.target_psi[m]).norm_sqr();
        }
        acc
    }

    /// `min_s ‖T_s(φ, φ_t) - (h, c h')‖_Y` and the minimising shift.
    pub fn distance_and_shift(&mut self, state: &FieldState) -> (f64, f64) {
        let n = self.fourier.len();
        let phi = self.fourier.forward(state.phi.values());
        let psi = self.fourier.forward(state.phidot.values());

        // coarse pass: cross-correlation at the N grid shifts via one FFT
        let mut cross: Vec<Complex64> = (0..n)
            .map(|m| {
                phi[m] * self.target_phi[m].conj() * self.w_phi[m] + psi[m] * self.target_psi[m].conj() * self.w_psi[m]
            })
            .collect();
        self.fourier.inverse_in_place(&mut cross);
        let best = (0..n).max_by(|&a, &b| cross[a].re.total_cmp(&cross[b].re)).unwrap_or(0);

        let ds = self.fourier.period() / n as f64;
        let centre = best as f64 * ds;
        let (mut a, mut b) = (centre - ds, centre + ds);
        let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut x1 = b - ratio * (b - a);
        let mut x2 = a + ratio * (b - a);
        let mut f1 = self.distance_sq_at(&phi, &psi, x1);
        let mut f2 = self.distance_sq_at(&phi, &psi, x2);
        while b - a > GOLDEN_TOL {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - ratio * (b - a);
                f1 = self.distance_sq_at(&phi, &psi, x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (b - a);
                f2 = self.distance_sq_at(&phi, &psi, x2);
            }
        }
        let candidates = [(centre, self.distance_sq_at(&phi, &psi, centre)), (x1, f1), (x2, f2)];
        let (s, d2) = candidates
            .into_iter()
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("non-empty candidates");
        (d2.max(0.0).sqrt(), s.rem_euclid(self.fourier.period()))
    }

    pub fn distance(&mut self, state: &FieldState) -> f64 {
        self.distance_and_shift(state).0
    }
}

pub fn orbit_distance(state: &FieldState, wave: &WaveParameters) -> Result<f64> {
    Ok(OrbitMeter::new(wave, state.len())?.distance(state))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "F")]
    pub momentum: f64,
    pub mean_phi: f64,
    pub mean_phidot: f64,
    pub orbit_distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvolutionTrace {
    pub samples: Vec<TraceSample>,
}

pub const TRACE_CSV_HEADER: &str = "t,E,F,mean_phi,mean_phidot,orbit_distance";

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-5, 1e16)` like `%.17g` does.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl EvolutionTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.samples.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let row = [s.t, s.energy, s.momentum, s.mean_phi, s.mean_phidot, s.orbit_distance].map(format_float);
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn max_orbit_distance(&self) -> f64 {
        self.samples.iter().map(|s| s.orbit_distance).fold(0.0, f64::max)
    }

    fn max_relative_drift(&self, f: impl Fn(&TraceSample) -> f64) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        let base = f(first);
        self.samples
            .iter()
            .map(|s| (f(s) - base).abs() / base.abs())
            .fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        self.max_relative_drift(|s| s.energy)
    }

    pub fn momentum_drift(&self) -> f64 {
        self.max_relative_drift(|s| s.momentum)
    }

    pub fn max_abs_mean(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.mean_phi.abs().max(s.mean_phidot.abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub eps: f64,
    pub horizon: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub projected: bool,
    /// Blow-up ceiling as a multiple of the wave amplitude.
    pub blowup_factor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            horizon: 100.0,
            dt: 1e-3,
            sample_every: 100,
            projected: true,
            blowup_factor: BLOWUP_FACTOR,
        }
    }
}

/// Evolves `(h, c h') + ε (p, q)` and samples the conserved quantities and
/// the orbit distance every `sample_every` steps (and at `t = 0`).
pub fn run_experiment(
    wave: &WaveParameters,
    perturbation: (&GridField, &GridField),
    cfg: &ExperimentConfig,
) -> Result<EvolutionTrace> {
    if !(cfg.eps >= 0.0 && cfg.horizon > 0.0 && cfg.dt > 0.0 && cfg.sample_every > 0) {
        return Err(Error::InvalidArgument(format!("bad experiment config {cfg:?}")));
    }
    let (p, q) = perturbation;
    let n = p.len();
    let mut state = FieldState::from_wave(wave, n)?;
    state.perturb(cfg.eps, p, q)?;

    let mut integrator =
        Integrator::new(wave.period, n, cfg.projected)?.with_blowup_ceiling(cfg.blowup_factor * wave.amplitude);
    let mut meter = OrbitMeter::new(wave, n)?;
    let steps = (cfg.horizon / cfg.dt).round() as usize;

    let mut trace = EvolutionTrace {
        samples: Vec::with_capacity(steps / cfg.sample_every + 2),
    };
    let mut record = |state: &FieldState, integrator: &mut Integrator, meter: &mut OrbitMeter| {
        let cq = integrator.conserved(state);
        trace.samples.push(TraceSample {
            t: state.t,
            energy: cq.energy,
            momentum: cq.momentum,
            mean_phi: cq.mean_phi,
            mean_phidot: cq.mean_phidot,
            orbit_distance: meter.distance(state),
        });
    };
    record(&state, &mut integrator, &mut meter);
    for i in 1..=steps {
        integrator.step(&mut state, cfg.dt)?;
        state.t = i as f64 * cfg.dt;
        if i % cfg.sample_every == 0 || i == steps {
            record(&state, &mut integrator, &mut meter);
        }
    }
    Ok(trace)
}

/// Uniform deviate in `[0, 1)` from the top 53 bits of one ChaCha8 word.
fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn normalise(mut p: GridField, mut q: GridField) -> (GridField, GridField) {
    let norm = y_norm(&p, &q);
    if norm > 0.0 {
        p.values_mut().iter_mut().for_each(|v| *v /= norm);
        q.values_mut().iter_mut().for_each(|v| *v /= norm);
    }
    (p, q)
}

/// Zero-mean random field pair on Fourier modes `1..=N/8` with unit `Y`
/// norm. Amplitudes come from ChaCha8 seeded with `seed`.
pub fn random_perturbation(period: f64, n: usize, seed: u64) -> Result<(GridField, GridField)> {
    check_grid(period, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = n / 8;
    let mut draw = || -> Vec<(f64, f64)> {
        (0..modes)
            .map(|_| (2.0 * unit_uniform(&mut rng) - 1.0, 2.0 * unit_uniform(&mut rng) - 1.0))
            .collect()
    };
    let cp = draw();
    let cq = draw();
    let synth = |coeffs: &[(f64, f64)]| {
        GridField::from_fn(period, n, |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let xi = 2.0 * std::f64::consts::PI * (i + 1) as f64 / period;
                    a * (xi * x).cos() + b * (xi * x).sin()
                })
                .sum()
        })
    };
    Ok(normalise(synth(&cp)?, synth(&cq)?))
}

/// `(cos ξx, sin ξx)` for `ξ = 2π m / L`, normalised in `Y`.
pub fn trig_perturbation(period: f64, n: usize, mode: usize) -> Result<(GridField, GridField)> {
    if mode == 0 || mode >= n / 2 {
        return Err(Error::InvalidArgument(format!("mode must be in 1..{}, got {mode}", n / 2)));
    }
    let xi = 2.0 * std::f64::consts::PI * mode as f64 / period;
    let p = GridField::from_fn(period, n, |x| (xi * x).cos())?;
    let q = GridField::from_fn(period, n, |x| (xi * x).sin())?;
    Ok(normalise(p, q))
}

/// A random perturbation whose `φ` component also carries a constant
/// offset; used only to contrast the unprojected flow.
pub fn mean_carrying_perturbation(period: f64, n: usize, seed: u64) -> Result<(GridField, GridField)> {
    let (p, q) = random_perturbation(period, n, seed)?;
    let shifted = p.map(|v| v + 1.0 / period.sqrt());
    Ok(normalise(shifted, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn wave() -> WaveParameters {
        WaveParameters::new(PI, 0.95).unwrap()
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let s = FieldState::zeros(2.0, 64).unwrap();
        for projected in [true, false] {
            let next = step(&s, 0.01, projected).unwrap();
            assert!(next.phi.values().iter().all(|&v| v == 0.0));
            assert!(next.phidot.values().iter().all(|&v| v == 0.0));
        }
        let cq = conserved(&s);
        assert_eq!((cq.energy, cq.momentum), (0.0, 0.0));
    }

    #[test]
    fn wave_momentum_has_the_sign_of_c() {
        let w = wave();
        let cq = conserved(&FieldState::from_wave(&w, 128).unwrap());
        let s = sample_wave(&w, 128).unwrap();
        assert!(cq.momentum > 0.0);
        assert!((cq.momentum - w.speed * s.dh.inner(&s.dh)).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_steps() {
        let s = FieldState::from_wave(&wave(), 64).unwrap();
        assert!(step(&s, 0.0, true).is_err());
        assert!(step(&s, -0.1, true).is_err());
        assert!(step(&s, f64::NAN, true).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let w = wave();
        let mut s = FieldState::from_wave(&w, 64).unwrap();
        let mut integ = Integrator::new(w.period, 64, true).unwrap().with_blowup_ceiling(0.5 * w.amplitude);
        let err = integ.step(&mut s, 1e-3).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn orbit_distance_vanishes_on_the_wave() {
        let w = wave();
        let s = FieldState::from_wave(&w, 128).unwrap();
        assert!(orbit_distance(&s, &w).unwrap() < 1e-10);
    }

    #[test]
    fn random_perturbation_is_zero_mean_unit_norm_and_reproducible() {
        let (p, q) = random_perturbation(PI, 128, 7).unwrap();
        assert!(p.mean().abs() < 1e-15 && q.mean().abs() < 1e-15);
        assert!((y_norm(&p, &q) - 1.0).abs() < 1e-12);
        let (p2, _) = random_perturbation(PI, 128, 7).unwrap();
        assert_eq!(p, p2);
        let (p3, _) = random_perturbation(PI, 128, 8).unwrap();
        assert_ne!(p, p3);
    }

    #[test]
    fn trig_perturbation_bounds() {
        assert!(trig_perturbation(PI, 64, 0).is_err());
        assert!(trig_perturbation(PI, 64, 32).is_err());
        let (p, q) = trig_perturbation(PI, 64, 3).unwrap();
        assert!((y_norm(&p, &q) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.0, -0.0, 1.0, 0.1, 1e-5, 9.99e-6, -8.052911636136084e-17, 2.5e16, 123456.789] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(-8.052911636136084e-17), "-8.052911636136084e-17");
        assert_eq!(format_float(0.25), "0.25");
    }

    #[test]
    fn trace_csv_layout() {
        let trace = EvolutionTrace {
            samples: vec![TraceSample {
                t: 0.5,
                energy: 1.25,
                momentum: -0.1,
                mean_phi: 0.0,
                mean_phidot: 1e-17,
                orbit_distance: 3.0,
            }],
        };
        assert_eq!(trace.to_csv(), "t,E,F,mean_phi,mean_phidot,orbit_distance\n0.5,1.25,-0.1,0,1e-17,3\n");
    }

    #[test]
    fn one_step_error_is_third_order() {
        let w = wave();
        let n = 128;
        let s0 = FieldState::from_wave(&w, n).unwrap();
        let err = |dt: f64| {
            let s1 = step(&s0, dt, true).unwrap();
            let exact = FieldState::from_wave_at(&w, n, dt).unwrap();
            s1.phi
                .values()
                .iter()
                .zip(exact.phi.values())
                .chain(s1.phidot.values().iter().zip(exact.phidot.values()))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let order = (e1 / e2).log2();
        assert!((2.7..3.3).contains(&order), "local order {order}");
    }

    #[test]
    fn flipping_velocity_reverses_the_flow() {
        let w = wave();
        let (p, q) = random_perturbation(w.period, 128, 3).unwrap();
        let mut s = FieldState::from_wave(&w, 128).unwrap();
        s.perturb(1e-2, &p, &q).unwrap();
        let start = s.clone();
        let mut integ = Integrator::new(w.period, 128, true).unwrap();
        for _ in 0..500 {
            integ.step(&mut s, 1e-3).unwrap();
        }
        s.flip_velocity();
        for _ in 0..500 {
            integ.step(&mut s, 1e-3).unwrap();
        }
        s.flip_velocity();
        let diff = s
            .phi
            .values()
            .iter()
            .zip(start.phi.values())
            .chain(s.phidot.values().iter().zip(start.phidot.values()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "reversibility defect {diff}");
    }

    #[test]
    fn projected_flow_keeps_means_at_zero() {
        let w = wave();
        let (p, q) = random_perturbation(w.period, 64, 11).unwrap();
        let mut s = FieldState::from_wave(&w, 64).unwrap();
        s.perturb(1e-2, &p, &q).unwrap();
        let mut integ = Integrator::new(w.period, 64, true).unwrap();
        for _ in 0..10_000 {
            integ.step(&mut s, 1e-3).unwrap();
        }
        assert!(s.phi.mean().abs() <= 1e-12 && s.phidot.mean().abs() <= 1e-12);
    }

    #[test]
    fn unprojected_flow_moves_the_mean() {
        let w = wave();
        let (p, q) = mean_carrying_perturbation(w.period, 64, 5).unwrap();
        let mut s = FieldState::from_wave(&w, 64).unwrap();
        s.perturb(1e-2, &p, &q).unwrap();
        let m0 = s.phi.mean();
        let mut integ = Integrator::new(w.period, 64, false).unwrap();
        for _ in 0..1000 {
            integ.step(&mut s, 1e-3).unwrap();
        }
        assert!((s.phi.mean() - m0).abs() > 1e-6);
    }

    #[test]
    fn orbit_distance_ignores_translation() {
        let w = wave();
        let n = 128;
        for t in [0.137, 0.5, 2.9] {
            let s = FieldState::from_wave_at(&w, n, t).unwrap();
            let mut meter = OrbitMeter::new(&w, n).unwrap();
            let (d, shift) = meter.distance_and_shift(&s);
            assert!(d < 1e-8, "distance {d} at t={t}");
            let expected = (-w.speed * t).rem_euclid(w.period);
            let gap = (shift - expected).abs();
            assert!(gap.min(w.period - gap) < 1e-6);
        }
    }

    #[test]
    fn orbit_distance_of_a_bump_is_bounded_by_its_norm() {
        let w = wave();
        let (p, q) = random_perturbation(w.period, 128, 21).unwrap();
        for eps in [1e-1, 1e-3] {
            let mut s = FieldState::from_wave(&w, 128).unwrap();
            s.perturb(eps, &p, &q).unwrap();
            let d = orbit_distance(&s, &w).unwrap();
            assert!(d > 0.0 && d <= eps * (1.0 + 1e-9), "eps {eps}: {d}");
        }
    }

    #[test]
    fn energy_bounds_the_field() {
        // Poincaré–Wirtinger on a mean-free field: ∫φ² ≤ (L/2π)² ∫φ_x²
        let (p, _) = random_perturbation(PI, 128, 2).unwrap();
        let px = p.derivative();
        let ratio = p.inner(&p) / px.inner(&px);
        assert!(ratio <= (PI / (2.0 * PI)).powi(2) * (1.0 + 1e-12));
    }
}
