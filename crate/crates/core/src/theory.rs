//! Closed-form predictions for the naked-atom and dressed-atom stages,
//! plus a master-equation integrator used as an oracle for the latter.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::dynamics::ExcitationState;
use crate::error::{CcaError, Result};
use crate::model::CcaModel;

/// Markovian decay rate `4 g^2 / sqrt((2 eta)^2 - (omega_0 - omega_c)^2)`
/// of the bare atom, with `omega_0` the resonant mode frequency.
pub fn decay_rate_ww(model: &CcaModel) -> Result<f64> {
    let p = model.params();
    let offset = model.omega_0() - p.cavity_freq;
    let band = 2.0 * p.hopping_eta;
    let radicand = band * band - offset * offset;
    if !(radicand > 0.0) {
        return Err(CcaError::validation(format!(
            "resonant frequency {} is at or beyond the band edge; decay rate undefined",
            model.omega_0()
        )));
    }
    let gamma = 4.0 * p.coupling_g * p.coupling_g / radicand.sqrt();
    if !gamma.is_finite() {
        return Err(CcaError::numerical(format!(
            "decay rate overflows for g = {:e}",
            p.coupling_g
        )));
    }
    Ok(gamma)
}

/// `exp(-gamma t)` per sample.
pub fn exponential_prediction(gamma: f64, times: &[f64]) -> Vec<f64> {
    times.iter().map(|t| (-gamma * t).exp()).collect()
}

/// Mode population while the atom decays exponentially:
/// `A_k (e^{-G t} - 2 e^{-G t/2} cos(D_k t) + 1)` with
/// `A_k = g_k^2 / (G^2/4 + D_k^2)`.
pub fn mode_population_model(model: &CcaModel, gamma: f64, k: usize, t: f64) -> Result<f64> {
    let g = model.mode_coupling(k)?;
    let delta = model.detuning(k)?;
    let denom = 0.25 * gamma * gamma + delta * delta;
    if denom == 0.0 {
        // resonant mode with no decay: |g t|^2
        return Ok(g * g * t * t);
    }
    let amp = g * g / denom;
    // e^{-2x} - 2 e^{-x} cos(D t) + 1 = (1 - e^{-x})^2 + 4 e^{-x} sin^2(D t / 2)
    let x = 0.5 * gamma * t;
    let rise = -(-x).exp_m1();
    let s = (0.5 * delta * t).sin();
    Ok(amp * (rise * rise + 4.0 * (-x).exp() * s * s))
}

/// Minimum time of a mode population and how well `|D_k| >> G` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumTime {
    pub time: f64,
    /// `|D_k| / G`; the prediction needs this to be large.
    pub validity_ratio: f64,
}

/// `2 pi l / |D_k|`, the `l`-th minimum of mode `k`.
pub fn mode_minimum_times(model: &CcaModel, gamma: f64, k: usize, l: u32) -> Result<MinimumTime> {
    let delta = model.detuning(k)?;
    if l == 0 {
        return Err(CcaError::validation("oscillation count l must be positive"));
    }
    if delta == 0.0 {
        return Err(CcaError::validation(format!(
            "mode {k} is resonant; its population does not oscillate"
        )));
    }
    Ok(MinimumTime {
        time: 2.0 * PI * l as f64 / delta.abs(),
        validity_ratio: delta.abs() / gamma,
    })
}

/// `2 pi / D_1`: all near-resonant modes empty together.
pub fn turning_time(model: &CcaModel) -> Result<f64> {
    Ok(2.0 * PI / model.nearest_mode_spacing()?)
}

/// `(k - k0) D_1`.
pub fn detuning_linear_approx(model: &CcaModel, k: usize) -> Result<f64> {
    model.check_mode(k)?;
    let m = k as f64 - model.k0() as f64;
    if m == 0.0 {
        return Ok(0.0);
    }
    Ok(m * model.nearest_mode_spacing()?)
}

/// Summary of the analytic predictions for one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPrediction {
    pub gamma: f64,
    pub omega0: f64,
    pub t_c: f64,
    pub g_r: f64,
}

impl DecayPrediction {
    pub fn new(model: &CcaModel) -> Result<Self> {
        Ok(DecayPrediction {
            gamma: decay_rate_ww(model)?,
            omega0: model.omega_0(),
            t_c: turning_time(model)?,
            g_r: model.resonant_coupling(),
        })
    }
}

/// Density-matrix block on the dressed doublet
/// `|1>, |2> = (|vac, e> +- |1_k0, g>) / sqrt 2` at time `t_ref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedBlock {
    pub rho11: f64,
    pub rho22: f64,
    pub rho12: Complex64,
    pub t_ref: f64,
}

impl DressedBlock {
    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22
    }

    /// Eigenvalues of the 2x2 block, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.rho11 + self.rho22);
        let diff = 0.5 * (self.rho11 - self.rho22);
        let r = (diff * diff + self.rho12.norm_sqr()).sqrt();
        (mean - r, mean + r)
    }

    /// Block scaled to unit trace.
    pub fn renormalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(CcaError::numerical("cannot renormalize an empty dressed block"));
        }
        Ok(DressedBlock {
            rho11: self.rho11 / tr,
            rho22: self.rho22 / tr,
            rho12: self.rho12 / tr,
            t_ref: self.t_ref,
        })
    }

    /// Atom excitation `(rho11 + rho22 + 2 Re rho12) / 2`.
    pub fn atom_population(&self) -> f64 {
        0.5 * (self.rho11 + self.rho22 + 2.0 * self.rho12.re)
    }
}

/// Projects the pure state onto the dressed doublet at `t_ref`. Amplitudes
/// in other modes are dropped, so the block is generally sub-normalized.
pub fn dressed_basis_project(state: &ExcitationState, model: &CcaModel, t_ref: f64) -> DressedBlock {
    let a = state.alpha;
    let b = state.mode(model.k0());
    let plus = (a + b) / 2f64.sqrt();
    let minus = (a - b) / 2f64.sqrt();
    DressedBlock {
        rho11: plus.norm_sqr(),
        rho22: minus.norm_sqr(),
        rho12: plus * minus.conj(),
        t_ref,
    }
}

fn check_after_ref(block: &DressedBlock, times: &[f64]) -> Result<()> {
    if let Some(t) = times.iter().find(|&&t| !(t >= block.t_ref)) {
        return Err(CcaError::validation(format!(
            "time {t} precedes the dressed-block reference time {}",
            block.t_ref
        )));
    }
    Ok(())
}

fn dressed_rates(model: &CcaModel) -> Result<(f64, f64)> {
    Ok((decay_rate_ww(model)?, model.resonant_coupling()))
}

/// Secular dressed-atom decay:
/// `rho_ee = e^{-G tau/2} (rho11 + rho22 + 2 Re(rho12 e^{-2 i g_r tau})) / 2`.
pub fn dressed_decay_prediction(model: &CcaModel, block: &DressedBlock, times: &[f64]) -> Result<Vec<f64>> {
    let (gamma, g_r) = dressed_rates(model)?;
    dressed_decay_closed_form(block, gamma, g_r, times)
}

/// [`dressed_decay_prediction`] with explicit rates.
pub fn dressed_decay_closed_form(block: &DressedBlock, gamma: f64, g_r: f64, times: &[f64]) -> Result<Vec<f64>> {
    check_after_ref(block, times)?;
    Ok(times
        .iter()
        .map(|&t| {
            let tau = t - block.t_ref;
            let coherence = block.rho12 * Complex64::from_polar(1.0, -2.0 * g_r * tau);
            0.5 * (-0.5 * gamma * tau).exp() * (block.rho11 + block.rho22 + 2.0 * coherence.re)
        })
        .collect())
}

fn rk4_integrate<S, F>(state: &mut S, h: f64, rhs: F)
where
    S: Clone + std::ops::Add<Output = S> + std::ops::Mul<f64, Output = S>,
    F: Fn(&S) -> S,
{
    let k1 = rhs(state);
    let k2 = rhs(&(state.clone() + k1.clone() * (0.5 * h)));
    let k3 = rhs(&(state.clone() + k2.clone() * (0.5 * h)));
    let k4 = rhs(&(state.clone() + k3.clone() * h));
    *state = state.clone() + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
}

/// Integrates `y` from `block.t_ref` through every sample time with steps no
/// longer than `dt`, recording `observe(y)` at each sample.
fn integrate_sampled<S, F, O>(mut y: S, t_ref: f64, times: &[f64], dt: f64, rhs: F, observe: O) -> Vec<f64>
where
    S: Clone + std::ops::Add<Output = S> + std::ops::Mul<f64, Output = S>,
    F: Fn(&S) -> S,
    O: Fn(&S) -> f64,
{
    let mut now = t_ref;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let steps = (span / dt).ceil() as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                rk4_integrate(&mut y, h, &rhs);
            }
            now = t;
        }
        out.push(observe(&y));
    }
    out
}

fn check_dressed_step(gamma: f64, g_r: f64, dt: f64) -> Result<()> {
    let bound = dt * (gamma + 2.0 * g_r);
    if !(dt > 0.0) || !(bound < 0.1) {
        return Err(CcaError::validation(format!(
            "integration step dt = {dt} too large for rates (gamma={gamma}, g_r={g_r})"
        )));
    }
    Ok(())
}

/// Integrates the secular dressed-state equations
/// `d rho_ii/dt = -G/2 rho_ii`, `d rho12/dt = (-2 i g_r - G/2) rho12`
/// and returns `rho_ee`.
pub fn dressed_secular_ode(model: &CcaModel, block: &DressedBlock, times: &[f64], dt: f64) -> Result<Vec<f64>> {
    let (gamma, g_r) = dressed_rates(model)?;
    check_after_ref(block, times)?;
    check_dressed_step(gamma, g_r, dt)?;
    let y = SecularState {
        rho11: block.rho11,
        rho22: block.rho22,
        rho12: block.rho12,
    };
    let rate12 = Complex64::new(-0.5 * gamma, -2.0 * g_r);
    Ok(integrate_sampled(
        y,
        block.t_ref,
        times,
        dt,
        |s| SecularState {
            rho11: -0.5 * gamma * s.rho11,
            rho22: -0.5 * gamma * s.rho22,
            rho12: rate12 * s.rho12,
        },
        |s| 0.5 * (s.rho11 + s.rho22 + 2.0 * s.rho12.re),
    ))
}

#[derive(Debug, Clone, Copy)]
struct SecularState {
    rho11: f64,
    rho22: f64,
    rho12: Complex64,
}

impl std::ops::Add for SecularState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        SecularState {
            rho11: self.rho11 + o.rho11,
            rho22: self.rho22 + o.rho22,
            rho12: self.rho12 + o.rho12,
        }
    }
}

impl std::ops::Mul<f64> for SecularState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        SecularState {
            rho11: self.rho11 * s,
            rho22: self.rho22 * s,
            rho12: self.rho12 * s,
        }
    }
}

#[derive(Debug, Clone)]
struct Density(Matrix3<Complex64>);

impl std::ops::Add for Density {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Density(self.0 + o.0)
    }
}

impl std::ops::Mul<f64> for Density {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Density(self.0 * Complex64::new(s, 0.0))
    }
}

/// Integrates the full (non-secular) dressed-atom master equation
///
/// `d rho/dt = -i[H_d, rho] - G/2 {s+ s-, rho} + G s- rho s+`
///
/// on the basis `{|e,0>, |g,1_k0>, |g,0>}` with
/// `H_d = omega_0 s_z / 2 + omega_0 b+ b + g_r (b+ s- + h.c.)`, starting
/// from the dressed block, and returns `rho_ee` at `times`.
pub fn dressed_lindblad_oracle(model: &CcaModel, block: &DressedBlock, times: &[f64], dt: f64) -> Result<Vec<f64>> {
    let (gamma, g_r) = dressed_rates(model)?;
    dressed_lindblad_with_rates(block, model.omega_0(), gamma, g_r, times, dt)
}

/// [`dressed_lindblad_oracle`] with explicit rates.
pub fn dressed_lindblad_with_rates(
    block: &DressedBlock,
    omega_0: f64,
    gamma: f64,
    g_r: f64,
    times: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    check_after_ref(block, times)?;
    check_dressed_step(gamma, g_r, dt)?;
    let c = |re: f64| Complex64::new(re, 0.0);
    let zero = c(0.0);

    // Energies measured from the doublet so the rotating frame is implicit:
    // |e,0> and |g,1> sit at +omega_0/2, |g,0> at -omega_0/2.
    let e_top = c(0.5 * omega_0);
    let hamiltonian = Matrix3::new(
        e_top,
        c(g_r),
        zero, //
        c(g_r),
        e_top,
        zero, //
        zero,
        zero,
        c(-0.5 * omega_0),
    );
    // s- |e,0> = |g,0>
    let lower = Matrix3::new(
        zero,
        zero,
        zero, //
        zero,
        zero,
        zero, //
        c(1.0),
        zero,
        zero,
    );
    let raise = lower.adjoint();
    let excited_proj = raise * lower;

    // dressed block -> bare basis
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let to_bare = Matrix3::new(
        c(s),
        c(s),
        zero, //
        c(s),
        c(-s),
        zero, //
        zero,
        zero,
        c(1.0),
    );
    let dressed = Matrix3::new(
        c(block.rho11),
        block.rho12,
        zero, //
        block.rho12.conj(),
        c(block.rho22),
        zero, //
        zero,
        zero,
        zero,
    );
    let rho0 = Density(to_bare * dressed * to_bare.adjoint());

    let minus_i = Complex64::new(0.0, -1.0);
    let half_gamma = c(0.5 * gamma);
    let gamma_c = c(gamma);
    let rhs = |r: &Density| {
        let rho = &r.0;
        let commutator = hamiltonian * rho - rho * hamiltonian;
        Density(
            commutator * minus_i - (excited_proj * rho + rho * excited_proj) * half_gamma
                + lower * rho * raise * gamma_c,
        )
    };
    let out = integrate_sampled(rho0, block.t_ref, times, dt, rhs, |r| r.0[(0, 0)].re);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(CcaError::numerical("master equation produced non-finite populations"));
    }
    Ok(out)
}
