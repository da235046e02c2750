//! Exact single-excitation dynamics of the atom + array system.
//!
//! The state lives in the mode basis: one atom amplitude and one amplitude
//! per standing-wave mode. In that basis the Hamiltonian is an arrowhead
//! matrix, so the propagator comes from [`crate::arrowhead`].

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::arrowhead::{arrowhead_eigen, ArrowheadEigen};
use crate::error::{CcaError, Result};
use crate::model::{CcaModel, CcaParams};

/// Atom amplitude plus one amplitude per mode (index `k - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationState {
    pub alpha: Complex64,
    pub beta: Vec<Complex64>,
}

impl ExcitationState {
    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.iter().map(|b| b.norm_sqr()).sum::<f64>()
    }

    /// Amplitude of mode `k` (1-based).
    pub fn mode(&self, k: usize) -> Complex64 {
        self.beta[k - 1]
    }

    /// Largest per-amplitude distance to `other`.
    pub fn max_abs_diff(&self, other: &ExcitationState) -> f64 {
        self.beta
            .iter()
            .zip(&other.beta)
            .map(|(a, b)| (a - b).norm())
            .fold((self.alpha - other.alpha).norm(), f64::max)
    }
}

/// Atom excited, array in vacuum.
pub fn initial_excited_state(model: &CcaModel) -> ExcitationState {
    ExcitationState {
        alpha: Complex64::new(1.0, 0.0),
        beta: vec![Complex64::new(0.0, 0.0); model.n_modes()],
    }
}

/// Restricts the dynamics to modes `center - half_width ..= center + half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationWindow {
    pub half_width: usize,
    /// Defaults to the resonant mode.
    pub center: Option<usize>,
}

impl TruncationWindow {
    pub fn around_resonance(half_width: usize) -> Self {
        TruncationWindow {
            half_width,
            center: None,
        }
    }

    /// Mode range after clipping to `[1, N]`.
    pub fn resolve(&self, model: &CcaModel) -> Result<RangeInclusive<usize>> {
        let center = self.center.unwrap_or(model.k0());
        model.check_mode(center)?;
        let lo = center.saturating_sub(self.half_width).max(1);
        let hi = center.saturating_add(self.half_width).min(model.n_modes());
        if lo > hi {
            return Err(CcaError::validation("empty truncation window"));
        }
        Ok(lo..=hi)
    }
}

/// Which mode populations a trajectory materialises.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeSelection {
    None,
    All,
    List(Vec<usize>),
}

impl ModeSelection {
    pub fn range(r: RangeInclusive<usize>) -> Self {
        ModeSelection::List(r.collect())
    }

    /// Sorted, deduplicated mode indices.
    pub fn resolve(&self, model: &CcaModel) -> Result<Vec<usize>> {
        let mut modes = match self {
            ModeSelection::None => Vec::new(),
            ModeSelection::All => (1..=model.n_modes()).collect(),
            ModeSelection::List(list) => {
                for &k in list {
                    model.check_mode(k)?;
                }
                list.clone()
            }
        };
        modes.sort_unstable();
        modes.dedup();
        Ok(modes)
    }
}

/// Single-excitation Hamiltonian in the mode basis, restricted to `modes`.
///
/// Row/column 0 is the atom; row `j + 1` is mode `modes[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowheadHamiltonian {
    pub atom_energy: f64,
    pub modes: Vec<usize>,
    pub mode_energies: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl ArrowheadHamiltonian {
    pub fn dim(&self) -> usize {
        self.modes.len() + 1
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        h[(0, 0)] = self.atom_energy;
        for (j, (&w, &g)) in self.mode_energies.iter().zip(&self.couplings).enumerate() {
            h[(j + 1, j + 1)] = w;
            h[(0, j + 1)] = g;
            h[(j + 1, 0)] = g;
        }
        h
    }

    /// `out = H x` over the local basis.
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let mut top = x[0] * self.atom_energy;
        for j in 0..self.modes.len() {
            top += x[j + 1] * self.couplings[j];
            out[j + 1] = x[j + 1] * self.mode_energies[j] + x[0] * self.couplings[j];
        }
        out[0] = top;
    }
}

pub fn build_hamiltonian(model: &CcaModel, trunc: Option<&TruncationWindow>) -> Result<ArrowheadHamiltonian> {
    let modes: Vec<usize> = match trunc {
        Some(w) => w.resolve(model)?.collect(),
        None => (1..=model.n_modes()).collect(),
    };
    Ok(ArrowheadHamiltonian {
        atom_energy: model.omega_a(),
        mode_energies: modes.iter().map(|&k| model.frequencies()[k - 1]).collect(),
        couplings: modes.iter().map(|&k| model.couplings()[k - 1]).collect(),
        modes,
    })
}

/// `<C|H|C>` for the full (untruncated) Hamiltonian.
pub fn energy_expectation(model: &CcaModel, state: &ExcitationState) -> f64 {
    let mut e = model.omega_a() * state.alpha.norm_sqr();
    for (k, b) in state.beta.iter().enumerate() {
        e += model.frequencies()[k] * b.norm_sqr();
        e += 2.0 * model.couplings()[k] * (state.alpha.conj() * b).re;
    }
    e
}

fn to_local(h: &ArrowheadHamiltonian, state: &ExcitationState) -> Result<Vec<Complex64>> {
    let n = state.beta.len();
    let mut inside = vec![false; n];
    let mut local = Vec::with_capacity(h.dim());
    local.push(state.alpha);
    for &k in &h.modes {
        inside[k - 1] = true;
        local.push(state.beta[k - 1]);
    }
    if let Some(k) = (0..n).find(|&i| !inside[i] && state.beta[i] != Complex64::new(0.0, 0.0)) {
        return Err(CcaError::validation(format!(
            "state has amplitude in mode {} outside the truncation window",
            k + 1
        )));
    }
    Ok(local)
}

fn from_local(h: &ArrowheadHamiltonian, n_modes: usize, local: &[Complex64]) -> ExcitationState {
    let mut beta = vec![Complex64::new(0.0, 0.0); n_modes];
    for (j, &k) in h.modes.iter().enumerate() {
        beta[k - 1] = local[j + 1];
    }
    ExcitationState { alpha: local[0], beta }
}

/// Population time series from one propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub atom_pop: Vec<f64>,
    /// `M_k(t)` for every tracked mode `k`.
    pub mode_pops: BTreeMap<usize, Vec<f64>>,
    pub params: CcaParams,
    pub truncation: Option<TruncationWindow>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn mode(&self, k: usize) -> Result<&[f64]> {
        self.mode_pops
            .get(&k)
            .map(Vec::as_slice)
            .ok_or_else(|| CcaError::validation(format!("mode {k} was not tracked")))
    }

    /// Atom plus every tracked mode, per sample.
    pub fn total_population(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.atom_pop[i] + self.mode_pops.values().map(|m| m[i]).sum::<f64>())
            .collect()
    }
}

/// Diagonalised propagator `exp(-i H t)` for one model and truncation.
#[derive(Debug, Clone)]
pub struct Propagator {
    hamiltonian: ArrowheadHamiltonian,
    eigen: ArrowheadEigen,
    n_modes: usize,
}

impl Propagator {
    pub fn new(model: &CcaModel, trunc: Option<&TruncationWindow>) -> Result<Self> {
        let hamiltonian = build_hamiltonian(model, trunc)?;
        let eigen = arrowhead_eigen(
            hamiltonian.atom_energy,
            &hamiltonian.mode_energies,
            &hamiltonian.couplings,
        )?;
        Ok(Propagator {
            hamiltonian,
            eigen,
            n_modes: model.n_modes(),
        })
    }

    pub fn hamiltonian(&self) -> &ArrowheadHamiltonian {
        &self.hamiltonian
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eigen.values()
    }

    /// Eigenbasis coefficients `V^T c`.
    fn coefficients(&self, local: &[Complex64]) -> Vec<Complex64> {
        let n = self.eigen.dim();
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for (i, &c) in local.iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (wj, &v) in w.iter_mut().zip(self.eigen.row(i)) {
                *wj += c * v;
            }
        }
        w
    }

    fn phased(&self, w: &[Complex64], t: f64) -> Vec<Complex64> {
        w.iter()
            .zip(self.eigen.values())
            .map(|(&wj, &lambda)| wj * Complex64::from_polar(1.0, -lambda * t))
            .collect()
    }

    fn local_component(&self, i: usize, phased: &[Complex64]) -> Complex64 {
        self.eigen
            .row(i)
            .iter()
            .zip(phased)
            .fold(Complex64::new(0.0, 0.0), |acc, (&v, &p)| acc + p * v)
    }

    /// Evolves `state` by time `t` (any sign).
    pub fn evolve(&self, state: &ExcitationState, t: f64) -> Result<ExcitationState> {
        let local = to_local(&self.hamiltonian, state)?;
        if t == 0.0 {
            return Ok(state.clone());
        }
        let phased = self.phased(&self.coefficients(&local), t);
        let out: Vec<Complex64> = (0..self.eigen.dim())
            .map(|i| self.local_component(i, &phased))
            .collect();
        check_finite(&out)?;
        Ok(from_local(&self.hamiltonian, self.n_modes, &out))
    }

    /// Samples atom and tracked-mode populations at `times`.
    pub fn trajectory(
        &self,
        model: &CcaModel,
        state0: &ExcitationState,
        times: &[f64],
        tracked: &ModeSelection,
    ) -> Result<Trajectory> {
        validate_times(times)?;
        let tracked = tracked.resolve(model)?;
        let local = to_local(&self.hamiltonian, state0)?;
        let w = self.coefficients(&local);

        // modes outside the window keep their initial (zero) population
        let rows: Vec<Option<usize>> = tracked
            .iter()
            .map(|&k| self.hamiltonian.modes.iter().position(|&m| m == k).map(|j| j + 1))
            .collect();

        let mut atom_pop = Vec::with_capacity(times.len());
        let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); tracked.len()];
        for &t in times {
            // identity at t = 0, free of reconstruction rounding
            if t == 0.0 {
                atom_pop.push(local[0].norm_sqr());
                for (s, row) in series.iter_mut().zip(&rows) {
                    s.push(row.map_or(0.0, |i| local[i].norm_sqr()));
                }
                continue;
            }
            let phased = self.phased(&w, t);
            let a = self.local_component(0, &phased);
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(CcaError::numerical(format!("non-finite amplitude at t = {t}")));
            }
            atom_pop.push(a.norm_sqr());
            for (s, row) in series.iter_mut().zip(&rows) {
                s.push(match row {
                    Some(i) => self.local_component(*i, &phased).norm_sqr(),
                    None => 0.0,
                });
            }
        }
        Ok(Trajectory {
            times: times.to_vec(),
            atom_pop,
            mode_pops: tracked.into_iter().zip(series).collect(),
            params: model.params().clone(),
            truncation: None,
        })
    }
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(CcaError::validation("empty time grid"));
    }
    if !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(CcaError::validation("times must be finite and start at t >= 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CcaError::validation("times must be strictly increasing"));
    }
    Ok(())
}

fn check_finite(v: &[Complex64]) -> Result<()> {
    if v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(CcaError::numerical("non-finite amplitude"))
    }
}

/// Uniform grid `0, dt, 2 dt, ...` up to and including `t_max` (within
/// rounding).
pub fn uniform_times(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !(dt > 0.0) || !t_max.is_finite() || !dt.is_finite() {
        return Err(CcaError::validation("t_max and dt must be positive"));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|i| i as f64 * dt).collect())
}

/// Exact evolution through the eigendecomposition of the arrowhead
/// Hamiltonian, sampled on `times`.
pub fn propagate_eigen(
    model: &CcaModel,
    state0: &ExcitationState,
    times: &[f64],
    trunc: Option<&TruncationWindow>,
    tracked: &ModeSelection,
) -> Result<Trajectory> {
    let propagator = Propagator::new(model, trunc)?;
    let mut traj = propagator.trajectory(model, state0, times, tracked)?;
    traj.truncation = trunc.copied();
    Ok(traj)
}

fn check_ode_step(model: &CcaModel, dt: f64) -> Result<()> {
    let bound = dt * (2.0 * model.params().hopping_eta + model.omega_a().abs());
    if !(dt > 0.0) || !(bound < 0.1) {
        return Err(CcaError::validation(format!(
            "ode step dt = {dt} too large: dt * (2 eta + |omega_a|) = {bound} must be < 0.1"
        )));
    }
    Ok(())
}

/// `H - omega_a`: integrating in the frame rotating with the atom changes
/// only a global phase, and keeps a decoupled atom exactly stationary.
fn rotating_frame(h: &ArrowheadHamiltonian) -> ArrowheadHamiltonian {
    let shift = h.atom_energy;
    ArrowheadHamiltonian {
        atom_energy: 0.0,
        modes: h.modes.clone(),
        mode_energies: h.mode_energies.iter().map(|w| w - shift).collect(),
        couplings: h.couplings.clone(),
    }
}

fn rk4_step(h: &ArrowheadHamiltonian, c: &mut [Complex64], dt: f64, scratch: &mut [Vec<Complex64>; 5]) {
    // dC/dt = -i H C
    let minus_i = Complex64::new(0.0, -1.0);
    let n = c.len();
    let [k1, k2, k3, k4, tmp] = scratch;
    h.apply(c, k1);
    k1.iter_mut().for_each(|x| *x *= minus_i);
    for i in 0..n {
        tmp[i] = c[i] + k1[i] * (0.5 * dt);
    }
    h.apply(tmp, k2);
    k2.iter_mut().for_each(|x| *x *= minus_i);
    for i in 0..n {
        tmp[i] = c[i] + k2[i] * (0.5 * dt);
    }
    h.apply(tmp, k3);
    k3.iter_mut().for_each(|x| *x *= minus_i);
    for i in 0..n {
        tmp[i] = c[i] + k3[i] * dt;
    }
    h.apply(tmp, k4);
    k4.iter_mut().for_each(|x| *x *= minus_i);
    for i in 0..n {
        c[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// Fixed-step RK4 evolution of `state0` to time `t` (an integer number
/// of steps; the last step is shortened to land on `t`).
pub fn ode_evolve(
    model: &CcaModel,
    state0: &ExcitationState,
    t: f64,
    dt: f64,
    trunc: Option<&TruncationWindow>,
) -> Result<ExcitationState> {
    check_ode_step(model, dt)?;
    if !(t >= 0.0) {
        return Err(CcaError::validation("ode evolution time must be nonnegative"));
    }
    let full = build_hamiltonian(model, trunc)?;
    let h = rotating_frame(&full);
    let mut c = to_local(&h, state0)?;
    let mut scratch: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); c.len()]);
    let steps = (t / dt).ceil() as usize;
    let mut now = 0.0;
    for i in 0..steps {
        let next = if i + 1 == steps { t } else { (i + 1) as f64 * dt };
        rk4_step(&h, &mut c, next - now, &mut scratch);
        now = next;
    }
    let phase = Complex64::from_polar(1.0, -full.atom_energy * t);
    c.iter_mut().for_each(|x| *x *= phase);
    check_finite(&c)?;
    Ok(from_local(&h, model.n_modes(), &c))
}

/// Fixed-step RK4 integration of `i dC/dt = H C`, sampled every step.
pub fn propagate_ode(
    model: &CcaModel,
    state0: &ExcitationState,
    t_max: f64,
    dt: f64,
    trunc: Option<&TruncationWindow>,
    tracked: &ModeSelection,
) -> Result<Trajectory> {
    check_ode_step(model, dt)?;
    let times = uniform_times(t_max, dt)?;
    propagate_ode_sampled(model, state0, &times, dt, trunc, tracked)
}

/// RK4 integration recording populations only at `times`. Steps between
/// samples are no longer than `dt`.
pub fn propagate_ode_sampled(
    model: &CcaModel,
    state0: &ExcitationState,
    times: &[f64],
    dt: f64,
    trunc: Option<&TruncationWindow>,
    tracked: &ModeSelection,
) -> Result<Trajectory> {
    check_ode_step(model, dt)?;
    validate_times(times)?;
    let tracked_modes = tracked.resolve(model)?;
    let h = rotating_frame(&build_hamiltonian(model, trunc)?);
    let mut c = to_local(&h, state0)?;
    let rows: Vec<Option<usize>> = tracked_modes
        .iter()
        .map(|&k| h.modes.iter().position(|&m| m == k).map(|j| j + 1))
        .collect();
    let mut scratch: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); c.len()]);

    let mut atom_pop = Vec::with_capacity(times.len());
    let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); tracked_modes.len()];
    let mut now = 0.0;
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let steps = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let step = span / steps as f64;
            for _ in 0..steps {
                rk4_step(&h, &mut c, step, &mut scratch);
            }
            now = t;
        }
        atom_pop.push(c[0].norm_sqr());
        for (s, row) in series.iter_mut().zip(&rows) {
            s.push(row.map_or(0.0, |r| c[r].norm_sqr()));
        }
    }
    check_finite(&c)?;
    Ok(Trajectory {
        times: times.to_vec(),
        atom_pop,
        mode_pops: tracked_modes.into_iter().zip(series).collect(),
        params: model.params().clone(),
        truncation: trunc.copied(),
    })
}

/// Row-aligned population columns extracted from a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTable {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl PopulationTable {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// `time`, `atom_pop`, then `mode_<k>` for each selected mode, ascending.
pub fn observables(traj: &Trajectory, selection: &[usize]) -> Result<PopulationTable> {
    let mut modes = selection.to_vec();
    modes.sort_unstable();
    modes.dedup();
    let mut headers = vec!["time".to_string(), "atom_pop".to_string()];
    let mut columns = vec![traj.times.clone(), traj.atom_pop.clone()];
    for k in modes {
        columns.push(traj.mode(k)?.to_vec());
        headers.push(format!("mode_{k}"));
    }
    Ok(PopulationTable { headers, columns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, Resonance};

    fn toy() -> CcaModel {
        build_model(CcaParams::new(21, 11, 0.1, Resonance::ModeIndex(11))).unwrap()
    }

    #[test]
    fn hamiltonian_shape() {
        let m = build_model(CcaParams::new(3, 2, 0.3, Resonance::ModeIndex(1))).unwrap();
        let h = build_hamiltonian(&m, None).unwrap().to_dense();
        assert_eq!(h.shape(), (4, 4));
        assert_eq!(h, h.transpose());
        for i in 1..4 {
            for j in 1..4 {
                if i != j {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
        let paper = build_model(CcaParams::new(2001, 1984, 0.0015, Resonance::ModeIndex(55))).unwrap();
        let h = build_hamiltonian(&paper, Some(&TruncationWindow::around_resonance(5))).unwrap();
        assert_eq!(h.dim(), 12);
        assert_eq!(h.modes, (50..=60).collect::<Vec<_>>());
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let m = build_model(CcaParams::new(5, 2, 0.0, Resonance::ModeIndex(3))).unwrap();
        let h = build_hamiltonian(&m, None).unwrap().to_dense();
        assert_eq!(h.clone(), DMatrix::from_diagonal(&h.diagonal()));
    }

    #[test]
    fn window_is_clipped() {
        let m = toy();
        let w = TruncationWindow {
            half_width: 5,
            center: Some(2),
        };
        assert_eq!(w.resolve(&m).unwrap(), 1..=7);
        let w = TruncationWindow {
            half_width: 100,
            center: None,
        };
        assert_eq!(w.resolve(&m).unwrap(), 1..=21);
        let w = TruncationWindow {
            half_width: 1,
            center: Some(22),
        };
        assert!(w.resolve(&m).is_err());
    }

    #[test]
    fn initial_state_is_excited_atom() {
        let m = toy();
        let s = initial_excited_state(&m);
        assert_eq!(s.alpha, Complex64::new(1.0, 0.0));
        assert!(s.beta.iter().all(|b| *b == Complex64::new(0.0, 0.0)));
        assert_eq!(s.norm_sqr(), 1.0);
        let traj = propagate_eigen(&m, &s, &[0.0, 1.0], None, &ModeSelection::None).unwrap();
        assert!((traj.atom_pop[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decoupled_atom_stays_excited() {
        let m = build_model(CcaParams::new(15, 4, 0.0, Resonance::ModeIndex(7))).unwrap();
        let s = initial_excited_state(&m);
        let times = uniform_times(100.0, 1.0).unwrap();
        let traj = propagate_eigen(&m, &s, &times, None, &ModeSelection::All).unwrap();
        assert!(traj.atom_pop.iter().all(|p| (p - 1.0).abs() < 1e-14));
        let ode = propagate_ode(&m, &s, 10.0, 0.01, None, &ModeSelection::None).unwrap();
        assert!(ode.atom_pop.iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ode_step_guard() {
        let m = toy();
        let s = initial_excited_state(&m);
        assert!(matches!(
            propagate_ode(&m, &s, 1.0, 0.1, None, &ModeSelection::None),
            Err(CcaError::Validation(_))
        ));
    }

    #[test]
    fn rejects_bad_time_grids() {
        let m = toy();
        let s = initial_excited_state(&m);
        assert!(propagate_eigen(&m, &s, &[0.0, 2.0, 1.0], None, &ModeSelection::None).is_err());
        assert!(propagate_eigen(&m, &s, &[-1.0, 0.0], None, &ModeSelection::None).is_err());
        assert!(propagate_eigen(&m, &s, &[], None, &ModeSelection::None).is_err());
    }

    #[test]
    fn truncated_propagation_rejects_outside_amplitude() {
        let m = toy();
        let mut s = initial_excited_state(&m);
        s.beta[0] = Complex64::new(0.1, 0.0);
        let w = TruncationWindow::around_resonance(2);
        assert!(propagate_eigen(&m, &s, &[0.0], Some(&w), &ModeSelection::None).is_err());
    }

    #[test]
    fn observables_columns() {
        let m = toy();
        let s = initial_excited_state(&m);
        let traj = propagate_eigen(&m, &s, &[0.0, 1.0, 2.0], None, &ModeSelection::range(5..=15)).unwrap();
        let t = observables(&traj, &[]).unwrap();
        assert_eq!(t.headers, vec!["time", "atom_pop"]);
        let t = observables(&traj, &(5..=15).collect::<Vec<_>>()).unwrap();
        assert_eq!(t.columns.len(), 13);
        assert_eq!(t.headers[2], "mode_5");
        assert_eq!(t.n_rows(), 3);
        assert!(observables(&traj, &[3]).is_err());
    }

    #[test]
    fn eigen_matches_dense_exponential() {
        // independent route: dense symmetric eigensolver of the same matrix
        let m = toy();
        let h = build_hamiltonian(&m, None).unwrap().to_dense();
        let eig = h.clone().symmetric_eigen();
        let t = 37.5;
        let prop = Propagator::new(&m, None).unwrap();
        let s = prop.evolve(&initial_excited_state(&m), t).unwrap();
        for i in 0..h.nrows() {
            let mut amp = Complex64::new(0.0, 0.0);
            for j in 0..h.nrows() {
                let v = eig.eigenvectors[(i, j)] * eig.eigenvectors[(0, j)];
                amp += Complex64::from_polar(v, -eig.eigenvalues[j] * t);
            }
            let ours = if i == 0 { s.alpha } else { s.beta[i - 1] };
            assert!((amp - ours).norm() < 1e-12);
        }
    }
}
