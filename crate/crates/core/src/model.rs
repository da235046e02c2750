//! Coupled-cavity array model: standing-wave mode spectrum, atom-mode
//! couplings and detunings.
//!
//! Mode indices are 1-based throughout (`1..=n_cavities`), matching the
//! usual labelling of the sine modes of an open chain.

use std::f64::consts::PI;

use crate::error::{CcaError, Result};

/// How the atomic transition frequency is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resonance {
    /// Atom exactly resonant with mode `k0` (1-based).
    ModeIndex(usize),
    /// Explicit atomic frequency; the resonant mode is the nearest one.
    AtomFrequency(f64),
}

/// User-facing model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaParams {
    pub n_cavities: usize,
    /// Cavity hosting the atom, 1-based.
    pub atom_site: usize,
    /// Atom-cavity coupling, in units of the hopping.
    pub coupling_g: f64,
    pub hopping_eta: f64,
    pub cavity_freq: f64,
    pub resonance: Resonance,
}

impl CcaParams {
    /// Parameters with unit hopping and zero cavity frequency.
    pub fn new(n_cavities: usize, atom_site: usize, coupling_g: f64, resonance: Resonance) -> Self {
        CcaParams {
            n_cavities,
            atom_site,
            coupling_g,
            hopping_eta: 1.0,
            cavity_freq: 0.0,
            resonance,
        }
    }

    pub fn with_hopping(mut self, eta: f64) -> Self {
        self.hopping_eta = eta;
        self
    }

    pub fn with_cavity_freq(mut self, omega_c: f64) -> Self {
        self.cavity_freq = omega_c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_cavities;
        if n == 0 {
            return Err(CcaError::validation("n_cavities must be a positive integer"));
        }
        if self.atom_site < 1 || self.atom_site > n {
            return Err(CcaError::validation(format!(
                "atom_site {} outside [1, {n}]",
                self.atom_site
            )));
        }
        if !(self.hopping_eta > 0.0) || !self.hopping_eta.is_finite() {
            return Err(CcaError::validation(format!(
                "hopping_eta must be positive and finite, got {}",
                self.hopping_eta
            )));
        }
        if !(self.coupling_g >= 0.0) || !self.coupling_g.is_finite() {
            return Err(CcaError::validation(format!(
                "coupling_g must be nonnegative and finite, got {}",
                self.coupling_g
            )));
        }
        if !self.cavity_freq.is_finite() {
            return Err(CcaError::validation("cavity_freq must be finite"));
        }
        match self.resonance {
            Resonance::ModeIndex(k0) if k0 < 1 || k0 > n => Err(CcaError::validation(format!(
                "resonant mode index {k0} outside [1, {n}]"
            ))),
            Resonance::AtomFrequency(w) if !w.is_finite() => Err(CcaError::validation("atom_freq must be finite")),
            _ => Ok(()),
        }
    }
}

/// Immutable model derived from [`CcaParams`].
///
/// Per-mode arrays are indexed by `k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    params: CcaParams,
    theta: Vec<f64>,
    omega: Vec<f64>,
    couplings: Vec<f64>,
    detunings: Vec<f64>,
    k0: usize,
    omega_a: f64,
    delta_1: Option<f64>,
}

/// Builds and validates the model.
pub fn build_model(params: CcaParams) -> Result<CcaModel> {
    CcaModel::new(params)
}

impl CcaModel {
    pub fn new(params: CcaParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_cavities;
        let theta: Vec<f64> = (1..=n).map(|k| mode_angle(n, k)).collect();
        let omega: Vec<f64> = (1..=n)
            .map(|k| params.cavity_freq - 2.0 * params.hopping_eta * mode_cosine(n, k))
            .collect();
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        let couplings: Vec<f64> = (1..=n)
            .map(|k| norm * site_sine(n, params.atom_site, k) * params.coupling_g)
            .collect();

        let (k0, omega_a) = match params.resonance {
            Resonance::ModeIndex(k0) => (k0, omega[k0 - 1]),
            Resonance::AtomFrequency(w) => {
                // strict comparison keeps the smaller index on ties
                let mut best = 1;
                for k in 2..=n {
                    if (omega[k - 1] - w).abs() < (omega[best - 1] - w).abs() {
                        best = k;
                    }
                }
                (best, w)
            }
        };
        let detunings = omega.iter().map(|w| w - omega_a).collect();
        let delta_1 = (k0 < n).then(|| omega[k0] - omega[k0 - 1]);

        Ok(CcaModel {
            params,
            theta,
            omega,
            couplings,
            detunings,
            k0,
            omega_a,
            delta_1,
        })
    }

    pub fn params(&self) -> &CcaParams {
        &self.params
    }

    pub fn n_modes(&self) -> usize {
        self.params.n_cavities
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    /// Frequency of the resonant mode `k0`.
    pub fn omega_0(&self) -> f64 {
        self.omega[self.k0 - 1]
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    /// Coupling to the resonant mode at an exact antinode, `sqrt(2/(N+1)) g`.
    pub fn resonant_coupling(&self) -> f64 {
        (2.0 / (self.n_modes() as f64 + 1.0)).sqrt() * self.params.coupling_g
    }

    pub fn check_mode(&self, k: usize) -> Result<()> {
        if k < 1 || k > self.n_modes() {
            Err(CcaError::validation(format!(
                "mode index {k} outside [1, {}]",
                self.n_modes()
            )))
        } else {
            Ok(())
        }
    }

    pub fn mode_frequency(&self, k: usize) -> Result<f64> {
        self.check_mode(k)?;
        Ok(self.omega[k - 1])
    }

    /// Signed coupling `g_k` of the atom to mode `k`.
    pub fn mode_coupling(&self, k: usize) -> Result<f64> {
        self.check_mode(k)?;
        Ok(self.couplings[k - 1])
    }

    /// `omega_k - omega_a`.
    pub fn detuning(&self, k: usize) -> Result<f64> {
        self.check_mode(k)?;
        Ok(self.detunings[k - 1])
    }

    /// Spacing between the resonant mode and the next one up.
    pub fn nearest_mode_spacing(&self) -> Result<f64> {
        self.delta_1.ok_or_else(|| {
            CcaError::validation(format!(
                "resonant mode k0 = {} is the top mode; no higher neighbour",
                self.k0
            ))
        })
    }

    /// Site maximising `|sin(n theta_k0)|`, largest index on ties.
    pub fn find_antinode_site(&self, k0: usize) -> Result<usize> {
        self.check_mode(k0)?;
        Ok(antinode_site(self.n_modes(), k0))
    }
}

/// `k pi / (N + 1)`.
pub fn mode_angle(n_cavities: usize, k: usize) -> f64 {
    k as f64 * PI / (n_cavities as f64 + 1.0)
}

/// `cos(theta_k)` written as `sin(pi (N + 1 - 2k) / (2 (N + 1)))`, exact zero
/// at the band centre and symmetric about it.
fn mode_cosine(n_cavities: usize, k: usize) -> f64 {
    let m = n_cavities as f64 + 1.0;
    (PI * (m - 2.0 * k as f64) / (2.0 * m)).sin()
}

/// `sin(n theta_k)` with the argument reduced exactly in integers first,
/// so that nodes come out as exact zeros and antinodes as exact ones.
fn site_sine(n_cavities: usize, site: usize, k: usize) -> f64 {
    let period = 2 * (n_cavities as u64 + 1);
    let r = (site as u64 * k as u64) % period;
    let half = n_cavities as u64 + 1;
    // sin(pi r / half), r in [0, 2 half)
    let (r, sign) = if r >= half { (r - half, -1.0) } else { (r, 1.0) };
    if r == 0 {
        return 0.0;
    }
    // fold onto [0, half/2] so the argument never exceeds pi/2
    let folded = r.min(half - r);
    if 2 * folded == half {
        return sign;
    }
    sign * (folded as f64 * PI / half as f64).sin()
}

/// Exhaustive antinode search done in integer arithmetic:
/// `|sin(pi p / (N+1))|` with `p = n k0 mod (N+1)` is maximal when
/// `|2p - (N+1)|` is minimal.
fn antinode_site(n_cavities: usize, k0: usize) -> usize {
    let m = n_cavities as u64 + 1;
    let mut best_site = 1;
    let mut best_dist = u64::MAX;
    for site in 1..=n_cavities {
        let p = (site as u64 * k0 as u64) % m;
        let dist = (2 * p).abs_diff(m);
        if dist <= best_dist {
            best_dist = dist;
            best_site = site;
        }
    }
    best_site
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_model() -> CcaModel {
        build_model(CcaParams::new(2001, 1984, 0.0015, Resonance::ModeIndex(55))).unwrap()
    }

    #[test]
    fn resonant_mode_by_index() {
        let m = paper_model();
        assert_eq!(m.omega_a(), m.mode_frequency(55).unwrap());
        assert_eq!(m.detuning(55).unwrap(), 0.0);
    }

    #[test]
    fn band_centre_small_chain() {
        let m = build_model(CcaParams::new(3, 2, 0.0, Resonance::ModeIndex(2))).unwrap();
        assert_eq!(m.mode_frequency(2).unwrap(), 0.0);
        assert_relative_eq!(m.mode_frequency(1).unwrap(), -2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(m.mode_frequency(3).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(m.couplings().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn rejects_bad_params() {
        let bad_site = CcaParams::new(2001, 0, 0.0015, Resonance::ModeIndex(55));
        assert!(matches!(build_model(bad_site), Err(CcaError::Validation(_))));
        let bad_k0 = CcaParams::new(10, 3, 0.1, Resonance::ModeIndex(11));
        assert!(build_model(bad_k0).is_err());
        let empty = CcaParams::new(0, 1, 0.1, Resonance::ModeIndex(1));
        assert!(build_model(empty).is_err());
        let eta = CcaParams::new(10, 3, 0.1, Resonance::ModeIndex(2)).with_hopping(0.0);
        assert!(build_model(eta).is_err());
    }

    #[test]
    fn frequencies_match_high_precision_values() {
        let m = paper_model();
        assert_eq!(m.mode_frequency(1001).unwrap(), 0.0);
        assert_relative_eq!(m.mode_frequency(55).unwrap(), -1.992_555_639_884_053, epsilon = 1e-14);
        assert_relative_eq!(m.mode_frequency(56).unwrap(), -1.992_282_650_743_442, epsilon = 1e-14);
        assert!(m.mode_frequency(0).is_err());
        assert!(m.mode_frequency(2002).is_err());
    }

    #[test]
    fn coupling_values() {
        let m = paper_model();
        assert_relative_eq!(
            m.mode_coupling(55).unwrap(),
            4.740_340_257_349_054e-5,
            max_relative = 1e-12
        );
        // N=3, n=2: sin(2 * 2 pi / 4) = 0, exact node
        let node = build_model(CcaParams::new(3, 2, 0.5, Resonance::ModeIndex(1))).unwrap();
        assert_eq!(node.mode_coupling(2).unwrap(), 0.0);
        let total: f64 = m.couplings().iter().map(|g| g * g).sum();
        assert_relative_eq!(total, 2.25e-6, max_relative = 1e-12);
    }

    #[test]
    fn detunings_and_spacing() {
        let m = paper_model();
        assert_relative_eq!(m.detuning(56).unwrap(), 2.729_891_406_106_377e-4, max_relative = 1e-9);
        assert_relative_eq!(
            m.nearest_mode_spacing().unwrap(),
            2.729_891_406_106_377e-4,
            max_relative = 1e-9
        );
        let short = build_model(CcaParams::new(1001, 992, 0.0015, Resonance::ModeIndex(55))).unwrap();
        assert_relative_eq!(
            short.detuning(56).unwrap(),
            1.085_658_346_654_08e-3,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            short.nearest_mode_spacing().unwrap(),
            1.085_658_346_654_08e-3,
            max_relative = 1e-9
        );
        let top = build_model(CcaParams::new(3, 1, 0.1, Resonance::ModeIndex(3))).unwrap();
        assert!(top.nearest_mode_spacing().is_err());
    }

    #[test]
    fn resonance_by_frequency_picks_nearest_mode() {
        let m = build_model(CcaParams::new(3, 2, 0.1, Resonance::AtomFrequency(0.1))).unwrap();
        assert_eq!(m.k0(), 2);
        assert_eq!(m.omega_a(), 0.1);
        // N=2: omega = -1, +1 exactly mirrored; a tie goes to the smaller index
        let m = build_model(CcaParams::new(2, 1, 0.1, Resonance::AtomFrequency(0.0))).unwrap();
        assert_eq!(m.frequencies()[0], -m.frequencies()[1]);
        assert_eq!(m.k0(), 1);
    }

    #[test]
    fn antinode_search() {
        let small = build_model(CcaParams::new(3, 1, 0.1, Resonance::ModeIndex(1))).unwrap();
        assert_eq!(small.find_antinode_site(1).unwrap(), 2);
        let m = paper_model();
        assert_eq!(m.find_antinode_site(55).unwrap(), 1911);
        assert_eq!(m.find_antinode_site(1001).unwrap(), 2001);
        assert!(m.find_antinode_site(0).is_err());
    }

    #[test]
    fn antinode_is_maximal_by_float_scan() {
        for &(n, k0) in &[(2001usize, 55usize), (1001, 55), (37, 5), (50, 17)] {
            let m = build_model(CcaParams::new(n, 1, 0.1, Resonance::ModeIndex(k0))).unwrap();
            let best = m.find_antinode_site(k0).unwrap();
            let s_best = (best as f64 * mode_angle(n, k0)).sin().abs();
            for site in 1..=n {
                let s = (site as f64 * mode_angle(n, k0)).sin().abs();
                assert!(s_best >= s - 1e-12, "n={n} k0={k0} site={site}");
            }
        }
    }

    #[test]
    fn site_sine_matches_direct_evaluation() {
        for &(n, site) in &[(2001usize, 1984usize), (21, 11), (100, 37)] {
            for k in 1..=n {
                let direct = (site as f64 * mode_angle(n, k)).sin();
                assert!(
                    (site_sine(n, site, k) - direct).abs() < 1e-11,
                    "n={n} site={site} k={k}"
                );
            }
        }
    }
}
