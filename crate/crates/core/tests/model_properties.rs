use approx::assert_relative_eq;
use cca_core::{build_model, CcaParams, Resonance};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = CcaParams> {
    (1usize..=5000)
        .prop_flat_map(|n| (Just(n), 1..=n, 1..=n, 1e-4f64..1.0, 0.1f64..3.0, -2.0f64..2.0))
        .prop_map(|(n, site, k0, g, eta, wc)| {
            CcaParams::new(n, site, g, Resonance::ModeIndex(k0))
                .with_hopping(eta)
                .with_cavity_freq(wc)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_increasing_and_inside_band(p in params()) {
        let m = build_model(p.clone()).unwrap();
        let w = m.frequencies();
        for pair in w.windows(2) {
            prop_assert!(pair[1] > pair[0]);
        }
        for &wk in w {
            prop_assert!((wk - p.cavity_freq).abs() < 2.0 * p.hopping_eta);
        }
    }

    #[test]
    fn couplings_are_complete(p in params()) {
        let m = build_model(p.clone()).unwrap();
        let g2 = p.coupling_g * p.coupling_g;
        let sum: f64 = m.couplings().iter().map(|g| g * g).sum();
        prop_assert!((sum - g2).abs() < 1e-12 * g2, "sum {sum} vs {g2}");
    }

    #[test]
    fn mirror_site_has_equal_magnitude_couplings(p in params()) {
        let mirror = CcaParams { atom_site: p.n_cavities + 1 - p.atom_site, ..p.clone() };
        let a = build_model(p.clone()).unwrap();
        let b = build_model(mirror).unwrap();
        for (k, (x, y)) in a.couplings().iter().zip(b.couplings()).enumerate() {
            prop_assert!((x.abs() - y.abs()).abs() <= 1e-15 * p.coupling_g);
            // sin((N+1-n) theta_k) = (-1)^(k+1) sin(n theta_k)
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((x - sign * y).abs() <= 1e-15 * p.coupling_g);
        }
    }

    #[test]
    fn resonant_mode_has_zero_and_minimal_detuning(p in params()) {
        let m = build_model(p).unwrap();
        prop_assert_eq!(m.detuning(m.k0()).unwrap(), 0.0);
        let min = m.detunings().iter().fold(f64::INFINITY, |a, d| a.min(d.abs()));
        prop_assert_eq!(min, 0.0);
    }

    #[test]
    fn frequency_resonance_picks_nearest_mode(p in params(), offset in -4.5f64..4.5) {
        let omega_a = p.cavity_freq + offset * p.hopping_eta;
        let m = build_model(CcaParams { resonance: Resonance::AtomFrequency(omega_a), ..p }).unwrap();
        let d = m.detunings();
        let best = d[m.k0() - 1].abs();
        prop_assert!(d.iter().all(|x| x.abs() >= best));
        // smaller index wins ties
        prop_assert!(d[..m.k0() - 1].iter().all(|x| x.abs() > best));
    }

    #[test]
    fn antinode_is_maximal_by_exhaustive_scan(n in 1usize..600, k_frac in 0.0f64..1.0) {
        let k0 = 1 + ((n - 1) as f64 * k_frac) as usize;
        let m = build_model(CcaParams::new(n, 1, 0.0, Resonance::ModeIndex(k0))).unwrap();
        let site = m.find_antinode_site(k0).unwrap();
        let theta = std::f64::consts::PI * k0 as f64 / (n as f64 + 1.0);
        let value = |s: usize| (s as f64 * theta).sin().abs();
        let best = (1..=n).map(value).fold(0.0, f64::max);
        prop_assert!(value(site) >= best - 1e-12);
        // nothing to the right is equally good
        prop_assert!((site + 1..=n).all(|s| value(s) < best - 1e-12));
    }
}

#[test]
fn reference_values_n2001() {
    let m = build_model(CcaParams::new(2001, 1984, 0.0015, Resonance::ModeIndex(55))).unwrap();
    assert_relative_eq!(m.mode_frequency(55).unwrap(), -1.992555639884053, max_relative = 1e-14);
    assert_relative_eq!(m.mode_frequency(56).unwrap(), -1.992282650743442, max_relative = 1e-14);
    assert_eq!(m.omega_a(), m.mode_frequency(55).unwrap());
    assert_relative_eq!(m.mode_coupling(55).unwrap(), 4.740340257349054e-5, max_relative = 1e-12);
    assert_relative_eq!(
        m.nearest_mode_spacing().unwrap(),
        2.729891406106377e-4,
        max_relative = 1e-10
    );
    assert_relative_eq!(m.detuning(56).unwrap(), 2.729891406106377e-4, max_relative = 1e-10);
    assert_eq!(m.mode_frequency(1001).unwrap(), 0.0);
    let sum: f64 = m.couplings().iter().map(|g| g * g).sum();
    assert_relative_eq!(sum, 2.25e-6, max_relative = 1e-12);
    assert_eq!(m.find_antinode_site(55).unwrap(), 1911);
    assert_eq!(m.find_antinode_site(1001).unwrap(), 2001);
}

#[test]
fn reference_values_smaller_arrays() {
    let m = build_model(CcaParams::new(1001, 992, 0.0015, Resonance::ModeIndex(55))).unwrap();
    assert_relative_eq!(
        m.nearest_mode_spacing().unwrap(),
        1.08565834665408e-3,
        max_relative = 1e-10
    );
    let m = build_model(CcaParams::new(1501, 1488, 0.0015, Resonance::ModeIndex(55))).unwrap();
    assert_relative_eq!(m.nearest_mode_spacing().unwrap(), 4.845146909e-4, max_relative = 1e-8);
}

#[test]
fn small_cases_and_errors() {
    let m = build_model(CcaParams::new(3, 2, 0.0, Resonance::ModeIndex(2))).unwrap();
    assert_eq!(m.mode_frequency(2).unwrap(), 0.0);
    assert!(m.couplings().iter().all(|&g| g == 0.0));
    assert_eq!(m.find_antinode_site(1).unwrap(), 2);
    assert!(m.nearest_mode_spacing().is_ok());
    let top = build_model(CcaParams::new(3, 2, 0.1, Resonance::ModeIndex(3))).unwrap();
    assert!(top.nearest_mode_spacing().is_err());
    assert!(m.mode_frequency(0).is_err() && m.mode_coupling(4).is_err());
    assert!(build_model(CcaParams::new(2001, 0, 0.0015, Resonance::ModeIndex(55))).is_err());
    assert!(build_model(CcaParams::new(0, 1, 0.0015, Resonance::ModeIndex(1))).is_err());
    assert!(build_model(CcaParams::new(10, 1, 0.1, Resonance::ModeIndex(11))).is_err());
    assert!(build_model(CcaParams::new(10, 1, 0.1, Resonance::ModeIndex(1)).with_hopping(0.0)).is_err());
}
