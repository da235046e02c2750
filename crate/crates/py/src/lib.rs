//! Python module `cca_decay`.

use std::collections::BTreeMap;

use cca_core::analysis::{self, Series};
use cca_core::config::RunConfig;
use cca_core::dynamics::{self, ModeSelection, TruncationWindow};
use cca_core::{theory, CcaError, CcaModel, CcaParams, Resonance};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: CcaError) -> PyErr {
    match err {
        CcaError::Validation(m) => PyValueError::new_err(m),
        CcaError::Numerical(m) => PyArithmeticError::new_err(m),
        CcaError::Io(m) => PyOSError::new_err(m),
    }
}

/// Finite coupled-cavity array with one two-level atom.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: CcaModel,
}

#[pymethods]
impl PyModel {
    /// Exactly one of `resonant_mode` and `atom_freq` must be given.
    #[new]
    #[pyo3(signature = (n_cavities, atom_site, coupling_g, resonant_mode=None, atom_freq=None, hopping_eta=1.0, cavity_freq=0.0))]
    fn new(
        n_cavities: usize,
        atom_site: usize,
        coupling_g: f64,
        resonant_mode: Option<usize>,
        atom_freq: Option<f64>,
        hopping_eta: f64,
        cavity_freq: f64,
    ) -> PyResult<Self> {
        let resonance = match (resonant_mode, atom_freq) {
            (Some(k), None) => Resonance::ModeIndex(k),
            (None, Some(w)) => Resonance::AtomFrequency(w),
            _ => return Err(PyValueError::new_err("give exactly one of resonant_mode and atom_freq")),
        };
        let params = CcaParams::new(n_cavities, atom_site, coupling_g, resonance)
            .with_hopping(hopping_eta)
            .with_cavity_freq(cavity_freq);
        Ok(PyModel {
            inner: cca_core::build_model(params).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_cavities(&self) -> usize {
        self.inner.n_modes()
    }

    #[getter]
    fn atom_site(&self) -> usize {
        self.inner.params().atom_site
    }

    #[getter]
    fn k0(&self) -> usize {
        self.inner.k0()
    }

    #[getter]
    fn omega_a(&self) -> f64 {
        self.inner.omega_a()
    }

    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies().to_vec()
    }

    #[getter]
    fn couplings(&self) -> Vec<f64> {
        self.inner.couplings().to_vec()
    }

    #[getter]
    fn detunings(&self) -> Vec<f64> {
        self.inner.detunings().to_vec()
    }

    #[getter]
    fn resonant_coupling(&self) -> f64 {
        self.inner.resonant_coupling()
    }

    fn decay_rate(&self) -> PyResult<f64> {
        theory::decay_rate_ww(&self.inner).map_err(to_py)
    }

    fn turning_time(&self) -> PyResult<f64> {
        theory::turning_time(&self.inner).map_err(to_py)
    }

    fn nearest_mode_spacing(&self) -> PyResult<f64> {
        self.inner.nearest_mode_spacing().map_err(to_py)
    }

    fn antinode_site(&self, k: usize) -> PyResult<usize> {
        self.inner.find_antinode_site(k).map_err(to_py)
    }

    /// `M_k(t)` predicted for mode `k` at each time.
    fn mode_population_model(&self, k: usize, times: Vec<f64>) -> PyResult<Vec<f64>> {
        let gamma = self.decay_rate()?;
        times
            .iter()
            .map(|&t| theory::mode_population_model(&self.inner, gamma, k, t))
            .collect::<Result<_, _>>()
            .map_err(to_py)
    }

    /// `(time, validity_ratio)` of the `l`-th minimum of mode `k`.
    fn mode_minimum_time(&self, k: usize, l: u32) -> PyResult<(f64, f64)> {
        let m = theory::mode_minimum_times(&self.inner, self.decay_rate()?, k, l).map_err(to_py)?;
        Ok((m.time, m.validity_ratio))
    }

    fn __repr__(&self) -> String {
        let p = self.inner.params();
        format!(
            "Model(n_cavities={}, atom_site={}, coupling_g={}, k0={})",
            p.n_cavities,
            p.atom_site,
            p.coupling_g,
            self.inner.k0()
        )
    }
}

/// Evolution from the excited atom. Returns `(times, atom_pop, modes)`
/// with `modes` mapping each tracked mode to its populations.
type Populations = (Vec<f64>, Vec<f64>, BTreeMap<usize, Vec<f64>>);

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (model, t_max, dt_sample, tracked_modes=None, truncation_half_width=None, method="eigen", ode_dt=0.01))]
fn simulate(
    py: Python<'_>,
    model: &PyModel,
    t_max: f64,
    dt_sample: f64,
    tracked_modes: Option<Vec<usize>>,
    truncation_half_width: Option<usize>,
    method: &str,
    ode_dt: f64,
) -> PyResult<Populations> {
    let m = &model.inner;
    let times = dynamics::uniform_times(t_max, dt_sample).map_err(to_py)?;
    let window = truncation_half_width.map(TruncationWindow::around_resonance);
    let tracked = tracked_modes.map_or(ModeSelection::None, ModeSelection::List);
    let state = dynamics::initial_excited_state(m);
    let traj = match method {
        "eigen" => py.detach(|| dynamics::propagate_eigen(m, &state, &times, window.as_ref(), &tracked)),
        "ode" => py.detach(|| dynamics::propagate_ode_sampled(m, &state, &times, ode_dt, window.as_ref(), &tracked)),
        _ => return Err(PyValueError::new_err(format!("unknown method {method:?} (eigen|ode)"))),
    }
    .map_err(to_py)?;
    Ok((traj.times, traj.atom_pop, traj.mode_pops))
}

/// `(rate, intercept, residual_rms)` of a log-linear fit over `window`.
#[pyfunction]
fn fit_decay_rate(times: Vec<f64>, values: Vec<f64>, window: (f64, f64)) -> PyResult<(f64, f64, f64)> {
    let s = Series::new(&times, &values).map_err(to_py)?;
    let f = analysis::fit_decay_series(s, window).map_err(to_py)?;
    Ok((f.rate, f.intercept, f.residual_rms))
}

#[pyfunction]
#[pyo3(signature = (times, values, gamma, threshold=analysis::DEFAULT_TURNING_THRESHOLD, hold=analysis::DEFAULT_TURNING_HOLD))]
fn detect_turning_time(
    times: Vec<f64>,
    values: Vec<f64>,
    gamma: f64,
    threshold: f64,
    hold: usize,
) -> PyResult<Option<f64>> {
    let s = Series::new(&times, &values).map_err(to_py)?;
    analysis::detect_turning_series(s, gamma, threshold, hold).map_err(to_py)
}

#[pyfunction]
fn extract_oscillation_frequency(times: Vec<f64>, values: Vec<f64>, window: (f64, f64)) -> PyResult<f64> {
    let s = Series::new(&times, &values).map_err(to_py)?;
    analysis::extract_oscillation_frequency(s, window).map_err(to_py)
}

/// Secular dressed-atom prediction from the block `(rho11, rho22, rho12)`
/// at `t_ref`, with `rho12` a complex number.
#[pyfunction]
fn dressed_decay(
    rho11: f64,
    rho22: f64,
    rho12: Complex64,
    t_ref: f64,
    gamma: f64,
    g_r: f64,
    times: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let block = theory::DressedBlock {
        rho11,
        rho22,
        rho12,
        t_ref,
    };
    theory::dressed_decay_closed_form(&block, gamma, g_r, &times).map_err(to_py)
}

/// Full configured run (config keys as in the CLI). Writes output files
/// only when `write` is true; returns the summary as a dict of strings.
#[pyfunction]
#[pyo3(signature = (overrides, write=false))]
fn run(py: Python<'_>, overrides: BTreeMap<String, String>, write: bool) -> PyResult<BTreeMap<String, String>> {
    let mut cfg = RunConfig::default();
    for (k, v) in &overrides {
        cfg.set(k, v).map_err(to_py)?;
    }
    let report = py
        .detach(|| {
            if write {
                cca_core::run_scenario(&cfg)
            } else {
                cca_core::analyze_run(&cfg)
            }
        })
        .map_err(to_py)?;
    Ok(report
        .summary_text()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

#[pymodule]
fn cca_decay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(detect_turning_time, m)?)?;
    m.add_function(wrap_pyfunction!(extract_oscillation_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(dressed_decay, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
