//! Empirical quantities extracted from trajectories: decay-rate fits,
//! turning-point detection, series comparison, truncation convergence and
//! oscillation frequencies.

use rayon::prelude::*;

use crate::dynamics::{initial_excited_state, uniform_times, ModeSelection, Propagator, TruncationWindow};
use crate::error::{CcaError, Result};
use crate::model::CcaModel;

/// Borrowed view of a sampled series.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub times: &'a [f64],
    pub values: &'a [f64],
}

impl<'a> Series<'a> {
    pub fn new(times: &'a [f64], values: &'a [f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(CcaError::validation(format!(
                "series has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        Ok(Series { times, values })
    }

    /// Contiguous sub-series with `lo <= t <= hi`; times must be sorted.
    pub fn slice(&self, lo: f64, hi: f64) -> Series<'a> {
        let a = self.times.partition_point(|&t| t < lo);
        let b = self.times.partition_point(|&t| t <= hi).max(a);
        Series {
            times: &self.times[a..b],
            values: &self.values[a..b],
        }
    }

    /// Samples with `lo <= t <= hi`.
    fn window(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        self.times
            .iter()
            .zip(self.values)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(t, v)| (*t, *v))
            .unzip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub rate: f64,
    /// Intercept of `ln(pop)` at `t = 0`.
    pub intercept: f64,
    /// RMS residual of the log-linear fit.
    pub residual_rms: f64,
    pub window: (f64, f64),
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares fit of `ln(pop) = intercept - rate * t` over `window`.
pub fn fit_decay_series(series: Series<'_>, window: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(CcaError::validation(format!("fit window ({lo}, {hi}) is empty")));
    }
    let (t, v) = series.window(lo, hi);
    if t.len() < MIN_FIT_SAMPLES {
        return Err(CcaError::validation(format!(
            "only {} samples in fit window, need {MIN_FIT_SAMPLES}",
            t.len()
        )));
    }
    if let Some(i) = v.iter().position(|&p| !(p > 0.0)) {
        return Err(CcaError::validation(format!(
            "nonpositive population {} at t = {} inside fit window",
            v[i], t[i]
        )));
    }
    let y: Vec<f64> = v.iter().map(|p| p.ln()).collect();
    let n = t.len() as f64;
    let t_mean = t.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(&y) {
        sxy += (ti - t_mean) * (yi - y_mean);
        sxx += (ti - t_mean) * (ti - t_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let ss: f64 = t
        .iter()
        .zip(&y)
        .map(|(ti, yi)| (yi - intercept - slope * ti).powi(2))
        .sum();
    Ok(FitResult {
        rate: -slope,
        intercept,
        residual_rms: (ss / n).sqrt(),
        window,
    })
}

pub fn fit_decay_rate(traj: &crate::dynamics::Trajectory, window: (f64, f64)) -> Result<FitResult> {
    fit_decay_series(Series::new(&traj.times, &traj.atom_pop)?, window)
}

pub const DEFAULT_TURNING_THRESHOLD: f64 = 0.2;
pub const DEFAULT_TURNING_HOLD: usize = 5;

/// First time at which the relative deviation from `exp(-gamma t)`
/// exceeds `threshold` for `hold` consecutive samples. `None` when it never
/// does.
pub fn detect_turning_series(series: Series<'_>, gamma: f64, threshold: f64, hold: usize) -> Result<Option<f64>> {
    if !(gamma > 0.0) {
        return Err(CcaError::validation("turning detection needs gamma > 0"));
    }
    if !(threshold > 0.0) || hold == 0 {
        return Err(CcaError::validation("threshold must be positive and hold at least 1"));
    }
    let mut run = 0;
    for (i, (&t, &p)) in series.times.iter().zip(series.values).enumerate() {
        let reference = (-gamma * t).exp();
        if (p - reference).abs() / reference > threshold {
            run += 1;
            if run == hold {
                return Ok(Some(series.times[i + 1 - hold]));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

pub fn detect_turning_time(
    traj: &crate::dynamics::Trajectory,
    gamma: f64,
    threshold: f64,
    hold: usize,
) -> Result<Option<f64>> {
    detect_turning_series(Series::new(&traj.times, &traj.atom_pop)?, gamma, threshold, hold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonMetrics {
    pub rmse: f64,
    pub max_abs_dev: f64,
    /// Time of the largest deviation.
    pub at_time: f64,
}

/// RMSE and maximum deviation of two series on the same grid.
pub fn compare_series(a: Series<'_>, b: Series<'_>) -> Result<ComparisonMetrics> {
    if a.times.len() != b.times.len() {
        return Err(CcaError::validation("series have different lengths"));
    }
    if a.times.is_empty() {
        return Err(CcaError::validation("cannot compare empty series"));
    }
    for (ta, tb) in a.times.iter().zip(b.times) {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(tb.abs()).max(1.0) {
            return Err(CcaError::validation(format!("time grids differ ({ta} vs {tb})")));
        }
    }
    let mut ss = 0.0;
    let mut max_abs_dev = 0.0;
    let mut at_time = a.times[0];
    for ((t, x), y) in a.times.iter().zip(a.values).zip(b.values) {
        let d = (x - y).abs();
        ss += d * d;
        if d > max_abs_dev {
            max_abs_dev = d;
            at_time = *t;
        }
    }
    let rmse = (ss / a.times.len() as f64).sqrt();
    Ok(ComparisonMetrics {
        // rounding can push the mean a hair above the max for constant offsets
        rmse: rmse.min(max_abs_dev),
        max_abs_dev,
        at_time,
    })
}

/// One row of a truncation convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRow {
    pub half_width: usize,
    pub n_modes: usize,
    pub max_abs_dev: f64,
    pub at_time: f64,
}

/// Atom population with only `k0 +- w` modes versus all modes, for each `w`.
pub fn truncation_study(model: &CcaModel, windows: &[usize], t_max: f64, dt_sample: f64) -> Result<Vec<TruncationRow>> {
    if windows.is_empty() {
        return Err(CcaError::validation("truncation study needs at least one window"));
    }
    let times = uniform_times(t_max, dt_sample)?;
    let state = initial_excited_state(model);
    let full = Propagator::new(model, None)?.trajectory(model, &state, &times, &ModeSelection::None)?;
    windows
        .par_iter()
        .map(|&w| {
            let window = TruncationWindow::around_resonance(w);
            let n_modes = window.resolve(model)?.count();
            let run = Propagator::new(model, Some(&window))?.trajectory(model, &state, &times, &ModeSelection::None)?;
            let m = compare_series(
                Series::new(&times, &full.atom_pop)?,
                Series::new(&times, &run.atom_pop)?,
            )?;
            Ok(TruncationRow {
                half_width: w,
                n_modes,
                max_abs_dev: m.max_abs_dev,
                at_time: m.at_time,
            })
        })
        .collect()
}

/// Linear least squares for `y ~ sum_j c_j basis_j`, returning the residual
/// sum of squares and coefficients. Solved through the normal equations,
/// which is adequate for the handful of columns used here.
fn least_squares<const K: usize>(rows: &[([f64; K], f64)]) -> Option<(f64, [f64; K])> {
    let mut ata = nalgebra::SMatrix::<f64, K, K>::zeros();
    let mut aty = nalgebra::SVector::<f64, K>::zeros();
    for (x, y) in rows {
        let x = nalgebra::SVector::<f64, K>::from(*x);
        ata += x * x.transpose();
        aty += x * *y;
    }
    let coef = ata.cholesky()?.solve(&aty);
    let rss = rows
        .iter()
        .map(|(x, y)| (y - nalgebra::SVector::<f64, K>::from(*x).dot(&coef)).powi(2))
        .sum();
    Some((rss, coef.into()))
}

struct OscillationFit<'a> {
    tau: &'a [f64],
    y: &'a [f64],
}

impl OscillationFit<'_> {
    fn envelope_rss(&self, rate: f64) -> f64 {
        let rows: Vec<([f64; 1], f64)> = self
            .tau
            .iter()
            .zip(self.y)
            .map(|(t, y)| ([(-rate * t).exp()], *y))
            .collect();
        least_squares(&rows).map_or(f64::INFINITY, |r| r.0)
    }

    fn damped_rss(&self, rate: f64, omega: f64) -> (f64, [f64; 3]) {
        let rows: Vec<([f64; 3], f64)> = self
            .tau
            .iter()
            .zip(self.y)
            .map(|(t, y)| {
                let e = (-rate * t).exp();
                ([e, e * (omega * t).cos(), e * (omega * t).sin()], *y)
            })
            .collect();
        least_squares(&rows).unwrap_or((f64::INFINITY, [0.0; 3]))
    }

    /// Best envelope rate for a given frequency.
    fn profile(&self, omega: f64, rates: (f64, f64)) -> (f64, f64) {
        let rate = golden_min(rates.0, rates.1, 40, |r| self.damped_rss(r, omega).0);
        (self.damped_rss(rate, omega).0, rate)
    }
}

fn golden_min(mut a: f64, mut b: f64, iterations: usize, f: impl Fn(f64) -> f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iterations {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Relative improvement an oscillating term must bring over a pure
/// exponential before a spectral peak is accepted.
const PEAK_FLOOR: f64 = 1e-6;
const FREQUENCY_GRID: usize = 200;

/// Dominant angular frequency inside `window`.
///
/// The series is modelled as an exponential envelope times an offset
/// sinusoid, `e^{-r t} (a + b cos(w t) + c sin(w t))`. For each trial
/// frequency the envelope rate and the linear coefficients are fitted; the
/// returned frequency is the peak of the resulting least-squares spectrum.
/// Trial frequencies run from a quarter period per window up to Nyquist, so
/// the estimate stays usable when the window holds less than one period.
pub fn extract_oscillation_frequency(series: Series<'_>, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let (t, y) = series.window(lo, hi);
    if t.len() < MIN_FIT_SAMPLES {
        return Err(CcaError::validation("too few samples in oscillation window"));
    }
    let tau: Vec<f64> = t.iter().map(|ti| ti - t[0]).collect();
    let span = tau[tau.len() - 1];
    let dt_min = tau.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let fit = OscillationFit { tau: &tau, y: &y };

    // envelope-only detrending fixes the rate search range
    let rate_scale = 20.0 / span;
    let rates = (-rate_scale, rate_scale);
    let env_rate = golden_min(rates.0, rates.1, 80, |r| fit.envelope_rss(r));
    let env_rss = fit.envelope_rss(env_rate);
    let total: f64 = y.iter().map(|v| v * v).sum();
    if !(env_rss > PEAK_FLOOR * PEAK_FLOOR * total) {
        return Err(CcaError::numerical(
            "no spectral peak above the noise floor (series is a pure exponential)",
        ));
    }

    let w_lo = std::f64::consts::PI / (2.0 * span);
    let w_hi = std::f64::consts::PI / dt_min;
    let grid: Vec<f64> = (0..FREQUENCY_GRID)
        .map(|i| w_lo * (w_hi / w_lo).powf(i as f64 / (FREQUENCY_GRID - 1) as f64))
        .collect();
    let rss: Vec<f64> = grid.par_iter().map(|&w| fit.profile(w, rates).0).collect();
    let best = rss
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| CcaError::numerical("empty frequency grid"))?;
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let omega = golden_min(a, b, 60, |w| fit.profile(w, rates).0);
    let (best_rss, _) = fit.profile(omega, rates);

    if !(env_rss - best_rss > PEAK_FLOOR * env_rss) {
        return Err(CcaError::numerical("no spectral peak above the noise floor"));
    }
    Ok(omega)
}
