//! End-to-end runs: simulate, compare with theory, write CSV and summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    compare_series, detect_turning_time, extract_oscillation_frequency, fit_decay_rate, ComparisonMetrics, FitResult,
    Series,
};
use crate::config::{Method, RunConfig};
use crate::dynamics::{
    initial_excited_state, ode_evolve, propagate_ode_sampled, uniform_times, ModeSelection, PopulationTable,
    Propagator, Trajectory, TruncationWindow,
};
use crate::error::{CcaError, Result};
use crate::model::CcaModel;
use crate::theory::{
    dressed_basis_project, dressed_decay_closed_form, exponential_prediction, mode_population_model, DecayPrediction,
    DressedBlock,
};

/// Default run length in units of the turning time.
pub const AUTO_T_MAX_TURNS: f64 = 3.0;

/// Twelve significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.11e}")
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), format_value)
}

/// Writes columns as CSV with a header row and a trailing newline.
pub fn write_csv(path: &Path, headers: &[String], columns: &[Vec<f64>]) -> Result<()> {
    let rows = columns.first().map_or(0, Vec::len);
    if headers.len() != columns.len() || columns.iter().any(|c| c.len() != rows) {
        return Err(CcaError::validation("csv columns are ragged"));
    }
    let mut out = String::with_capacity(rows * columns.len() * 20);
    out.push_str(&headers.join(","));
    out.push('\n');
    for r in 0..rows {
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_value(c[r]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Dressed-stage comparison after the turning point.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedReport {
    pub block: DressedBlock,
    pub renormalized: bool,
    /// `[t_turn, min(t_turn + 2 / gamma, t_max)]`.
    pub window: (f64, f64),
    pub metrics: ComparisonMetrics,
    /// Oscillation frequency of the simulated atom population in `window`.
    pub frequency: Option<f64>,
    /// Time of the lowest simulated atom population in `window`.
    pub t_empty: f64,
    /// RMSE restricted to `[t_turn, t_empty]`.
    pub rmse_to_empty: f64,
}

/// Everything computed for one run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: RunConfig,
    pub model: CcaModel,
    pub prediction: DecayPrediction,
    pub t_max: f64,
    pub trajectory: Trajectory,
    pub fit: FitResult,
    pub t_turn: Option<f64>,
    /// Atom population against `exp(-gamma t)` on `[0, min(t_c, t_max)]`.
    pub exponential: ComparisonMetrics,
    /// Worst per-mode RMSE of the mode-population model on
    /// `[0, min(t_c, t_max)]`, relative to the mode's peak population.
    pub mode_model_rel_rmse: Option<f64>,
    pub dressed: Option<DressedReport>,
    /// `|1 - norm|` of the final state.
    pub norm_error: f64,
    pub theory: PopulationTable,
}

fn resolve_t_max(cfg: &RunConfig, prediction: &DecayPrediction) -> f64 {
    cfg.t_max.unwrap_or(AUTO_T_MAX_TURNS * prediction.t_c)
}

/// Simulates and analyses one configuration without writing files.
pub fn analyze_run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let model = cfg.model()?;
    let prediction = DecayPrediction::new(&model)?;
    let t_max = resolve_t_max(cfg, &prediction);
    let times = uniform_times(t_max, cfg.dt_sample)?;
    let window = cfg.truncation_half_width.map(TruncationWindow::around_resonance);
    let state0 = initial_excited_state(&model);

    let (trajectory, state_at) = match cfg.method {
        Method::Eigen => {
            let prop = Propagator::new(&model, window.as_ref())?;
            let mut traj = prop.trajectory(&model, &state0, &times, &cfg.tracked_modes)?;
            traj.truncation = window;
            let evolve = move |t: f64| prop.evolve(&state0, t);
            (traj, Box::new(evolve) as Box<dyn Fn(f64) -> Result<_>>)
        }
        Method::Ode => {
            let traj = propagate_ode_sampled(&model, &state0, &times, cfg.ode_dt, window.as_ref(), &cfg.tracked_modes)?;
            let (m, dt) = (model.clone(), cfg.ode_dt);
            let evolve = move |t: f64| ode_evolve(&m, &state0, t, dt, window.as_ref());
            (traj, Box::new(evolve) as Box<dyn Fn(f64) -> Result<_>>)
        }
    };

    let early_end = prediction.t_c.min(t_max);
    let fit = fit_decay_rate(&trajectory, (0.0, 0.5 * early_end))?;
    if !fit.rate.is_finite() {
        return Err(CcaError::numerical("decay-rate fit is not finite"));
    }
    let t_turn = detect_turning_time(&trajectory, prediction.gamma, cfg.turning_threshold, cfg.turning_hold)?;

    let exp_pred = exponential_prediction(prediction.gamma, &times);
    let atom = Series::new(&times, &trajectory.atom_pop)?;
    let exponential = compare_series(
        atom.slice(0.0, early_end),
        Series::new(&times, &exp_pred)?.slice(0.0, early_end),
    )?;

    let mut headers = vec!["time".to_string(), "exp_pred".to_string()];
    let mut columns = vec![times.clone(), exp_pred];
    let mut mode_model_rel_rmse: Option<f64> = None;
    for (&k, pops) in &trajectory.mode_pops {
        let modelled = times
            .iter()
            .map(|&t| mode_population_model(&model, prediction.gamma, k, t))
            .collect::<Result<Vec<f64>>>()?;
        let exact = Series::new(&times, pops)?.slice(0.0, early_end);
        let peak = exact.values.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            let m = compare_series(exact, Series::new(&times, &modelled)?.slice(0.0, early_end))?;
            let rel = m.rmse / peak;
            mode_model_rel_rmse = Some(mode_model_rel_rmse.map_or(rel, |r: f64| r.max(rel)));
        }
        headers.push(format!("mode_model_{k}"));
        columns.push(modelled);
    }

    let mut dressed_col = vec![f64::NAN; times.len()];
    let dressed = match t_turn {
        Some(t0) => {
            let mut block = dressed_basis_project(&state_at(t0)?, &model, t0);
            if cfg.renormalize_dressed_block {
                block = block.renormalized()?;
            }
            let start = times.partition_point(|&t| t < t0);
            let curve = dressed_decay_closed_form(&block, prediction.gamma, prediction.g_r, &times[start..])?;
            dressed_col[start..].copy_from_slice(&curve);

            let end = (t0 + 2.0 / prediction.gamma).min(t_max);
            let exact = atom.slice(t0, end);
            let theory = Series::new(&times, &dressed_col)?.slice(t0, end);
            let metrics = compare_series(exact, theory)?;
            let frequency = extract_oscillation_frequency(exact, (t0, end)).ok();
            let i_min = exact
                .values
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if *v < exact.values[best] { i } else { best });
            let t_empty = exact.times[i_min];
            let rmse_to_empty = compare_series(exact.slice(t0, t_empty), theory.slice(t0, t_empty))?.rmse;
            Some(DressedReport {
                block,
                renormalized: cfg.renormalize_dressed_block,
                window: (t0, end),
                metrics,
                frequency,
                t_empty,
                rmse_to_empty,
            })
        }
        None => None,
    };
    headers.push("dressed_pred".to_string());
    columns.push(dressed_col);

    let final_state = state_at(t_max)?;
    Ok(RunReport {
        config: cfg.clone(),
        prediction,
        t_max,
        fit,
        t_turn,
        exponential,
        mode_model_rel_rmse,
        dressed,
        norm_error: (1.0 - final_state.norm_sqr()).abs(),
        theory: PopulationTable { headers, columns },
        model,
        trajectory,
    })
}

impl RunReport {
    /// Ordered `key=value` lines.
    pub fn summary_text(&self) -> String {
        let p = self.model.params();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("n_cavities", p.n_cavities.to_string());
        kv("atom_site", p.atom_site.to_string());
        kv("resonant_mode", self.model.k0().to_string());
        kv("coupling_g", format_value(p.coupling_g));
        kv("omega_a", format_value(self.model.omega_a()));
        kv(
            "truncation_half_width",
            self.config
                .truncation_half_width
                .map_or_else(|| "none".to_string(), |w| w.to_string()),
        );
        kv("t_max", format_value(self.t_max));
        kv(
            "time_window",
            match self.config.t_max {
                None => format!("[0, {AUTO_T_MAX_TURNS} t_c]"),
                Some(_) => "[0, t_max]".to_string(),
            },
        );
        kv("gamma_theory", format_value(self.prediction.gamma));
        kv("gamma_fit", format_value(self.fit.rate));
        kv(
            "gamma_rel_error",
            format_value(self.fit.rate / self.prediction.gamma - 1.0),
        );
        kv("fit_window_end", format_value(self.fit.window.1));
        kv("fit_residual_rms", format_value(self.fit.residual_rms));
        kv("t_c", format_value(self.prediction.t_c));
        kv("t_turn", format_opt(self.t_turn));
        kv("exp_rmse", format_value(self.exponential.rmse));
        kv("exp_max_abs_dev", format_value(self.exponential.max_abs_dev));
        kv("mode_model_rel_rmse", format_opt(self.mode_model_rel_rmse));
        kv("g_r", format_value(self.prediction.g_r));
        match &self.dressed {
            Some(d) => {
                kv("dressed_trace", format_value(d.block.trace()));
                kv("dressed_renormalized", d.renormalized.to_string());
                kv("dressed_window_start", format_value(d.window.0));
                kv("dressed_window_end", format_value(d.window.1));
                kv("dressed_rmse", format_value(d.metrics.rmse));
                kv("dressed_max_abs_dev", format_value(d.metrics.max_abs_dev));
                kv("dressed_frequency", format_opt(d.frequency));
                kv(
                    "dressed_frequency_ratio",
                    format_opt(d.frequency.map(|w| w / (2.0 * self.prediction.g_r))),
                );
                kv("t_empty", format_value(d.t_empty));
                kv("dressed_rmse_to_empty", format_value(d.rmse_to_empty));
            }
            None => kv("dressed_rmse", "none".to_string()),
        }
        kv("norm_error", format_value(self.norm_error));
        s
    }

    /// `trajectory.csv`, `theory.csv`, `summary.txt` and `config.txt` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let modes: Vec<usize> = self.trajectory.mode_pops.keys().copied().collect();
        let table = crate::dynamics::observables(&self.trajectory, &modes)?;
        let files = [
            dir.join("trajectory.csv"),
            dir.join("theory.csv"),
            dir.join("summary.txt"),
            dir.join("config.txt"),
        ];
        write_csv(&files[0], &table.headers, &table.columns)?;
        write_csv(&files[1], &self.theory.headers, &self.theory.columns)?;
        fs::write(&files[2], self.summary_text())?;
        fs::write(&files[3], self.config.to_text())?;
        Ok(files.to_vec())
    }
}

/// Runs `cfg` and writes its outputs to `cfg.outputs`.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunReport> {
    let report = analyze_run(cfg)?;
    report.write(&cfg.outputs)?;
    Ok(report)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(CcaError::validation("workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CcaError::numerical(format!("cannot start worker pool: {e}")))
}

/// Maps the short axis names `N`, `n`, `g`, `k0` to config keys; anything
/// else must already be a config key.
pub fn sweep_key(axis: &str) -> Result<&'static str> {
    let key = match axis {
        "N" => "n_cavities",
        "n" => "atom_site",
        "g" => "coupling_g",
        "k0" => "resonant_mode",
        other => crate::config::KEYS
            .iter()
            .find(|k| **k == other)
            .copied()
            .ok_or_else(|| CcaError::validation(format!("unknown sweep axis {other:?}")))?,
    };
    Ok(key)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub gamma_fit: f64,
    pub gamma_theory: f64,
    pub t_c: f64,
    pub t_turn: Option<f64>,
    pub dressed_rmse: Option<f64>,
}

/// Runs `base` once per value of `axis`, in parallel on `workers` threads.
/// Each point writes to `<out>/<key>_<value>/`; the table goes to
/// `<out>/sweep.csv`. Rows keep the order of `values`.
pub fn run_sweep(base: &RunConfig, axis: &str, values: &[String], workers: usize) -> Result<Vec<SweepRow>> {
    let key = sweep_key(axis)?;
    if values.is_empty() {
        return Err(CcaError::validation("sweep needs at least one value"));
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            cfg.set(key, v)?;
            cfg.outputs = base.outputs.join(format!("{key}_{v}"));
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = pool(workers)?.install(|| {
        configs
            .par_iter()
            .zip(values)
            .map(|(cfg, v)| {
                let r = run_scenario(cfg)?;
                Ok(SweepRow {
                    value: v.clone(),
                    gamma_fit: r.fit.rate,
                    gamma_theory: r.prediction.gamma,
                    t_c: r.prediction.t_c,
                    t_turn: r.t_turn,
                    dressed_rmse: r.dressed.as_ref().map(|d| d.metrics.rmse),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut out = format!("{key},gamma_fit,gamma_theory,t_c,t_turn,dressed_rmse\n");
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.value,
            format_value(r.gamma_fit),
            format_value(r.gamma_theory),
            format_value(r.t_c),
            format_value(r.t_turn.unwrap_or(f64::NAN)),
            format_value(r.dressed_rmse.unwrap_or(f64::NAN)),
        );
    }
    fs::create_dir_all(&base.outputs)?;
    fs::write(base.outputs.join("sweep.csv"), out)?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Atom decay for three array sizes on a common time axis.
    Fig1,
    /// Mode populations 50..60 for N = 2001.
    Fig2,
    /// Dressed-state stage over `[0, 3 t_c]` for three sizes.
    Fig3,
    /// Full spectrum versus truncations to `k0 +- 5` and `k0 +- 2`.
    Fig4,
}

impl std::str::FromStr for Figure {
    type Err = CcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Figure::Fig1),
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            _ => Err(CcaError::validation(format!(
                "unknown figure {s:?} (fig1|fig2|fig3|fig4)"
            ))),
        }
    }
}

/// `(N, atom_site)` pairs with the atom near an antinode of mode 55.
pub const SIZE_PRESETS: [(usize, usize); 3] = [(1001, 992), (1501, 1488), (2001, 1984)];

/// Shared t_max for fig1: three turning times of the largest array.
pub const FIG1_T_MAX: f64 = 7.0e4;

impl Figure {
    /// Labelled configurations, built from `base` (overrides already applied
    /// by the caller are kept unless the preset fixes that key).
    pub fn configs(self, base: &RunConfig) -> Vec<(String, RunConfig)> {
        let sized = |n: usize, site: usize| {
            let mut c = base.clone();
            c.n_cavities = n;
            c.atom_site = crate::config::SiteSpec::Index(site);
            c.truncation_half_width = None;
            c
        };
        match self {
            Figure::Fig1 | Figure::Fig3 => SIZE_PRESETS
                .iter()
                .map(|&(n, site)| {
                    let mut c = sized(n, site);
                    c.t_max = if self == Figure::Fig1 { Some(FIG1_T_MAX) } else { None };
                    (format!("N{n}"), c)
                })
                .collect(),
            Figure::Fig2 => {
                let mut c = sized(2001, 1984);
                c.tracked_modes = ModeSelection::range(50..=60);
                vec![("N2001".to_string(), c)]
            }
            Figure::Fig4 => [("full", None), ("w5", Some(5)), ("w2", Some(2))]
                .iter()
                .map(|&(label, w)| {
                    let mut c = sized(2001, 1984);
                    c.t_max = None;
                    c.truncation_half_width = w;
                    (label.to_string(), c)
                })
                .collect(),
        }
    }
}

/// Runs every configuration of `fig` under `<base.outputs>/<label>/` and
/// writes a combined `<fig>.csv` of atom populations.
pub fn run_figure(fig: Figure, base: &RunConfig, workers: usize) -> Result<Vec<(String, RunReport)>> {
    let configs: Vec<(String, RunConfig)> = fig
        .configs(base)
        .into_iter()
        .map(|(label, mut c)| {
            c.outputs = base.outputs.join(&label);
            (label, c)
        })
        .collect();
    let reports = pool(workers)?.install(|| {
        configs
            .par_iter()
            .map(|(label, c)| Ok((label.clone(), run_scenario(c)?)))
            .collect::<Result<Vec<_>>>()
    })?;

    let name = match fig {
        Figure::Fig1 => "fig1",
        Figure::Fig2 => "fig2",
        Figure::Fig3 => "fig3",
        Figure::Fig4 => "fig4",
    };
    // fig3 runs have different time axes, so each keeps its own files only
    if fig != Figure::Fig3 {
        let times = reports[0].1.trajectory.times.clone();
        let mut headers = vec!["time".to_string()];
        let mut columns = vec![times];
        for (label, r) in &reports {
            headers.push(format!("atom_pop_{label}"));
            columns.push(r.trajectory.atom_pop.clone());
        }
        write_csv(&base.outputs.join(format!("{name}.csv")), &headers, &columns)?;
    }
    if fig == Figure::Fig4 {
        let full = &reports[0].1.trajectory;
        let mut table = String::from("half_width,n_modes,max_abs_dev,at_time\n");
        for (_, r) in &reports[1..] {
            let w = r.config.truncation_half_width.unwrap_or(0);
            let n_modes = TruncationWindow::around_resonance(w).resolve(&r.model)?.count();
            let m = compare_series(
                Series::new(&full.times, &full.atom_pop)?,
                Series::new(&r.trajectory.times, &r.trajectory.atom_pop)?,
            )?;
            let _ = writeln!(
                table,
                "{w},{n_modes},{},{}",
                format_value(m.max_abs_dev),
                format_value(m.at_time)
            );
        }
        fs::write(base.outputs.join("truncation.csv"), table)?;
    }
    Ok(reports)
}

/// Truncation convergence table for `cfg`, written to
/// `<cfg.outputs>/truncation.csv`.
pub fn run_truncation_study(
    cfg: &RunConfig,
    windows: &[usize],
    workers: usize,
) -> Result<Vec<crate::analysis::TruncationRow>> {
    cfg.validate()?;
    let model = cfg.model()?;
    let prediction = DecayPrediction::new(&model)?;
    let t_max = resolve_t_max(cfg, &prediction);
    let rows = pool(workers)?.install(|| crate::analysis::truncation_study(&model, windows, t_max, cfg.dt_sample))?;
    let mut table = String::from("half_width,n_modes,max_abs_dev,at_time\n");
    for r in &rows {
        let _ = writeln!(
            table,
            "{},{},{},{}",
            r.half_width,
            r.n_modes,
            format_value(r.max_abs_dev),
            format_value(r.at_time)
        );
    }
    fs::create_dir_all(&cfg.outputs)?;
    fs::write(cfg.outputs.join("truncation.csv"), table)?;
    Ok(rows)
}
