//! Run configuration: a flat `key = value` text format plus overrides.
//!
//! ```text
//! # paper preset
//! n_cavities = 2001
//! atom_site = 1984
//! coupling_g = 0.0015
//! resonant_mode = 55
//! t_max = auto
//! tracked_modes = 50..60
//! ```

use std::path::{Path, PathBuf};

use crate::dynamics::ModeSelection;
use crate::error::{CcaError, Result};
use crate::model::{build_model, CcaModel, CcaParams, Resonance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Eigen,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteSpec {
    Index(usize),
    /// Exact antinode of the resonant mode.
    Antinode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_cavities: usize,
    pub atom_site: SiteSpec,
    pub coupling_g: f64,
    pub hopping_eta: f64,
    pub cavity_freq: f64,
    pub resonance: Resonance,
    /// `None` means three turning times.
    pub t_max: Option<f64>,
    pub dt_sample: f64,
    pub truncation_half_width: Option<usize>,
    pub tracked_modes: ModeSelection,
    pub method: Method,
    pub ode_dt: f64,
    pub outputs: PathBuf,
    pub renormalize_dressed_block: bool,
    pub turning_threshold: f64,
    pub turning_hold: usize,
}

impl Default for RunConfig {
    /// The N = 2001 array with the atom in cavity 1984, resonant with mode 55.
    fn default() -> Self {
        RunConfig {
            n_cavities: 2001,
            atom_site: SiteSpec::Index(1984),
            coupling_g: 0.0015,
            hopping_eta: 1.0,
            cavity_freq: 0.0,
            resonance: Resonance::ModeIndex(55),
            t_max: None,
            dt_sample: 10.0,
            truncation_half_width: None,
            tracked_modes: ModeSelection::List((50..=60).collect()),
            method: Method::Eigen,
            ode_dt: 0.01,
            outputs: PathBuf::from("out"),
            renormalize_dressed_block: false,
            turning_threshold: crate::analysis::DEFAULT_TURNING_THRESHOLD,
            turning_hold: crate::analysis::DEFAULT_TURNING_HOLD,
        }
    }
}

pub const KEYS: &[&str] = &[
    "n_cavities",
    "atom_site",
    "coupling_g",
    "hopping_eta",
    "cavity_freq",
    "resonant_mode",
    "atom_freq",
    "t_max",
    "dt_sample",
    "truncation_half_width",
    "tracked_modes",
    "method",
    "ode_dt",
    "outputs",
    "renormalize_dressed_block",
    "turning_threshold",
    "turning_hold",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CcaError::validation(format!("invalid value {value:?} for key {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CcaError::validation(format!("invalid boolean {value:?} for key {key}"))),
    }
}

/// `none`, `all`, `a..b` (inclusive), or a comma list mixing both forms.
pub fn parse_mode_spec(value: &str) -> Result<ModeSelection> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "none" => return Ok(ModeSelection::None),
        "all" => return Ok(ModeSelection::All),
        _ => {}
    }
    let mut modes = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = parse_num("tracked_modes", a.trim())?;
            let b: usize = parse_num("tracked_modes", b.trim_start_matches('=').trim())?;
            if a > b {
                return Err(CcaError::validation(format!("empty mode range {part}")));
            }
            modes.extend(a..=b);
        } else {
            modes.push(parse_num("tracked_modes", part)?);
        }
    }
    Ok(ModeSelection::List(modes))
}

impl RunConfig {
    /// Applies a single `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "n_cavities" => self.n_cavities = parse_num(key, value)?,
            "atom_site" => {
                self.atom_site = if value.eq_ignore_ascii_case("antinode") {
                    SiteSpec::Antinode
                } else {
                    SiteSpec::Index(parse_num(key, value)?)
                }
            }
            "coupling_g" => self.coupling_g = parse_num(key, value)?,
            "hopping_eta" => self.hopping_eta = parse_num(key, value)?,
            "cavity_freq" => self.cavity_freq = parse_num(key, value)?,
            "resonant_mode" => self.resonance = Resonance::ModeIndex(parse_num(key, value)?),
            "atom_freq" => self.resonance = Resonance::AtomFrequency(parse_num(key, value)?),
            "t_max" => {
                self.t_max = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "dt_sample" => self.dt_sample = parse_num(key, value)?,
            "truncation_half_width" => {
                self.truncation_half_width = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "tracked_modes" => self.tracked_modes = parse_mode_spec(value)?,
            "method" => {
                self.method = match value.to_ascii_lowercase().as_str() {
                    "eigen" => Method::Eigen,
                    "ode" => Method::Ode,
                    _ => return Err(CcaError::validation(format!("unknown method {value:?} (eigen|ode)"))),
                }
            }
            "ode_dt" => self.ode_dt = parse_num(key, value)?,
            "outputs" => self.outputs = PathBuf::from(value),
            "renormalize_dressed_block" => self.renormalize_dressed_block = parse_bool(key, value)?,
            "turning_threshold" => self.turning_threshold = parse_num(key, value)?,
            "turning_hold" => self.turning_hold = parse_num(key, value)?,
            _ => {
                return Err(CcaError::validation(format!(
                    "unknown config key {key:?}; expected one of {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key=value` (used for `--set`).
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CcaError::validation(format!("expected key=value, got {assignment:?}")))?;
        self.set(k, v)
    }

    /// Applies every line of a config file body. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_override(line)
                .map_err(|e| CcaError::validation(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CcaError::validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Model parameters, resolving an antinode site request.
    pub fn params(&self) -> Result<CcaParams> {
        let site = match self.atom_site {
            SiteSpec::Index(n) => n,
            SiteSpec::Antinode => {
                let probe = CcaParams::new(self.n_cavities, 1, self.coupling_g, self.resonance)
                    .with_hopping(self.hopping_eta)
                    .with_cavity_freq(self.cavity_freq);
                let model = build_model(probe)?;
                model.find_antinode_site(model.k0())?
            }
        };
        Ok(CcaParams::new(self.n_cavities, site, self.coupling_g, self.resonance)
            .with_hopping(self.hopping_eta)
            .with_cavity_freq(self.cavity_freq))
    }

    pub fn model(&self) -> Result<CcaModel> {
        build_model(self.params()?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.t_max {
            if !(t > 0.0) || !t.is_finite() {
                return Err(CcaError::validation(format!("t_max must be positive, got {t}")));
            }
        }
        if !(self.dt_sample > 0.0) || !self.dt_sample.is_finite() {
            return Err(CcaError::validation("dt_sample must be positive"));
        }
        if !(self.turning_threshold > 0.0) || self.turning_hold == 0 {
            return Err(CcaError::validation(
                "turning_threshold must be positive and turning_hold >= 1",
            ));
        }
        self.params()?.validate()
    }

    /// Serialised back to `key = value` lines, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("n_cavities = {}", self.n_cavities),
            match self.atom_site {
                SiteSpec::Index(n) => format!("atom_site = {n}"),
                SiteSpec::Antinode => "atom_site = antinode".to_string(),
            },
            format!("coupling_g = {}", self.coupling_g),
            format!("hopping_eta = {}", self.hopping_eta),
            format!("cavity_freq = {}", self.cavity_freq),
        ];
        lines.push(match self.resonance {
            Resonance::ModeIndex(k) => format!("resonant_mode = {k}"),
            Resonance::AtomFrequency(w) => format!("atom_freq = {w}"),
        });
        lines.push(match self.t_max {
            Some(t) => format!("t_max = {t}"),
            None => "t_max = auto".to_string(),
        });
        lines.push(format!("dt_sample = {}", self.dt_sample));
        lines.push(match self.truncation_half_width {
            Some(w) => format!("truncation_half_width = {w}"),
            None => "truncation_half_width = none".to_string(),
        });
        lines.push(format!(
            "tracked_modes = {}",
            match &self.tracked_modes {
                ModeSelection::None => "none".to_string(),
                ModeSelection::All => "all".to_string(),
                ModeSelection::List(l) => l.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            }
        ));
        lines.push(format!(
            "method = {}",
            match self.method {
                Method::Eigen => "eigen",
                Method::Ode => "ode",
            }
        ));
        lines.push(format!("ode_dt = {}", self.ode_dt));
        lines.push(format!("outputs = {}", self.outputs.display()));
        lines.push(format!(
            "renormalize_dressed_block = {}",
            self.renormalize_dressed_block
        ));
        lines.push(format!("turning_threshold = {}", self.turning_threshold));
        lines.push(format!("turning_hold = {}", self.turning_hold));
        lines.join("\n") + "\n"
    }
}
