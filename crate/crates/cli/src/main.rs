use std::path::PathBuf;
use std::process::ExitCode;

use cca_core::config::RunConfig;
use cca_core::scenario::{run_figure, run_scenario, run_sweep, run_truncation_study, Figure};
use cca_core::CcaError;
use clap::{Args, Parser, Subcommand};

/// Spontaneous decay of a two-level atom in a coupled-cavity array.
#[derive(Parser, Debug)]
#[command(name = "cca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set n_cavities=1001`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides the `outputs` key).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one configuration and compare it with theory.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat a run over values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `N`, `n`, `g`, `k0` or any config key.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Regenerate the data behind one figure preset.
    Figure {
        #[command(flatten)]
        common: Common,
        /// fig1, fig2, fig3 or fig4.
        name: String,
    },
    /// Atom-population error of truncated mode sets against the full set.
    TruncationStudy {
        #[command(flatten)]
        common: Common,
        /// Half-widths around the resonant mode.
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,20")]
        windows: Vec<usize>,
    },
}

fn load(common: &Common) -> Result<RunConfig, CcaError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for s in &common.set {
        cfg.apply_override(s)?;
    }
    if let Some(out) = &common.out {
        cfg.outputs = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CcaError> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = load(&common)?;
            let report = run_scenario(&cfg)?;
            print!("{}", report.summary_text());
            println!("outputs={}", cfg.outputs.display());
        }
        Command::Sweep { common, axis, values } => {
            let cfg = load(&common)?;
            let rows = run_sweep(&cfg, &axis, &values, common.workers)?;
            for r in rows {
                println!(
                    "{axis}={} gamma_fit={:.6e} gamma_theory={:.6e} t_turn={}",
                    r.value,
                    r.gamma_fit,
                    r.gamma_theory,
                    r.t_turn.map_or("none".to_string(), |t| format!("{t:.1}"))
                );
            }
            println!("outputs={}", cfg.outputs.join("sweep.csv").display());
        }
        Command::Figure { common, name } => {
            let fig: Figure = name.parse()?;
            let cfg = load(&common)?;
            for (label, r) in run_figure(fig, &cfg, common.workers)? {
                println!(
                    "{label}: gamma_fit={:.6e} t_c={:.1} t_turn={}",
                    r.fit.rate,
                    r.prediction.t_c,
                    r.t_turn.map_or("none".to_string(), |t| format!("{t:.1}"))
                );
            }
            println!("outputs={}", cfg.outputs.display());
        }
        Command::TruncationStudy { common, windows } => {
            let cfg = load(&common)?;
            for r in run_truncation_study(&cfg, &windows, common.workers)? {
                println!(
                    "half_width={} n_modes={} max_abs_dev={:.6e} at_time={:.1}",
                    r.half_width, r.n_modes, r.max_abs_dev, r.at_time
                );
            }
            println!("outputs={}", cfg.outputs.join("truncation.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap's own usage errors would exit with 2, which is reserved for
    // numerical failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CcaError::Numerical(_) => 2,
                CcaError::Validation(_) | CcaError::Io(_) => 1,
            })
        }
    }
}
