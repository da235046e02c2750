use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
# small array, short run
n_cavities = 101
atom_site = antinode
coupling_g = 0.008
resonant_mode = 12
dt_sample = 2
tracked_modes = 13, 11..12
";

fn cca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cca")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

fn summary(path: &Path) -> Vec<(String, String)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key=value line");
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn significant_digits(field: &str) -> usize {
    let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
    mantissa.chars().filter(char::is_ascii_digit).count()
}

#[test]
fn simulate_writes_formatted_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("run");
    let res = cca(&[
        "simulate",
        "--config",
        &cfg,
        "--set",
        "t_max=600",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.ends_with('\n'));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "time,atom_pop,mode_11,mode_12,mode_13");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 301);
    for field in rows.iter().flat_map(|r| r.split(',')) {
        assert_eq!(significant_digits(field), 12, "{field}");
        field.parse::<f64>().unwrap();
    }
    let last_time: f64 = rows[300].split(',').next().unwrap().parse().unwrap();
    assert_eq!(last_time, 600.0);

    let theory = fs::read_to_string(out.join("theory.csv")).unwrap();
    assert!(theory.starts_with("time,exp_pred,mode_model_11,mode_model_12,mode_model_13,dressed_pred\n"));

    let s = summary(&out.join("summary.txt"));
    let get = |k: &str| s.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    assert_eq!(get("n_cavities"), Some("101"));
    assert_eq!(get("t_max"), Some("6.00000000000e2"));
    assert!(get("gamma_fit").unwrap().parse::<f64>().unwrap() > 0.0);
    let model = cca_core::RunConfig::from_file(Path::new(&cfg))
        .unwrap()
        .model()
        .unwrap();
    let gamma = cca_core::theory::decay_rate_ww(&model).unwrap();
    let printed: f64 = get("gamma_theory").unwrap().parse().unwrap();
    assert!((printed / gamma - 1.0).abs() < 1e-11);
    assert_eq!(get("time_window"), Some("[0, t_max]"));
    assert!(get("norm_error").unwrap().parse::<f64>().unwrap() < 1e-10);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert!(cca(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .success());
    }
    for f in ["trajectory.csv", "theory.csv", "summary.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad_key = cca(&["simulate", "--set", "frequency=3", "--out", out]);
    assert_eq!(bad_key.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_key.stderr).contains("frequency"));

    let bad_site = cca(&[
        "simulate",
        "--set",
        "n_cavities=50",
        "--set",
        "atom_site=51",
        "--out",
        out,
    ]);
    assert_eq!(bad_site.status.code(), Some(1));

    assert_eq!(
        cca(&["simulate", "--config", "/nonexistent/cfg", "--out", out])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(cca(&["figure", "fig9", "--out", out]).status.code(), Some(1));
    assert_eq!(cca(&["teleport"]).status.code(), Some(1));
    assert_eq!(cca(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let res = cca(&[
        "simulate",
        "--set",
        "n_cavities=21",
        "--set",
        "resonant_mode=5",
        "--set",
        "tracked_modes=none",
        "--set",
        "coupling_g=1e300",
        "--set",
        "atom_site=antinode",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("sweep");
    let res = cca(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "g",
        "--values",
        "0.006,0.008,0.01",
        "--workers",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "coupling_g,gamma_fit,gamma_theory,t_c,t_turn,dressed_rmse");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0.006,") && lines[3].starts_with("0.01,"));
    // gamma scales as g^2
    let theory: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!((theory[2] / theory[0] - (0.01f64 / 0.006).powi(2)).abs() < 1e-9);
    for v in ["0.006", "0.008", "0.01"] {
        assert!(out.join(format!("coupling_g_{v}")).join("summary.txt").exists());
    }
}

#[test]
fn truncation_study_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("trunc");
    let res = cca(&[
        "truncation-study",
        "--config",
        &cfg,
        "--windows",
        "1,3,6",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(out.join("truncation.csv")).unwrap();
    let devs: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(devs.len(), 3);
    assert!(devs[0] >= devs[1] && devs[1] >= devs[2], "{devs:?}");
}

#[test]
fn figure_presets_accept_overrides() {
    // shortened fig2 run; the preset fixes N and the site but keeps t_max
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2");
    let res = cca(&[
        "figure",
        "fig2",
        "--set",
        "t_max=2000",
        "--set",
        "dt_sample=20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let header = fs::read_to_string(out.join("N2001").join("trajectory.csv")).unwrap();
    let header = header.lines().next().unwrap();
    let expected: Vec<String> = ["time".to_string(), "atom_pop".to_string()]
        .into_iter()
        .chain((50..=60).map(|k| format!("mode_{k}")))
        .collect();
    assert_eq!(header, expected.join(","));
    assert!(out.join("fig2.csv").exists());
}
