use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
methods = ["lr_weighted", "ay2011"]
horizon = 20
seeds = 3
B = 1.0

[model]
family = "gaussian"
sigma = 0.5

[environment]
benchmark = "linear"
dim = 2
actions = 8
"#;

const HEADER: &str = "seed,round,method,action,regret,cum_regret,threshold,weight,covered";

fn lrcs(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lrcs"));
    cmd.args(args).env_remove("LRCS_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn lrcs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let out = lrcs(&["run", "--config", "/nonexistent/experiment.toml"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/experiment.toml"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "typo.toml",
        &format!("{SMALL}\n[kernel]\nlengthscal = 0.1\n"),
    );
    let out = lrcs(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lengthscal"));
}

#[test]
fn invalid_alpha_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "alpha.toml", &format!("alpha = 1.5\n{SMALL}"));
    let out = lrcs(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("alpha"));
}

#[test]
fn run_writes_one_row_per_seed_method_and_round() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let csv = dir.path().join("out.csv");
    let out = lrcs(
        &["run", "--config", &cfg, "--out", csv.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 3 * 20);
    for row in &rows {
        assert_eq!(row.split(',').count(), 9, "{row}");
    }
    // Cumulative regret of the last round is the sum of instantaneous regrets.
    let lr_seed0: Vec<Vec<&str>> = rows
        .iter()
        .map(|r| r.split(',').collect::<Vec<_>>())
        .filter(|f| f[0] == "0" && f[2] == "lr_weighted")
        .collect();
    let sum: f64 = lr_seed0.iter().map(|f| f[4].parse::<f64>().unwrap()).sum();
    let last: f64 = lr_seed0.last().unwrap()[5].parse().unwrap();
    assert!((sum - last).abs() <= 1e-9 * (1.0 + sum));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let a = lrcs(&["run", "--config", &cfg], &[]);
    let b = lrcs(&["run", "--config", &cfg, "--jobs", "1"], &[]);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_environment_variable_overrides_base_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let out = lrcs(&["run", "--config", &cfg], &[("LRCS_SEED", "41")]);
    assert_eq!(out.status.code(), Some(0));
    let seeds: std::collections::BTreeSet<String> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_owned())
        .collect();
    assert_eq!(seeds.into_iter().collect::<Vec<_>>(), ["41", "42", "43"]);

    let bad = lrcs(&["run", "--config", &cfg], &[("LRCS_SEED", "abc")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn report_bounds_adds_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let out = lrcs(&["run", "--config", &cfg, "--report-bounds"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next(),
        Some(format!("{HEADER},bound_t4,bound_t6").as_str())
    );
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 11));
}

#[test]
fn exhausted_round_budget_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "budget.toml",
        &format!("budget_secs = 1e-12\n{SMALL}"),
    );
    let out = lrcs(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("budget"));
}

const CALIBRATION: &str = r#"
methods = ["lr_weighted", "ay2011"]
B = 1.0

[model]
family = "gaussian"
sigma = 0.1

[environment]
benchmark = "linear"
dim = 2
actions = 8

[calibration]
runs = 4
horizon = 5
alphas = [0.05, 0.25]
"#;

#[test]
fn calibrate_echoes_alphas_and_covers_every_scenario() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "cal.toml", CALIBRATION);
    let out = lrcs(&["calibrate", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("method,alpha,scenario,runs,covered_fraction")
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(rows.len(), 2 * 2 * 4);
    for row in &rows {
        let alpha: f64 = row[1].parse().unwrap();
        assert!(alpha == 0.05 || alpha == 0.25, "{alpha}");
        assert_eq!(row[3], "4");
        let frac: f64 = row[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&frac));
    }
    for method in ["lr_weighted", "ay2011"] {
        assert!(rows
            .iter()
            .any(|r| r[0] == method && r[2] == "adaptive_theta_random"));
    }
}

#[test]
fn calibrate_with_zero_runs_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "cal.toml",
        &CALIBRATION.replace("runs = 4", "runs = 0"),
    );
    let out = lrcs(&["calibrate", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes_and_lists_properties() {
    let out = lrcs(&["selftest"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    for name in [
        "density_normalization",
        "curvature_bounds",
        "elliptical_potential",
        "feature_reconstruction",
    ] {
        assert!(text.contains(&format!("PASS {name}")), "{text}");
    }
}

#[test]
fn selftest_detects_wrong_sufficient_statistic() {
    let out = lrcs(
        &["selftest", "--inject-fault", "wrong-sufficient-statistic"],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL density_normalization"));
    assert!(stderr(&out).contains("density_normalization"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            lrcs::config::ExperimentConfig::load(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
