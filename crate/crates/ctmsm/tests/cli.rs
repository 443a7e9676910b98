//! End-to-end checks of the `ctmsm` binary: round trips, file format
//! contracts, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ctmsm::commands::{simulate_dataset, Scenario};
use ctmsm::panel::{load_panel, panel_to_csv, DeathObservability};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ctmsm")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ctmsm-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) {
    let output = run(args);
    assert!(
        output.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

const SM_CONFIG: &str = "\
[model]
kind = weibull-sm
states = 3
absorbing = 3

[sampler]
iterations = 300
seed = 17

[predictive]
simulations = 2000

[simulate]
n = 25
schedule = 0,3,6,12,24,60
death = interval

[truth]
gamma_12 = 0.25
alpha_1 = 1.4
gamma_13 = 0.05
gamma_21 = 0.04
alpha_2 = 0.7
gamma_23 = 0.1
";

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.conf");
    std::fs::write(&path, SM_CONFIG).unwrap();
    path
}

#[test]
fn simulate_roundtrips_through_load_panel() {
    let dir = scratch("roundtrip");
    let config = write_config(&dir);
    let sim = dir.join("sim");
    run_ok(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        sim.to_str().unwrap(),
        "--quiet",
    ]);

    let loaded = load_panel(&sim.join("panel.csv")).unwrap();
    // The file reproduces the in-memory dataset the library generates for
    // the same seed, and rewriting it is byte-identical.
    let truth = Scenario::SmDeathUnknown.truth();
    let (expected, _) = simulate_dataset(
        &truth,
        25,
        &[0.0, 3.0, 6.0, 12.0, 24.0, 60.0],
        DeathObservability::Interval,
        0,
        17,
    )
    .unwrap();
    assert_eq!(loaded, expected);
    let original = std::fs::read_to_string(sim.join("panel.csv")).unwrap();
    assert_eq!(panel_to_csv(&loaded), original);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fit_writes_contracted_artifacts() {
    let dir = scratch("artifacts");
    let config = write_config(&dir);
    let sim = dir.join("sim");
    let fit = dir.join("fit");
    run_ok(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        sim.to_str().unwrap(),
        "--quiet",
    ]);
    run_ok(&[
        "fit",
        "--data",
        sim.join("panel.csv").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        fit.to_str().unwrap(),
        "--quiet",
    ]);

    let summary = std::fs::read_to_string(fit.join("summary.csv")).unwrap();
    assert!(summary.starts_with("parameter,mean,sd,q025,q975\n"));
    let draws = std::fs::read_to_string(fit.join("draws.csv")).unwrap();
    assert!(draws.starts_with("iteration,"));
    assert_eq!(draws.lines().count() - 1, 300 - 60); // iterations minus burn-in

    let trace = std::fs::read_to_string(fit.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,trajectory_acceptance,latent_jumps,proposal_failures\n"));

    // Predictive CDF parses, starts at zero, and is monotone.
    let predictive = std::fs::read_to_string(fit.join("predictive.csv")).unwrap();
    let cdf: Vec<f64> = predictive
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(cdf[0], 0.0);
    assert!(cdf.windows(2).all(|w| w[1] >= w[0]));
    assert!(cdf.iter().all(|&v| v <= 1.0));

    let report = std::fs::read_to_string(fit.join("run_report.txt")).unwrap();
    assert!(report.contains("seed: 17"));
    assert!(report.contains("mean_trajectory_acceptance:"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn summarize_matches_fit_summary() {
    let dir = scratch("summarize");
    let config = write_config(&dir);
    let sim = dir.join("sim");
    let fit = dir.join("fit");
    run_ok(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        sim.to_str().unwrap(),
        "--quiet",
    ]);
    run_ok(&[
        "fit",
        "--data",
        sim.join("panel.csv").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        fit.to_str().unwrap(),
        "--quiet",
    ]);
    let re = dir.join("re");
    run_ok(&[
        "summarize",
        "--data",
        fit.join("draws.csv").to_str().unwrap(),
        "--out",
        re.to_str().unwrap(),
        "--quiet",
    ]);
    let a = std::fs::read(fit.join("summary.csv")).unwrap();
    let b = std::fs::read(re.join("summary.csv")).unwrap();
    assert_eq!(a, b, "re-summarized table must be byte-identical");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn replicate_single_run_leaves_sd_empty() {
    let dir = scratch("replicate");
    let out = dir.join("rep");
    run_ok(&[
        "replicate",
        "sm-death-known",
        "--n",
        "8",
        "--replicates",
        "1",
        "--iterations",
        "120",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    let table = std::fs::read_to_string(out.join("replicate.csv")).unwrap();
    assert!(table.starts_with("parameter,mean,sd\n"));
    for line in table.lines().skip(1) {
        assert!(line.ends_with(','), "sd column must be empty: {line}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn input_errors_exit_2() {
    let dir = scratch("exit2");
    let config = write_config(&dir);
    // Missing data file.
    let output = run(&[
        "fit",
        "--data",
        dir.join("nope.csv").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.starts_with("error kind="), "stderr: {stderr}");

    // Malformed configuration.
    let bad = dir.join("bad.conf");
    std::fs::write(&bad, "[model]\nkind = markov\nnonsense = 1\n").unwrap();
    let output = run(&[
        "simulate",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.join("out2").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));

    // Malformed panel.
    let panel = dir.join("bad_panel.csv");
    std::fs::write(&panel, "id,time,state,end_kind\n1,1.0,1,\n1,3.0,2,censored\n").unwrap();
    let output = run(&[
        "fit",
        "--data",
        panel.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("out3").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn numerical_failures_exit_3() {
    let dir = scratch("exit3");
    // State 2 can only reach the absorbing state, but the data observe a
    // 2 -> 1 transition: trajectory initialization cannot succeed.
    let config = dir.join("config.conf");
    std::fs::write(
        &config,
        "[model]\nkind = markov\nstates = 3\nabsorbing = 3\nforbidden = 2->1\n\n\
         [sampler]\niterations = 100\n",
    )
    .unwrap();
    let panel = dir.join("panel.csv");
    std::fs::write(
        &panel,
        "id,time,state,end_kind\n1,0.0,2,\n1,3.0,1,censored\n",
    )
    .unwrap();
    let output = run(&[
        "fit",
        "--data",
        panel.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("kind=initialization_failure"), "{stderr}");
    std::fs::remove_dir_all(&dir).ok();
}
