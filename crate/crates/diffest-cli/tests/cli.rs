//! Black-box tests of the installed binary: argument handling, exit
//! codes, output determinism, and the statistical pass/fail contract.

use diffest::agent::RequestStrategy;
use diffest::estimator::{BandwidthMode, KernelConfig, KernelKind, SearchMethod};
use diffest::graph::TopologySpec;
use diffest::scenario::{InputConfig, MetricsConfig, NoiseConfig, Phenomenon, ScenarioConfig};
use diffest::Interval;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_diffest");

fn diffest(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_small_config(path: &Path) {
    let config = ScenarioConfig {
        node_count: 6,
        horizon: 12,
        domain: Interval::new(0.0, 10.0).unwrap(),
        delta: 0.05,
        lipschitz: 1.0,
        seed: 33,
        phenomenon: Phenomenon::SinExpOffset {
            amplitude: 1.0,
            rate: -0.2,
            offset: 3.0,
        },
        topology: TopologySpec::RandomGeometric {
            radius: 0.8,
            max_attempts: 1000,
        },
        input: InputConfig::GaussianDrawn {
            mean_range: [0.0, 10.0],
            dispersion_range: [0.5, 1.5],
        },
        noise: NoiseConfig::GaussianDrawn {
            sigma_range: [0.0, 0.7],
        },
        kernel: KernelConfig {
            kind: KernelKind::Box,
            bandwidth: BandwidthMode::PerQueryOptimal {
                h_min: 0.05,
                h_max: 2.0,
            },
            search: SearchMethod::ExactBreakpoints,
        },
        request_strategy: RequestStrategy::Uniform,
        metrics: MetricsConfig {
            grid_size: 21,
            grid_rounds: vec![12],
            evolution_every: 6,
            delta_variants: vec![],
        },
        log_messages: true,
        emit_plots: true,
    };
    fs::write(path, config.to_json_pretty()).unwrap();
}

#[test]
fn help_and_version_succeed() {
    let help = diffest(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("simulate"));
    assert_eq!(diffest(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(diffest(&[]).status.code(), Some(1));
    assert_eq!(diffest(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        diffest(&["selfnorm-test", "--weights", "gaussian"]).status.code(),
        Some(1)
    );
    assert_eq!(
        diffest(&["selfnorm-test", "--reps", "10"]).status.code(),
        Some(1)
    );
    assert_eq!(
        diffest(&["coverage-test", "--delta", "1.5"]).status.code(),
        Some(1)
    );
}

#[test]
fn emitted_default_config_validates_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("default.json");
    let emit = diffest(&["emit-default-config", path.to_str().unwrap()]);
    assert_eq!(emit.status.code(), Some(0));
    let validate = diffest(&["validate-config", path.to_str().unwrap()]);
    assert_eq!(validate.status.code(), Some(0));
    assert!(stdout(&validate).contains("50 nodes over 1000 rounds"));
}

#[test]
fn invalid_configs_are_named_and_nothing_is_written() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    write_small_config(&path);
    let mut text = fs::read_to_string(&path).unwrap();
    text = text.replace("\"delta\": 0.05", "\"delta\": 1.5");
    fs::write(&path, text).unwrap();

    let validate = diffest(&["validate-config", path.to_str().unwrap()]);
    assert_eq!(validate.status.code(), Some(1));
    assert!(stderr(&validate).contains("delta"), "{}", stderr(&validate));

    let out_dir = tmp.path().join("never");
    let simulate = diffest(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(simulate.status.code(), Some(1));
    assert!(stderr(&simulate).contains("delta"));
    assert!(!out_dir.exists(), "output written despite invalid config");

    let missing = diffest(&["validate-config", "/nonexistent/config.json"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_and_honors_the_env_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("small.json");
    write_small_config(&config);

    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    for (dir, threads) in [(&dir_a, "1"), (&dir_b, "3")] {
        let out = diffest(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stdout(&out).contains("done: 6 agents, 12 rounds"));
    }
    for name in [
        "grid_report.csv",
        "bound_evolution.csv",
        "topology.txt",
        "messages.log",
    ] {
        let a = fs::read(dir_a.join(name)).unwrap();
        let b = fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across runs");
    }

    let env_dir = tmp.path().join("from_env");
    let out = Command::new(BIN)
        .args(["simulate", "--config", config.to_str().unwrap()])
        .env("DIFFEST_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.join("grid_report.csv").exists());
}

#[test]
fn statistical_commands_report_a_csv_row_and_gate_on_the_rate() {
    let pass = diffest(&["selfnorm-test", "--reps", "2000"]);
    assert_eq!(pass.status.code(), Some(0), "{}", stderr(&pass));
    let text = stdout(&pass);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "config_hash,test,t,x,h,sigma,delta,lambda,weights,replications,seed,value,std_error"
    );
    let row = lines.next().unwrap();
    assert!(row.contains(",selfnorm,100,"), "{row}");
    assert!(row.contains("uniform_unit"));

    // An impossible threshold turns the same healthy run into a
    // statistical failure: the observed rate is small but not zero.
    let fail = diffest(&["selfnorm-test", "--reps", "2000", "--max-rate", "0.0"]);
    assert_eq!(fail.status.code(), Some(2), "{}", stderr(&fail));
    assert!(stderr(&fail).contains("exceeds threshold"));

    let coverage = diffest(&["coverage-test", "--reps", "300", "--design-size", "80"]);
    assert_eq!(coverage.status.code(), Some(0), "{}", stderr(&coverage));
    assert!(stdout(&coverage).contains(",coverage,80,"));
}

#[test]
fn io_failures_exit_three() {
    let out = diffest(&["emit-default-config", "/nonexistent/dir/config.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error: "));
}
