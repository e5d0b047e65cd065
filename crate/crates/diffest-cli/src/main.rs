//! Command-line front end: run scenarios, validate configs, and check
//! the concentration bounds empirically.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 statistical
//! acceptance failure, 3 I/O failure.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use diffest::concentration::{
    coverage_violation_rate, selfnorm_violation_rate, uniform_design, LabReport, WeightDist,
};
use diffest::io::{load_config, write_outputs};
use diffest::scenario::{Phenomenon, ScenarioConfig};
use diffest::sim::SimError;
use diffest::{run, RunOptions};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "diffest",
    version,
    about = "Deterministic simulator for diffusion-based non-parametric learning over networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its reports to a directory.
    Simulate {
        /// Scenario file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; created if missing.
        #[arg(long, env = "DIFFEST_OUT", default_value = "runs")]
        out: PathBuf,
        /// Worker threads; results are identical for any value.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Monte-Carlo check that the certified kernel bound covers the
    /// truth at a fixed query point.
    CoverageTest {
        /// Query point.
        #[arg(long, default_value_t = 5.0)]
        x: f64,
        /// Number of fixed design points.
        #[arg(long, default_value_t = 200)]
        design_size: usize,
        #[arg(long, default_value_t = 4.0)]
        design_lo: f64,
        #[arg(long, default_value_t = 6.0)]
        design_hi: f64,
        /// Kernel bandwidth.
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        /// Noise scale.
        #[arg(long, default_value_t = 0.3)]
        sigma: f64,
        /// Certification level the bound is computed at.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Acceptance threshold; defaults to delta plus three binomial
        /// standard errors.
        #[arg(long)]
        max_rate: Option<f64>,
    },
    /// Monte-Carlo check of the self-normalized tail bound.
    SelfnormTest {
        /// Trial length.
        #[arg(long, default_value_t = 100)]
        t: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Weight distribution: kernel_weights or uniform_unit.
        #[arg(long, default_value = "uniform_unit")]
        weights: WeightDist,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Acceptance threshold; defaults to delta plus three binomial
        /// standard errors.
        #[arg(long)]
        max_rate: Option<f64>,
    },
    /// Check a scenario file and report the first problem found.
    ValidateConfig {
        /// Scenario file (JSON).
        config: PathBuf,
    },
    /// Write the built-in full-scale scenario to a file.
    EmitDefaultConfig {
        /// Destination path.
        path: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Statistical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Statistical(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Statistical(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate {
            config,
            out,
            threads,
        } => simulate(&config, &out, threads),
        Command::CoverageTest {
            x,
            design_size,
            design_lo,
            design_hi,
            h,
            sigma,
            delta,
            reps,
            seed,
            max_rate,
        } => coverage_test(
            x, design_size, design_lo, design_hi, h, sigma, delta, reps, seed, max_rate,
        ),
        Command::SelfnormTest {
            t,
            sigma,
            delta,
            weights,
            reps,
            seed,
            max_rate,
        } => selfnorm_test(t, sigma, delta, weights, reps, seed, max_rate),
        Command::ValidateConfig { config } => {
            let parsed = load_config(&config).map_err(|e| usage(e.to_string()))?;
            println!(
                "ok: {} nodes over {} rounds, delta {}",
                parsed.node_count, parsed.horizon, parsed.delta
            );
            Ok(())
        }
        Command::EmitDefaultConfig { path } => {
            let text = ScenarioConfig::reference_default().to_json_pretty() + "\n";
            std::fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn simulate(config_path: &Path, out: &Path, threads: usize) -> Result<(), Failure> {
    let config = load_config(config_path).map_err(|e| usage(e.to_string()))?;
    let result = run(&config, &RunOptions { threads }).map_err(|e| match e {
        SimError::Config(inner) => usage(inner.to_string()),
        other => usage(other.to_string()),
    })?;
    let written = write_outputs(&result, out).map_err(|e| Failure::Io(e.to_string()))?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!(
        "done: {} agents, {} rounds, {} messages logged",
        config.node_count,
        config.horizon,
        result.message_log.len()
    );
    Ok(())
}

/// `delta` plus three binomial standard errors at `reps` trials: the
/// guaranteed rate is at most `delta`, so landing beyond this margin is
/// a genuine failure rather than Monte-Carlo jitter.
fn acceptance_threshold(delta: f64, reps: usize) -> f64 {
    delta + 3.0 * (delta * (1.0 - delta) / reps as f64).sqrt()
}

fn check_rate(report: &LabReport, rate: f64, threshold: f64) -> Result<(), Failure> {
    println!("{}", LabReport::CSV_HEADER);
    println!("{}", report.csv_row());
    if rate > threshold {
        Err(Failure::Statistical(format!(
            "violation rate {rate} exceeds threshold {threshold}"
        )))
    } else {
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn coverage_test(
    x: f64,
    design_size: usize,
    design_lo: f64,
    design_hi: f64,
    h: f64,
    sigma: f64,
    delta: f64,
    reps: usize,
    seed: u64,
    max_rate: Option<f64>,
) -> Result<(), Failure> {
    if !(design_lo.is_finite() && design_hi.is_finite() && design_lo < design_hi) {
        return Err(usage("design_lo must be finite and below design_hi"));
    }
    if design_size == 0 {
        return Err(usage("design_size must be positive"));
    }
    validate_common(h, sigma, delta, reps)?;
    let design = uniform_design(design_size, design_lo, design_hi, seed);
    let phenomenon = Phenomenon::SinExpOffset {
        amplitude: 1.0,
        rate: -0.2,
        offset: 3.0,
    };
    let rate = coverage_violation_rate(x, &design, h, &phenomenon, sigma, delta, reps, seed)
        .map_err(|e| usage(e.to_string()))?;
    let report = LabReport {
        test: "coverage",
        t: design_size as u64,
        x: Some(x),
        h: Some(h),
        sigma,
        delta: Some(delta),
        lambda: None,
        weights: None,
        replications: reps,
        seed,
        value: rate,
        std_error: Some((rate * (1.0 - rate) / reps as f64).sqrt()),
    };
    check_rate(
        &report,
        rate,
        max_rate.unwrap_or_else(|| acceptance_threshold(delta, reps)),
    )
}

fn selfnorm_test(
    t: usize,
    sigma: f64,
    delta: f64,
    weights: WeightDist,
    reps: usize,
    seed: u64,
    max_rate: Option<f64>,
) -> Result<(), Failure> {
    if t == 0 {
        return Err(usage("t must be positive"));
    }
    validate_common(1.0, sigma, delta, reps)?;
    let rate = selfnorm_violation_rate(t, sigma, delta, weights, reps, seed);
    let report = LabReport {
        test: "selfnorm",
        t: t as u64,
        x: None,
        h: None,
        sigma,
        delta: Some(delta),
        lambda: None,
        weights: Some(weights),
        replications: reps,
        seed,
        value: rate,
        std_error: Some((rate * (1.0 - rate) / reps as f64).sqrt()),
    };
    check_rate(
        &report,
        rate,
        max_rate.unwrap_or_else(|| acceptance_threshold(delta, reps)),
    )
}

fn validate_common(h: f64, sigma: f64, delta: f64, reps: usize) -> Result<(), Failure> {
    if !(h.is_finite() && h > 0.0) {
        return Err(usage("h must be finite and positive"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(usage("sigma must be finite and positive"));
    }
    if !(delta.is_finite() && 0.0 < delta && delta < 1.0) {
        return Err(usage("delta must lie in (0,1)"));
    }
    if reps < 100 {
        return Err(usage("reps must be at least 100"));
    }
    Ok(())
}
