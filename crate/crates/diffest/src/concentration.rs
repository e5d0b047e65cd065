//! Monte-Carlo validation of the deviation inequalities the estimator's
//! certified bounds rest on: the coverage guarantee of the kernel bound,
//! the self-normalized tail bound, and the exponential supermartingale
//! mean bound.
//!
//! Trials are independent, each seeded from its own derived stream, so
//! violation counts are reproducible and order-independent under any
//! parallel schedule.

use crate::domain::Interval;
use crate::estimator::{beta_bound, kappa, kernel_eval, nw_estimate, BoundParams, Sample};
use crate::rng::{stream_rng, STREAM_SETUP, STREAM_TRIAL_BASE};
use crate::scenario::Phenomenon;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// How the weight sequence of a self-normalized trial is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightDist {
    /// Box-kernel weights from a synthetic design: each weight is the
    /// kernel response to a point drawn uniformly on [-1, 1] with
    /// bandwidth 1/2, i.e. a fair 0/1 coin through the production kernel.
    KernelWeights,
    /// Weights drawn uniformly from [0, 1].
    UniformUnit,
}

impl fmt::Display for WeightDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightDist::KernelWeights => "kernel_weights",
            WeightDist::UniformUnit => "uniform_unit",
        })
    }
}

impl FromStr for WeightDist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kernel_weights" => Ok(WeightDist::KernelWeights),
            "uniform_unit" => Ok(WeightDist::UniformUnit),
            other => Err(format!(
                "unknown weight distribution {other:?} (expected kernel_weights or uniform_unit)"
            )),
        }
    }
}

/// The self-normalized tail bound at confidence `delta`:
/// `sqrt(2 sigma^2 ln(sqrt(1+V)/delta) (1+V))`.
pub fn selfnorm_bound(v_t: f64, sigma: f64, delta: f64) -> f64 {
    (2.0 * sigma * sigma * ((1.0 + v_t).sqrt() / delta).ln() * (1.0 + v_t)).sqrt()
}

/// One realized weighted-noise process with its certified envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfNormTrial {
    /// Weighted noise sum.
    pub s_t: f64,
    /// Squared-weight sum.
    pub v_t: f64,
    pub bound: f64,
}

impl SelfNormTrial {
    pub fn violated(&self) -> bool {
        self.s_t.abs() > self.bound
    }
}

/// Folds a weight and noise sequence into (S, V, bound).
pub fn selfnorm_trial(weights: &[f64], noise: &[f64], sigma: f64, delta: f64) -> SelfNormTrial {
    assert_eq!(weights.len(), noise.len());
    let s_t: f64 = weights.iter().zip(noise).map(|(v, e)| v * e).sum();
    let v_t: f64 = weights.iter().map(|v| v * v).sum();
    SelfNormTrial {
        s_t,
        v_t,
        bound: selfnorm_bound(v_t, sigma, delta),
    }
}

fn draw_weight<R: Rng + ?Sized>(dist: WeightDist, rng: &mut R) -> f64 {
    match dist {
        WeightDist::KernelWeights => {
            let xi = rng.random_range(-1.0..1.0);
            kernel_eval(xi / 0.5)
        }
        WeightDist::UniformUnit => rng.random::<f64>(),
    }
}

/// Fraction of `replications` independent length-`t` trials whose
/// weighted noise sum escapes the self-normalized envelope.
pub fn selfnorm_violation_rate(
    t: usize,
    sigma: f64,
    delta: f64,
    weights: WeightDist,
    replications: usize,
    seed: u64,
) -> f64 {
    assert!(replications >= 100, "need at least 100 replications");
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and positive");
    let violations = (0..replications)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = stream_rng(seed, STREAM_TRIAL_BASE + i as u64);
            let v: Vec<f64> = (0..t).map(|_| draw_weight(weights, &mut rng)).collect();
            let eta: Vec<f64> = (0..t).map(|_| normal.sample(&mut rng)).collect();
            selfnorm_trial(&v, &eta, sigma, delta).violated()
        })
        .count();
    violations as f64 / replications as f64
}

/// Monte-Carlo mean of the exponential supermartingale with its
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Sample mean of `w_t = exp(sum lambda eta v / sigma - lambda^2 v^2 / 2)`
/// over `replications` trials with Gaussian noise and uniform weights.
/// The population mean is at most 1 for any sub-Gaussian noise.
pub fn martingale_mean(
    t: usize,
    lambda: f64,
    sigma: f64,
    replications: usize,
    seed: u64,
) -> MartingaleEstimate {
    assert!(replications >= 1000, "need at least 1000 replications");
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and positive");
    let ws: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, STREAM_TRIAL_BASE + i as u64);
            let mut exponent = 0.0;
            for _ in 0..t {
                let v: f64 = rng.random::<f64>();
                let eta = normal.sample(&mut rng);
                exponent += lambda * eta * v / sigma - 0.5 * lambda * lambda * v * v;
            }
            exponent.exp()
        })
        .collect();
    // Sequential reduction keeps the result independent of the schedule.
    let mean = ws.iter().sum::<f64>() / replications as f64;
    let ss: f64 = ws.iter().map(|w| (w - mean) * (w - mean)).sum();
    let std_error = (ss / (replications as f64 * (replications as f64 - 1.0))).sqrt();
    MartingaleEstimate { mean, std_error }
}

/// The evaluation window holds no design mass, so the estimator has
/// nothing to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no design points fall within the evaluation window")]
pub struct ZeroMass;

/// Violation rate of the kernel estimate's certified bound at a fixed
/// query point: each replication redraws Gaussian noise on the fixed
/// design, re-estimates through the production estimator path, and
/// checks `|mu_hat(x) - m(x)| <= beta(x)`.
///
/// The Lipschitz constant entering the bound is measured from `m` over
/// the design span padded by one bandwidth.
#[allow(clippy::too_many_arguments)]
pub fn coverage_violation_rate(
    x: f64,
    design: &[f64],
    h: f64,
    m: &Phenomenon,
    sigma: f64,
    delta: f64,
    replications: usize,
    seed: u64,
) -> Result<f64, ZeroMass> {
    assert!(replications >= 100, "need at least 100 replications");
    let base: Vec<Sample> = design.iter().map(|&xi| Sample { xi, y: 0.0 }).collect();
    if kappa(x, &base, h) == 0.0 {
        return Err(ZeroMass);
    }

    let lo = design.iter().copied().fold(x, f64::min) - h;
    let hi = design.iter().copied().fold(x, f64::max) + h;
    let span = Interval::new(lo, hi).expect("padded design span is a valid interval");
    let params = BoundParams {
        lipschitz: m.max_observed_slope(span),
        sigma,
        delta,
    };
    // Neither the mass nor the bound depends on the drawn responses.
    let beta = beta_bound(x, &base, h, &params);
    let m_x = m.eval(x);
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and positive");

    let violations = (0..replications)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = stream_rng(seed, STREAM_TRIAL_BASE + i as u64);
            let samples: Vec<Sample> = design
                .iter()
                .map(|&xi| Sample {
                    xi,
                    y: m.eval(xi) + normal.sample(&mut rng),
                })
                .collect();
            let mu = nw_estimate(x, &samples, h).expect("mass checked above");
            (mu - m_x).abs() > beta
        })
        .count();
    Ok(violations as f64 / replications as f64)
}

/// Deterministic uniform design on [lo, hi] for coverage experiments.
pub fn uniform_design(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, STREAM_SETUP);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// One lab result as a flat CSV record. Inapplicable columns stay empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LabReport {
    pub test: &'static str,
    /// Trial length (or design size for coverage runs).
    pub t: u64,
    pub x: Option<f64>,
    pub h: Option<f64>,
    pub sigma: f64,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub weights: Option<WeightDist>,
    pub replications: usize,
    pub seed: u64,
    /// Violation rate or sample mean.
    pub value: f64,
    pub std_error: Option<f64>,
}

impl LabReport {
    pub const CSV_HEADER: &'static str =
        "config_hash,test,t,x,h,sigma,delta,lambda,weights,replications,seed,value,std_error";

    /// Hash of every field that defines the experiment (not its outcome).
    pub fn config_hash(&self) -> u64 {
        let canonical = format!(
            "{}|{}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}|{}",
            self.test,
            self.t,
            self.x,
            self.h,
            self.sigma,
            self.delta,
            self.lambda,
            self.weights,
            self.replications,
            self.seed
        );
        crate::io::fnv1a64(canonical.as_bytes())
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(crate::io::format_float).unwrap_or_default();
        format!(
            "{:016x},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.config_hash(),
            self.test,
            self.t,
            opt(self.x),
            opt(self.h),
            crate::io::format_float(self.sigma),
            opt(self.delta),
            opt(self.lambda),
            self.weights.map(|w| w.to_string()).unwrap_or_default(),
            self.replications,
            self.seed,
            crate::io::format_float(self.value),
            opt(self.std_error),
        )
    }
}
