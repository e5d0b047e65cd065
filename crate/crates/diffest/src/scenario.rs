//! Scenario configuration: what the network looks like, what it
//! measures, and how the run is reported.
//!
//! A [`ScenarioConfig`] is a complete, self-contained description of one
//! experiment; together with the master seed it determines every byte of
//! output. Configs are validated eagerly with field-precise diagnostics
//! before anything runs.

use crate::agent::RequestStrategy;
use crate::domain::Interval;
use crate::estimator::{BandwidthMode, KernelConfig};
use crate::graph::TopologySpec;
use serde::{Deserialize, Serialize};

/// The latent function agents learn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Phenomenon {
    /// `amplitude * sin(x) * exp(rate * x) + offset`.
    SinExpOffset {
        amplitude: f64,
        rate: f64,
        offset: f64,
    },
    /// Piecewise-linear interpolation through `(x, y)` points with
    /// strictly increasing `x`; constant extension outside the table.
    TabulatedLipschitz { points: Vec<(f64, f64)> },
}

impl Phenomenon {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Phenomenon::SinExpOffset {
                amplitude,
                rate,
                offset,
            } => amplitude * x.sin() * (rate * x).exp() + offset,
            Phenomenon::TabulatedLipschitz { points } => {
                debug_assert!(!points.is_empty());
                if x <= points[0].0 {
                    return points[0].1;
                }
                let last = points[points.len() - 1];
                if x >= last.0 {
                    return last.1;
                }
                let i = points.partition_point(|p| p.0 <= x);
                let (x0, y0) = points[i - 1];
                let (x1, y1) = points[i];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Largest observed slope over the domain: exact segment slopes for
    /// a table (restricted to segments overlapping the domain), dense
    /// grid secants otherwise. Used to check the declared Lipschitz
    /// constant at load time.
    pub fn max_observed_slope(&self, domain: Interval) -> f64 {
        match self {
            Phenomenon::SinExpOffset { .. } => {
                let grid = domain.grid(10_001);
                grid.windows(2)
                    .map(|w| ((self.eval(w[1]) - self.eval(w[0])) / (w[1] - w[0])).abs())
                    .fold(0.0, f64::max)
            }
            Phenomenon::TabulatedLipschitz { points } => points
                .windows(2)
                .filter(|w| w[1].0 >= domain.lo() && w[0].0 <= domain.hi())
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Observation-noise model; all variants are sub-Gaussian with a known
/// scale that agents use in their bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    /// Gaussian noise; each agent's standard deviation is drawn once at
    /// setup, uniformly from `sigma_range` (a zero draw is redrawn so
    /// the scale stays strictly positive).
    GaussianDrawn { sigma_range: [f64; 2] },
    /// Gaussian noise with one fixed standard deviation per agent.
    GaussianPerAgent { sigmas: Vec<f64> },
    /// Uniform noise on `[lo, hi)`, centered by the caller's choice of
    /// bounds; the sub-Gaussian proxy is `(hi - lo)/2`.
    UniformBounded { lo: f64, hi: f64 },
}

/// Where each agent's explanatory inputs come from: a per-agent Gaussian
/// truncated to the domain by redraw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    /// Per-agent mean and dispersion drawn once at setup, uniformly
    /// from the given ranges.
    GaussianDrawn {
        mean_range: [f64; 2],
        dispersion_range: [f64; 2],
    },
    /// Explicit per-agent means and dispersions. A zero dispersion
    /// degenerates to a constant input.
    GaussianPerAgent {
        means: Vec<f64>,
        dispersions: Vec<f64>,
    },
}

/// What gets measured and when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Evaluation grid resolution over the domain.
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Rounds at which a full grid report is captured.
    #[serde(default)]
    pub grid_rounds: Vec<u64>,
    /// Capture bound-evolution rows every this many rounds; 0 disables.
    #[serde(default)]
    pub evolution_every: u64,
    /// Additional failure probabilities to track bound evolution under;
    /// each is realized as an independent same-seed run.
    #[serde(default)]
    pub delta_variants: Vec<f64>,
}

fn default_grid_size() -> usize {
    101
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            grid_size: default_grid_size(),
            grid_rounds: Vec::new(),
            evolution_every: 0,
            delta_variants: Vec::new(),
        }
    }
}

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub node_count: usize,
    /// Number of synchronous rounds.
    pub horizon: u64,
    /// Region of interest.
    pub domain: Interval,
    /// Per-query failure probability of the confidence bounds.
    pub delta: f64,
    /// Declared Lipschitz constant of the phenomenon.
    pub lipschitz: f64,
    /// Master seed; all randomness derives from it.
    pub seed: u64,
    pub phenomenon: Phenomenon,
    pub topology: TopologySpec,
    pub input: InputConfig,
    pub noise: NoiseConfig,
    pub kernel: KernelConfig,
    pub request_strategy: RequestStrategy,
    pub metrics: MetricsConfig,
    /// Record every message for the structural privacy scan.
    pub log_messages: bool,
    /// Emit best-effort SVG charts next to the CSV files.
    pub emit_plots: bool,
}

/// Why a configuration was refused.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// A present field with an out-of-range or inconsistent value.
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    /// Malformed or unknown-key input, with source position.
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl ScenarioConfig {
    /// The shipped default experiment: 50 nodes on a random geometric
    /// topology learn `sin(x)exp(-0.2x) + 3` over `[0, 10]` for 1000
    /// rounds at `delta = 0.01`, with per-query-optimal bandwidth and
    /// uniform requests.
    pub fn reference_default() -> Self {
        Self {
            node_count: 50,
            horizon: 1000,
            domain: Interval::new(0.0, 10.0).expect("static bounds"),
            delta: 0.01,
            lipschitz: 1.0,
            seed: 7,
            phenomenon: Phenomenon::SinExpOffset {
                amplitude: 1.0,
                rate: -0.2,
                offset: 3.0,
            },
            topology: TopologySpec::RandomGeometric {
                radius: 0.25,
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
                kind: crate::estimator::KernelKind::Box,
                bandwidth: BandwidthMode::PerQueryOptimal {
                    h_min: 0.05,
                    h_max: 2.0,
                },
                search: crate::estimator::SearchMethod::ExactBreakpoints,
            },
            request_strategy: RequestStrategy::Uniform,
            metrics: MetricsConfig {
                grid_size: 101,
                grid_rounds: vec![100, 500, 1000],
                evolution_every: 50,
                delta_variants: vec![0.001, 0.000_1],
            },
            log_messages: true,
            emit_plots: true,
        }
    }

    /// Parses a JSON document, rejecting unknown keys and reporting
    /// missing or out-of-range fields by name.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let config = raw.finalize()?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Full semantic validation; returns the first offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_count < 2 {
            return Err(invalid("node_count", "must be at least 2"));
        }
        if self.horizon < 1 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0,1)"));
        }
        if !(self.lipschitz.is_finite() && self.lipschitz >= 0.0) {
            return Err(invalid("lipschitz", "must be finite and nonnegative"));
        }
        self.validate_phenomenon()?;
        self.validate_topology()?;
        self.validate_input()?;
        self.validate_noise()?;
        self.validate_kernel()?;
        if let RequestStrategy::MaxBoundPoint { grid_size } = self.request_strategy {
            if grid_size < 2 {
                return Err(invalid("request_strategy", "grid_size must be at least 2"));
            }
        }
        self.validate_metrics()?;
        Ok(())
    }

    fn validate_phenomenon(&self) -> Result<(), ConfigError> {
        match &self.phenomenon {
            Phenomenon::SinExpOffset {
                amplitude,
                rate,
                offset,
            } => {
                if ![*amplitude, *rate, *offset].iter().all(|v| v.is_finite()) {
                    return Err(invalid("phenomenon", "parameters must be finite"));
                }
            }
            Phenomenon::TabulatedLipschitz { points } => {
                if points.is_empty() {
                    return Err(invalid("phenomenon", "needs at least one point"));
                }
                if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(invalid("phenomenon", "points must be finite"));
                }
                if points.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(invalid("phenomenon", "points must have strictly increasing x"));
                }
            }
        }
        let slope = self.phenomenon.max_observed_slope(self.domain);
        if slope > self.lipschitz {
            return Err(invalid(
                "phenomenon",
                format!(
                    "observed slope {slope} on the domain exceeds the declared Lipschitz constant {}",
                    self.lipschitz
                ),
            ));
        }
        Ok(())
    }

    fn validate_topology(&self) -> Result<(), ConfigError> {
        match &self.topology {
            TopologySpec::RandomGeometric {
                radius,
                max_attempts,
            } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("topology", "radius must be positive and finite"));
                }
                if *max_attempts < 1 {
                    return Err(invalid("topology", "max_attempts must be at least 1"));
                }
            }
            TopologySpec::ErdosRenyi {
                edge_prob,
                max_attempts,
            } => {
                if !(edge_prob.is_finite() && *edge_prob > 0.0 && *edge_prob <= 1.0) {
                    return Err(invalid("topology", "edge_prob must lie in (0,1]"));
                }
                if *max_attempts < 1 {
                    return Err(invalid("topology", "max_attempts must be at least 1"));
                }
            }
            TopologySpec::Explicit { edges } => {
                for &(i, j) in edges {
                    if i == j {
                        return Err(invalid("topology", format!("self-loop at node {i}")));
                    }
                    if i >= self.node_count || j >= self.node_count {
                        return Err(invalid(
                            "topology",
                            format!("edge ({i}, {j}) exceeds node_count {}", self.node_count),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_input(&self) -> Result<(), ConfigError> {
        match &self.input {
            InputConfig::GaussianDrawn {
                mean_range,
                dispersion_range,
            } => {
                if !(mean_range.iter().all(|v| v.is_finite()) && mean_range[0] <= mean_range[1]) {
                    return Err(invalid("input", "mean_range must be finite with lo <= hi"));
                }
                if !(dispersion_range.iter().all(|v| v.is_finite())
                    && 0.0 <= dispersion_range[0]
                    && dispersion_range[0] <= dispersion_range[1])
                {
                    return Err(invalid(
                        "input",
                        "dispersion_range must be finite with 0 <= lo <= hi",
                    ));
                }
            }
            InputConfig::GaussianPerAgent { means, dispersions } => {
                if means.len() != self.node_count || dispersions.len() != self.node_count {
                    return Err(invalid(
                        "input",
                        format!("needs exactly node_count = {} means and dispersions", self.node_count),
                    ));
                }
                if means.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("input", "means must be finite"));
                }
                if dispersions.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(invalid("input", "dispersions must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    fn validate_noise(&self) -> Result<(), ConfigError> {
        match &self.noise {
            NoiseConfig::GaussianDrawn { sigma_range } => {
                if !(sigma_range.iter().all(|v| v.is_finite())
                    && 0.0 <= sigma_range[0]
                    && sigma_range[0] < sigma_range[1])
                {
                    return Err(invalid("noise", "sigma_range must be finite with 0 <= lo < hi"));
                }
            }
            NoiseConfig::GaussianPerAgent { sigmas } => {
                if sigmas.len() != self.node_count {
                    return Err(invalid(
                        "noise",
                        format!("needs exactly node_count = {} sigmas", self.node_count),
                    ));
                }
                if sigmas.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(invalid("noise", "sigmas must be finite and positive"));
                }
            }
            NoiseConfig::UniformBounded { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid("noise", "bounds must be finite with lo < hi"));
                }
            }
        }
        Ok(())
    }

    fn validate_kernel(&self) -> Result<(), ConfigError> {
        match self.kernel.bandwidth {
            BandwidthMode::Fixed { h } => {
                if !(h.is_finite() && h > 0.0) {
                    return Err(invalid("kernel", "fixed bandwidth h must be positive and finite"));
                }
            }
            BandwidthMode::PerQueryOptimal { h_min, h_max } => {
                if !(h_min.is_finite() && h_max.is_finite() && h_min > 0.0 && h_min < h_max) {
                    return Err(invalid("kernel", "bandwidth range requires 0 < h_min < h_max"));
                }
            }
        }
        Ok(())
    }

    fn validate_metrics(&self) -> Result<(), ConfigError> {
        if self.metrics.grid_size < 2 {
            return Err(invalid("metrics", "grid_size must be at least 2"));
        }
        if let Some(r) = self
            .metrics
            .grid_rounds
            .iter()
            .find(|&&r| r < 1 || r > self.horizon)
        {
            return Err(invalid(
                "metrics",
                format!("grid_rounds entry {r} must lie in [1, horizon = {}]", self.horizon),
            ));
        }
        if let Some(d) = self
            .metrics
            .delta_variants
            .iter()
            .find(|&&d| !(d.is_finite() && d > 0.0 && d < 1.0))
        {
            return Err(invalid(
                "metrics",
                format!("delta_variants entry {d} must lie in (0,1)"),
            ));
        }
        Ok(())
    }
}

/// Mirror of [`ScenarioConfig`] with every field optional, so absent
/// required fields surface by name instead of as a generic parse error.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarioConfig {
    node_count: Option<usize>,
    horizon: Option<u64>,
    domain: Option<Interval>,
    delta: Option<f64>,
    lipschitz: Option<f64>,
    seed: Option<u64>,
    phenomenon: Option<Phenomenon>,
    topology: Option<TopologySpec>,
    input: Option<InputConfig>,
    noise: Option<NoiseConfig>,
    kernel: Option<KernelConfig>,
    request_strategy: Option<RequestStrategy>,
    metrics: Option<MetricsConfig>,
    log_messages: Option<bool>,
    emit_plots: Option<bool>,
}

impl RawScenarioConfig {
    fn finalize(self) -> Result<ScenarioConfig, ConfigError> {
        fn require<T>(v: Option<T>, field: &str) -> Result<T, ConfigError> {
            v.ok_or_else(|| invalid(field, "required"))
        }
        Ok(ScenarioConfig {
            node_count: require(self.node_count, "node_count")?,
            horizon: require(self.horizon, "horizon")?,
            domain: require(self.domain, "domain")?,
            delta: require(self.delta, "delta")?,
            lipschitz: require(self.lipschitz, "lipschitz")?,
            seed: require(self.seed, "seed")?,
            phenomenon: require(self.phenomenon, "phenomenon")?,
            topology: require(self.topology, "topology")?,
            input: require(self.input, "input")?,
            noise: require(self.noise, "noise")?,
            kernel: require(self.kernel, "kernel")?,
            request_strategy: self.request_strategy.unwrap_or(RequestStrategy::Uniform),
            metrics: self.metrics.unwrap_or_default(),
            log_messages: self.log_messages.unwrap_or(false),
            emit_plots: self.emit_plots.unwrap_or(false),
        })
    }
}
