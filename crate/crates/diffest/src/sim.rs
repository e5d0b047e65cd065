//! Round-based scheduler: drives observation, message delivery, request
//! selection, and metric collection over a fixed horizon.
//!
//! Each round runs four phases in order:
//!
//! 1. every agent draws one fresh observation and updates its local store;
//! 2. shares sent last round are delivered, ordered by (from, to);
//! 3. requests sent last round are delivered, ordered by (from, to), and
//!    each answer is enqueued as a share for next round;
//! 4. every agent picks a query point and enqueues a request to each
//!    neighbor.
//!
//! Messages therefore always take exactly one round to arrive, and a
//! request costs two rounds end to end: request out at `t`, answered at
//! `t + 1`, tuple usable at `t + 2`.
//!
//! Determinism: all randomness flows through named streams derived from
//! the scenario seed (topology, setup draws, one environment stream and
//! one decision stream per agent), and every parallel step is an
//! index-preserving map, so results are byte-identical across repeated
//! runs and across worker counts.

use crate::agent::Agent;
use crate::domain::Interval;
use crate::estimator::BoundParams;
use crate::graph::{generate_topology, Graph, TopologyError};
use crate::metrics::{collect_evolution, collect_grid, EvolutionRow, GridRow};
use crate::rng::{derive_seed, stream_rng, STREAM_AGENT_BASE, STREAM_ENV_BASE, STREAM_SETUP};
use crate::scenario::{ConfigError, InputConfig, NoiseConfig, ScenarioConfig};
use crate::tuple_store::{AgentId, DomainViolation, Round, Tuple};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

/// Redraw budget for truncated-Gaussian input sampling.
const MAX_REDRAWS: usize = 10_000;

/// Message body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    /// "Tell me about this point."
    Request { xi: f64 },
    /// "Here is my best certificate near your point."
    Share { tuple: Tuple },
}

/// One network message, delivered the round after it was sent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub from: AgentId,
    pub to: AgentId,
    pub send_round: Round,
    pub payload: Payload,
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self.payload {
            Payload::Request { .. } => "request",
            Payload::Share { .. } => "share",
        }
    }

    /// Flat single-line JSON rendering for the message log.
    pub fn log_line(&self) -> String {
        match self.payload {
            Payload::Request { xi } => format!(
                "{{\"kind\":\"request\",\"from\":{},\"to\":{},\"send_round\":{},\"xi\":{}}}",
                self.from, self.to, self.send_round, xi
            ),
            Payload::Share { tuple } => format!(
                "{{\"kind\":\"share\",\"from\":{},\"to\":{},\"send_round\":{},\"xi\":{},\"mu_hat\":{},\"beta\":{},\"origin\":{},\"created_at\":{}}}",
                self.from,
                self.to,
                self.send_round,
                tuple.xi,
                tuple.mu_hat,
                tuple.beta,
                tuple.origin,
                tuple.created_at
            ),
        }
    }
}

fn message_order(a: &Message, b: &Message) -> std::cmp::Ordering {
    (a.send_round, a.from, a.to, a.kind()).cmp(&(b.send_round, b.from, b.to, b.kind()))
}

/// Ran out of redraws without landing inside the region of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{attempts} redraws without landing in the region of interest")]
pub struct SamplerExhausted {
    pub attempts: usize,
}

/// Per-agent explanatory-input distribution: a Gaussian truncated to the
/// region of interest by redraw. A zero dispersion degenerates to the
/// constant mean.
#[derive(Debug, Clone, Copy)]
pub struct InputSampler {
    mean: f64,
    normal: Option<Normal<f64>>,
    domain: Interval,
}

impl InputSampler {
    pub fn new(mean: f64, dispersion: f64, domain: Interval) -> Self {
        let normal = if dispersion == 0.0 {
            None
        } else {
            Some(Normal::new(mean, dispersion).expect("dispersion validated finite and positive"))
        };
        InputSampler {
            mean,
            normal,
            domain,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, SamplerExhausted> {
        for _ in 0..MAX_REDRAWS {
            let v = match &self.normal {
                Some(normal) => normal.sample(rng),
                None => self.mean,
            };
            if self.domain.contains(v) {
                return Ok(v);
            }
        }
        Err(SamplerExhausted {
            attempts: MAX_REDRAWS,
        })
    }
}

/// Per-agent observation-noise distribution.
#[derive(Debug, Clone, Copy)]
pub enum NoiseSampler {
    Gaussian { normal: Normal<f64>, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl NoiseSampler {
    pub fn gaussian(sigma: f64) -> Self {
        NoiseSampler::Gaussian {
            normal: Normal::new(0.0, sigma).expect("sigma validated finite and positive"),
            sigma,
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        NoiseSampler::Uniform { lo, hi }
    }

    /// Sub-Gaussian scale proxy fed into the bound arithmetic: the true
    /// sigma for Gaussian noise, half the support width for bounded noise.
    pub fn sigma_proxy(&self) -> f64 {
        match self {
            NoiseSampler::Gaussian { sigma, .. } => *sigma,
            NoiseSampler::Uniform { lo, hi } => (hi - lo) / 2.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::Gaussian { normal, .. } => normal.sample(rng),
            NoiseSampler::Uniform { lo, hi } => {
                if lo == hi {
                    *lo
                } else {
                    rng.random_range(*lo..*hi)
                }
            }
        }
    }
}

/// Execution knobs that do not affect results.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Rayon worker count; results are identical for any value.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { threads: 1 }
    }
}

/// Anything that can stop a run.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("agent {agent}: input sampling exhausted after {source}")]
    Truncation {
        agent: AgentId,
        source: SamplerExhausted,
    },
    #[error(transparent)]
    Domain(#[from] DomainViolation),
    #[error("worker pool: {0}")]
    WorkerPool(String),
}

/// Everything a finished run produced.
#[derive(Debug)]
pub struct SimResult {
    pub config: ScenarioConfig,
    pub graph: Graph,
    /// Final agent states of the primary run (at the configured delta).
    pub agents: Vec<Agent>,
    pub grid_rows: Vec<GridRow>,
    /// Rows from the primary run plus one same-seed re-run per extra
    /// delta, sorted by (round, agent, delta).
    pub evolution_rows: Vec<EvolutionRow>,
    /// Every message sent during the primary run, ordered by
    /// (send_round, from, to, kind); empty unless logging was enabled.
    pub message_log: Vec<Message>,
}

/// Runs the full scenario: the primary simulation at the configured
/// delta, plus one identically-seeded re-run per extra delta in
/// `metrics.delta_variants` (those contribute evolution rows only —
/// bounds depend on delta, message traffic does not).
pub fn run(config: &ScenarioConfig, opts: &RunOptions) -> Result<SimResult, SimError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| SimError::WorkerPool(e.to_string()))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &ScenarioConfig) -> Result<SimResult, SimError> {
    let primary = run_universe(config, config.delta, true)?;
    let mut evolution_rows = primary.evolution_rows;

    if config.metrics.evolution_every > 0 {
        let mut variants: Vec<f64> = config
            .metrics
            .delta_variants
            .iter()
            .copied()
            .filter(|&d| d != config.delta)
            .collect();
        variants.sort_by(f64::total_cmp);
        variants.dedup();
        for delta in variants {
            let variant = run_universe(config, delta, false)?;
            evolution_rows.extend(variant.evolution_rows);
        }
    }
    evolution_rows.sort_by(|a, b| {
        (a.round, a.agent)
            .cmp(&(b.round, b.agent))
            .then(a.delta.total_cmp(&b.delta))
    });

    Ok(SimResult {
        config: config.clone(),
        graph: primary.graph,
        agents: primary.agents,
        grid_rows: primary.grid_rows,
        evolution_rows,
        message_log: primary.message_log,
    })
}

struct Universe {
    graph: Graph,
    agents: Vec<Agent>,
    grid_rows: Vec<GridRow>,
    evolution_rows: Vec<EvolutionRow>,
    message_log: Vec<Message>,
}

/// Draws one value from `range`, treating a collapsed range as constant.
fn draw_in<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

/// Builds the per-agent samplers. All setup draws come from one dedicated
/// stream in a fixed order (inputs for agents 0..n, then noise for agents
/// 0..n), so the realized world is a pure function of the seed.
fn build_samplers(config: &ScenarioConfig) -> (Vec<InputSampler>, Vec<NoiseSampler>) {
    let n = config.node_count;
    let mut rng = stream_rng(config.seed, STREAM_SETUP);

    let inputs: Vec<InputSampler> = match &config.input {
        InputConfig::GaussianDrawn {
            mean_range,
            dispersion_range,
        } => (0..n)
            .map(|_| {
                let mean = draw_in(&mut rng, *mean_range);
                let dispersion = draw_in(&mut rng, *dispersion_range);
                InputSampler::new(mean, dispersion, config.domain)
            })
            .collect(),
        InputConfig::GaussianPerAgent { means, dispersions } => means
            .iter()
            .zip(dispersions)
            .map(|(&m, &d)| InputSampler::new(m, d, config.domain))
            .collect(),
    };

    let noises: Vec<NoiseSampler> = match &config.noise {
        NoiseConfig::GaussianDrawn { sigma_range } => (0..n)
            .map(|_| {
                // Redraw the rare exact zero: the scale must be positive.
                let sigma = loop {
                    let s = draw_in(&mut rng, *sigma_range);
                    if s > 0.0 {
                        break s;
                    }
                };
                NoiseSampler::gaussian(sigma)
            })
            .collect(),
        NoiseConfig::GaussianPerAgent { sigmas } => {
            sigmas.iter().map(|&s| NoiseSampler::gaussian(s)).collect()
        }
        NoiseConfig::UniformBounded { lo, hi } => vec![NoiseSampler::uniform(*lo, *hi); n],
    };

    (inputs, noises)
}

fn run_universe(config: &ScenarioConfig, delta: f64, full: bool) -> Result<Universe, SimError> {
    let n = config.node_count;
    let graph = generate_topology(&config.topology, n, config.seed)?;
    let (inputs, noises) = build_samplers(config);

    let mut agents: Vec<Agent> = (0..n)
        .map(|k| {
            Agent::new(
                k,
                config.domain,
                BoundParams {
                    lipschitz: config.lipschitz,
                    sigma: noises[k].sigma_proxy(),
                    delta,
                },
                config.kernel,
                config.request_strategy,
                derive_seed(config.seed, STREAM_AGENT_BASE + k as u64),
            )
        })
        .collect();
    let mut env_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|k| stream_rng(config.seed, STREAM_ENV_BASE + k as u64))
        .collect();

    let mut pending: Vec<Message> = Vec::new();
    let mut message_log: Vec<Message> = Vec::new();
    let mut grid_rows: Vec<GridRow> = Vec::new();
    let mut evolution_rows: Vec<EvolutionRow> = Vec::new();

    for round in 1..=config.horizon {
        let inbox = std::mem::take(&mut pending);

        // Phase 1: observe. Each agent draws (input, noise) from its own
        // environment stream and folds the sample into its local store.
        let phenomenon = &config.phenomenon;
        agents
            .par_iter_mut()
            .zip(env_rngs.par_iter_mut())
            .zip(inputs.par_iter().zip(noises.par_iter()))
            .try_for_each(|((agent, env), (input, noise))| {
                let xi = input.sample(env).map_err(|source| SimError::Truncation {
                    agent: agent.id(),
                    source,
                })?;
                let y = phenomenon.eval(xi) + noise.sample(env);
                agent.observe(xi, y, round)?;
                Ok::<(), SimError>(())
            })?;

        // Phase 2: deliver last round's shares, ordered by (from, to).
        let mut shares_for: Vec<Vec<Tuple>> = vec![Vec::new(); n];
        for msg in &inbox {
            if let Payload::Share { tuple } = msg.payload {
                shares_for[msg.to].push(tuple);
            }
        }
        agents
            .par_iter_mut()
            .zip(shares_for.par_iter())
            .try_for_each(|(agent, tuples)| {
                for &tuple in tuples {
                    agent.receive_tuple(tuple)?;
                }
                Ok::<(), SimError>(())
            })?;

        // Phase 3: deliver last round's requests, ordered by (from, to);
        // answers go out as shares this round.
        let mut requests_for: Vec<Vec<(AgentId, f64)>> = vec![Vec::new(); n];
        for msg in &inbox {
            if let Payload::Request { xi } = msg.payload {
                requests_for[msg.to].push((msg.from, xi));
            }
        }
        let answers: Vec<Vec<Message>> = agents
            .par_iter()
            .zip(requests_for.par_iter())
            .map(|(agent, asked)| {
                asked
                    .iter()
                    .filter_map(|&(requester, xi)| {
                        agent.answer_request(xi).map(|tuple| Message {
                            from: agent.id(),
                            to: requester,
                            send_round: round,
                            payload: Payload::Share { tuple },
                        })
                    })
                    .collect()
            })
            .collect();
        pending.extend(answers.into_iter().flatten());

        // Phase 4: every agent broadcasts one request to its neighbors.
        let queries: Vec<f64> = agents
            .par_iter_mut()
            .map(|agent| agent.select_request())
            .collect();
        for (k, &xi) in queries.iter().enumerate() {
            for &neighbor in graph.neighbors(k) {
                pending.push(Message {
                    from: k,
                    to: neighbor,
                    send_round: round,
                    payload: Payload::Request { xi },
                });
            }
        }

        // Fix the delivery (and log) order at the round boundary.
        pending.sort_by(message_order);
        if full && config.log_messages {
            message_log.extend(pending.iter().copied());
        }

        if full && config.metrics.grid_rounds.contains(&round) {
            grid_rows.extend(collect_grid(
                &agents,
                &config.phenomenon,
                config.domain,
                config.metrics.grid_size,
                round,
            ));
        }
        if config.metrics.evolution_every > 0 && round % config.metrics.evolution_every == 0 {
            evolution_rows.extend(collect_evolution(
                &agents,
                config.domain,
                config.metrics.grid_size,
                round,
                delta,
            ));
        }
    }

    Ok(Universe {
        graph,
        agents,
        grid_rows,
        evolution_rows,
        message_log,
    })
}
