//! Deterministic simulator and estimation library for diffusion-based
//! non-parametric learning over networks.
//!
//! A set of agents sits on a connected undirected graph. Each agent
//! observes a latent Lipschitz phenomenon through noisy local samples,
//! builds windowed-mean estimates with finite-sample confidence bounds,
//! and diffuses `(argument, estimate, bound)` tuples to its neighbors
//! through a request/share protocol with one-round message latency.
//!
//! The crate is organized around that pipeline:
//!
//! * [`estimator`]: box-kernel estimation, confidence radii, and
//!   per-query bandwidth selection.
//! * [`tuple_store`]: dominance-pruned collections of diffused tuples.
//! * [`agent`]: per-agent state and the observe / answer / select /
//!   exploit operations.
//! * [`graph`] and [`scenario`]: topology generation and scenario
//!   configuration.
//! * [`sim`]: the round-based scheduler.
//! * [`concentration`]: Monte-Carlo checks of the deviation inequalities
//!   the bounds rest on.
//! * [`metrics`], [`io`], [`plot`]: grid reports, CSV/JSON persistence,
//!   and small SVG charts.
//!
//! Every run is a pure function of its configuration: RNG streams are
//! derived per agent from the master seed, so results are byte-identical
//! across repeats and across worker-pool sizes.

pub mod agent;
pub mod concentration;
pub mod domain;
pub mod estimator;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod plot;
mod rng;
pub mod scenario;
pub mod sim;
pub mod tuple_store;

pub use agent::{Agent, EstimateSource, ExploitResult, RequestStrategy};
pub use domain::Interval;
pub use estimator::{BandwidthMode, BoundParams, KernelConfig, KernelKind, LocalEvaluation, Sample, SearchMethod};
pub use graph::{Graph, TopologySpec};
pub use scenario::{ConfigError, ScenarioConfig};
pub use sim::{run, RunOptions, SimError, SimResult};
pub use tuple_store::{Tuple, TupleId, TupleStore};
