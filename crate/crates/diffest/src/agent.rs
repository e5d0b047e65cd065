//! One network node: local learning, request answering, and exploitation
//! of diffused knowledge.
//!
//! Per round, an agent observes one noisy sample of the phenomenon,
//! refreshes its local tuple store, answers the argument requests of its
//! neighbors with its nearest tuple, and issues a request of its own.
//! When queried at an arbitrary point ([`Agent::exploit`]), it reports
//! whichever is tighter: its fresh local evaluation, or the best bound
//! an acquired tuple transports to that point.

use crate::domain::Interval;
use crate::estimator::{self, BoundParams, KernelConfig, Sample};
use crate::tuple_store::{
    nearest_of, AgentId, AppendOutcome, DomainViolation, Round, Tuple, TupleId, TupleStore,
};
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

/// How an agent picks the argument of its per-round request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RequestStrategy {
    /// Draw uniformly over the region of interest.
    Uniform,
    /// Ask where the agent's own exploit bound is currently worst,
    /// evaluated on a uniform grid (ties go to the smallest argument).
    MaxBoundPoint { grid_size: usize },
}

/// Where an exploit answer came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateSource {
    /// The agent's fresh local evaluation.
    Local,
    /// An acquired tuple; `tuple_beta` is the tuple's own radius at its
    /// own argument (the reported bound adds the transport term).
    Acquired { id: TupleId, tuple_beta: f64 },
}

/// Answer to a point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExploitResult {
    pub m_hat: f64,
    /// Certified error bound at the query point; the minimum of the
    /// local radius and every acquired tuple's transported bound.
    pub bound: f64,
    pub source: EstimateSource,
}

impl ExploitResult {
    /// False only for the sentinel returned when the agent knows nothing
    /// at all near the query (empty window and no acquired tuples); the
    /// estimate is then meaningless and `bound` is infinite.
    pub fn usable(&self) -> bool {
        self.bound.is_finite()
    }
}

/// Full per-node state.
#[derive(Debug, Clone)]
pub struct Agent {
    id: AgentId,
    domain: Interval,
    samples: Vec<Sample>,
    local: TupleStore,
    acquired: TupleStore,
    params: BoundParams,
    kernel: KernelConfig,
    strategy: RequestStrategy,
    rng: ChaCha8Rng,
}

impl Agent {
    /// A fresh agent with its own RNG stream.
    ///
    /// `params` and `kernel` are fixed for the agent's lifetime; the
    /// seed should be derived from the scenario seed and the agent id so
    /// behavior is independent of scheduling order.
    pub fn new(
        id: AgentId,
        domain: Interval,
        params: BoundParams,
        kernel: KernelConfig,
        strategy: RequestStrategy,
        seed: u64,
    ) -> Self {
        Self {
            id,
            domain,
            samples: Vec::new(),
            local: TupleStore::new(domain, params.lipschitz),
            acquired: TupleStore::new(domain, params.lipschitz),
            params,
            kernel,
            strategy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn local_store(&self) -> &TupleStore {
        &self.local
    }

    pub fn acquired_store(&self) -> &TupleStore {
        &self.acquired
    }

    pub fn bound_params(&self) -> &BoundParams {
        &self.params
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    /// Ingests one noisy observation made at round `round`.
    ///
    /// The sample is stored, the estimator is evaluated at the sample's
    /// own argument over everything seen so far, and the resulting tuple
    /// joins the local store under the dominance rule. The window always
    /// contains at least the new sample itself, so a tuple is always
    /// formed.
    pub fn observe(&mut self, xi: f64, y: f64, round: Round) -> Result<(), DomainViolation> {
        if !self.domain.contains(xi) {
            return Err(self.violation(xi));
        }
        self.samples.push(Sample { xi, y });
        let ev = estimator::evaluate(xi, &self.samples, &self.kernel, &self.params);
        debug_assert!(ev.kappa >= 1.0, "a sample is always inside its own window");
        if ev.beta.is_finite() {
            let t = Tuple {
                xi,
                mu_hat: ev.mu_hat.expect("finite radius implies an estimate"),
                beta: ev.beta,
                origin: self.id,
                created_at: round,
            };
            self.local.append(t)?;
        }
        Ok(())
    }

    /// The tuple this agent would share in response to a request for
    /// `xi_req`: the nearest-argument entry over both stores, or `None`
    /// when the agent holds nothing yet.
    pub fn answer_request(&self, xi_req: f64) -> Option<Tuple> {
        nearest_of(
            self.local.entries().iter().chain(self.acquired.entries()),
            xi_req,
        )
        .copied()
    }

    /// Ingests a tuple shared by a neighbor.
    ///
    /// Dominance is checked against the union of both stores, so a tuple
    /// the agent already covers locally (its own echo in particular) is
    /// rejected; evictions apply to the acquired store only.
    pub fn receive_tuple(&mut self, t: Tuple) -> Result<AppendOutcome, DomainViolation> {
        if !self.domain.contains(t.xi) {
            return Err(self.violation(t.xi));
        }
        if self
            .local
            .entries()
            .iter()
            .any(|e| e.dominates(&t, self.params.lipschitz))
        {
            return Ok(AppendOutcome::Rejected);
        }
        self.acquired.append(t)
    }

    /// Argument of this round's outgoing request.
    pub fn select_request(&mut self) -> f64 {
        match self.strategy {
            RequestStrategy::Uniform => self.rng.random_range(self.domain.lo()..self.domain.hi()),
            RequestStrategy::MaxBoundPoint { grid_size } => {
                let mut best_x = self.domain.lo();
                let mut best_bound = f64::NEG_INFINITY;
                for x in self.domain.grid(grid_size) {
                    let bound = self
                        .exploit(x)
                        .expect("grid points lie inside the domain")
                        .bound;
                    if bound > best_bound {
                        best_bound = bound;
                        best_x = x;
                    }
                }
                best_x
            }
        }
    }

    /// Point query combining local evaluation with acquired knowledge.
    ///
    /// The local radius at `x` is compared against the transported bound
    /// of every acquired tuple; a tuple is a candidate only when its
    /// transported bound is strictly tighter. The reported bound is the
    /// overall minimum. With an empty window and no acquired tuples the
    /// result is the unusable sentinel (estimate 0, infinite bound).
    pub fn exploit(&self, x: f64) -> Result<ExploitResult, DomainViolation> {
        if !self.domain.contains(x) {
            return Err(self.violation(x));
        }
        let local = estimator::evaluate(x, &self.samples, &self.kernel, &self.params);
        let picked = select_acquired(
            self.acquired.entries(),
            x,
            local.beta,
            self.params.lipschitz,
        );
        match picked {
            Some(t) => Ok(ExploitResult {
                m_hat: t.mu_hat,
                bound: t.transported_bound(x, self.params.lipschitz),
                source: EstimateSource::Acquired {
                    id: t.id(),
                    tuple_beta: t.beta,
                },
            }),
            None => Ok(ExploitResult {
                m_hat: local.mu_hat.unwrap_or(0.0),
                bound: local.beta,
                source: EstimateSource::Local,
            }),
        }
    }

    fn violation(&self, xi: f64) -> DomainViolation {
        DomainViolation {
            xi,
            lo: self.domain.lo(),
            hi: self.domain.hi(),
        }
    }
}

/// Candidate selection for [`Agent::exploit`]: among tuples whose
/// transported bound at `x` is strictly tighter than the local radius,
/// the one with the smallest transported bound; ties go to the smaller
/// argument, then the earlier creation round, then the smaller origin.
fn select_acquired(
    tuples: &[Tuple],
    x: f64,
    beta_local: f64,
    lipschitz: f64,
) -> Option<&Tuple> {
    tuples
        .iter()
        .filter(|t| lipschitz * (x - t.xi).abs() < beta_local - t.beta)
        .min_by(|a, b| {
            a.transported_bound(x, lipschitz)
                .total_cmp(&b.transported_bound(x, lipschitz))
                .then(a.xi.total_cmp(&b.xi))
                .then(a.created_at.cmp(&b.created_at))
                .then(a.origin.cmp(&b.origin))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{BandwidthMode, KernelKind, SearchMethod};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn domain() -> Interval {
        Interval::new(0.0, 10.0).unwrap()
    }

    fn fixed_kernel(h: f64) -> KernelConfig {
        KernelConfig {
            kind: KernelKind::Box,
            bandwidth: BandwidthMode::Fixed { h },
            search: SearchMethod::default(),
        }
    }

    fn optimal_kernel() -> KernelConfig {
        KernelConfig {
            kind: KernelKind::Box,
            bandwidth: BandwidthMode::PerQueryOptimal {
                h_min: 0.05,
                h_max: 2.0,
            },
            search: SearchMethod::default(),
        }
    }

    fn agent(kernel: KernelConfig) -> Agent {
        Agent::new(
            0,
            domain(),
            BoundParams {
                lipschitz: 1.0,
                sigma: 0.3,
                delta: 0.01,
            },
            kernel,
            RequestStrategy::Uniform,
            7,
        )
    }

    fn acquired_tuple(xi: f64, mu_hat: f64, beta: f64, origin: usize) -> Tuple {
        Tuple {
            xi,
            mu_hat,
            beta,
            origin,
            created_at: 1,
        }
    }

    #[test]
    fn first_observation_forms_the_single_sample_tuple() {
        let mut a = agent(fixed_kernel(0.5));
        a.observe(2.0, 5.0, 1).unwrap();
        let snap = a.local_store().snapshot();
        assert_eq!(snap.len(), 1);
        assert_eq!(snap[0].xi, 2.0);
        assert_eq!(snap[0].mu_hat, 5.0);
        assert_eq!(snap[0].created_at, 1);
        // L*h + 2*sigma*sqrt(ln(sqrt(2)/delta)) with one sample in the
        // window; value frozen from a 30-digit evaluation.
        assert_relative_eq!(snap[0].beta, 1.835_150_837_717_036, epsilon = 1e-12);
    }

    #[test]
    fn out_of_domain_observation_is_refused() {
        let mut a = agent(fixed_kernel(0.5));
        assert!(a.observe(-0.1, 1.0, 1).is_err());
        assert!(a.samples().is_empty());
    }

    #[test]
    fn stored_tuples_replay_from_their_sample_prefix() {
        let mut a = agent(optimal_kernel());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut draws = Vec::new();
        for round in 1..=200u64 {
            let xi = rng.random_range(0.0..10.0);
            let y = rng.random_range(-2.0..2.0);
            draws.push(Sample { xi, y });
            a.observe(xi, y, round).unwrap();
        }
        let snap = a.local_store().snapshot();
        assert!(!snap.is_empty());
        for t in snap {
            // One observation per round, so the samples present when the
            // tuple was created are exactly the first `created_at` ones.
            let prefix = &draws[..t.created_at as usize];
            assert_eq!(prefix.last().unwrap().xi, t.xi);
            let ev = estimator::evaluate(t.xi, prefix, a.kernel(), a.bound_params());
            assert_eq!(ev.mu_hat, Some(t.mu_hat));
            assert_eq!(ev.beta, t.beta);
        }
    }

    #[test]
    fn answer_request_spans_both_stores() {
        let mut a = agent(fixed_kernel(0.5));
        a.observe(1.0, 0.0, 1).unwrap();
        a.receive_tuple(acquired_tuple(2.9, 1.0, 0.2, 3)).unwrap();
        let t = a.answer_request(3.0).unwrap();
        assert_eq!(t.xi, 2.9);
        assert_eq!(t.origin, 3);
    }

    #[test]
    fn answer_request_is_silent_with_nothing_to_share() {
        let a = agent(fixed_kernel(0.5));
        assert_eq!(a.answer_request(3.0), None);
    }

    #[test]
    fn answer_request_cross_store_tie_goes_to_smaller_argument() {
        let mut a = agent(fixed_kernel(0.5));
        a.observe(4.0, 0.0, 1).unwrap();
        a.receive_tuple(acquired_tuple(2.0, 1.0, 0.2, 3)).unwrap();
        // Both entries sit at distance 1 from the request.
        let t = a.answer_request(3.0).unwrap();
        assert_eq!(t.xi, 2.0);
    }

    #[test]
    fn received_duplicates_and_dominated_tuples_are_dropped() {
        let mut a = agent(fixed_kernel(0.5));
        let t = acquired_tuple(5.0, 1.0, 0.3, 2);
        assert_eq!(a.receive_tuple(t).unwrap(), AppendOutcome::Inserted);
        assert_eq!(a.receive_tuple(t).unwrap(), AppendOutcome::Rejected);
        // Dominated by the incumbent at distance 0.1.
        let worse = acquired_tuple(5.1, 1.0, 0.5, 4);
        assert_eq!(a.receive_tuple(worse).unwrap(), AppendOutcome::Rejected);
        assert_eq!(a.acquired_store().len(), 1);
        // Strictly tighter at the same argument evicts the incumbent.
        let better = acquired_tuple(5.0, 1.2, 0.1, 4);
        assert_eq!(
            a.receive_tuple(better).unwrap(),
            AppendOutcome::InsertedEvicting(vec![t])
        );
    }

    #[test]
    fn own_echo_is_rejected() {
        let mut a = agent(fixed_kernel(0.5));
        a.observe(2.0, 5.0, 1).unwrap();
        let shared = a.answer_request(2.0).unwrap();
        assert_eq!(shared.origin, a.id());
        // The tuple comes back after a round trip through a neighbor.
        assert_eq!(a.receive_tuple(shared).unwrap(), AppendOutcome::Rejected);
        assert!(a.acquired_store().is_empty());
    }

    #[test]
    fn uniform_requests_stay_inside_the_domain() {
        let mut a = agent(fixed_kernel(0.5));
        for _ in 0..1000 {
            let xi = a.select_request();
            assert!(a.domain().contains(xi));
        }
    }

    #[test]
    fn max_bound_strategy_with_no_knowledge_returns_the_left_edge() {
        let mut a = Agent::new(
            0,
            domain(),
            BoundParams {
                lipschitz: 1.0,
                sigma: 0.3,
                delta: 0.01,
            },
            fixed_kernel(0.5),
            RequestStrategy::MaxBoundPoint { grid_size: 101 },
            7,
        );
        // Infinite bound everywhere; the tie resolves to the smallest x.
        assert_eq!(a.select_request(), 0.0);
    }

    #[test]
    fn max_bound_strategy_asks_far_from_what_it_knows() {
        let mut a = Agent::new(
            0,
            domain(),
            BoundParams {
                lipschitz: 1.0,
                sigma: 0.3,
                delta: 0.01,
            },
            fixed_kernel(0.3),
            RequestStrategy::MaxBoundPoint { grid_size: 101 },
            7,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 1..=50u64 {
            let xi = rng.random_range(4.5..5.5);
            a.observe(xi, 0.0, round).unwrap();
        }
        let asked = a.select_request();
        assert!((asked - 5.0).abs() > 2.0, "asked at {asked}");
    }

    #[test]
    fn exploit_picks_the_tuple_with_the_best_transported_bound() {
        let tuples = [
            acquired_tuple(2.0, 1.5, 0.1, 1),
            acquired_tuple(5.0, 0.3, 0.05, 2),
        ];
        // At x=2.25 with a local radius of 0.8, only the first tuple's
        // transport (0.25) undercuts the margin 0.8 - 0.1.
        let picked = select_acquired(&tuples, 2.25, 0.8, 1.0).unwrap();
        assert_eq!(picked.xi, 2.0);
        assert_eq!(picked.transported_bound(2.25, 1.0), 0.35);
    }

    #[test]
    fn exploit_keeps_the_local_answer_when_no_tuple_is_strictly_tighter() {
        let tuples = [
            acquired_tuple(2.0, 1.5, 0.1, 1),
            acquired_tuple(5.0, 0.3, 0.05, 2),
        ];
        // Local radius 0.2: 0.3 >= 0.2 - 0.1, so no candidate qualifies.
        assert_eq!(select_acquired(&tuples, 2.3, 0.2, 1.0), None);
    }

    #[test]
    fn exploit_defers_to_the_network_when_the_window_is_empty() {
        let mut a = agent(fixed_kernel(0.5));
        a.receive_tuple(acquired_tuple(2.0, 1.5, 0.1, 3)).unwrap();
        let r = a.exploit(4.0).unwrap();
        assert!(r.usable());
        assert_eq!(r.m_hat, 1.5);
        assert_relative_eq!(r.bound, 2.1, epsilon = 1e-12);
        assert!(matches!(r.source, EstimateSource::Acquired { tuple_beta, .. } if tuple_beta == 0.1));
    }

    #[test]
    fn exploit_with_nothing_at_all_is_the_flagged_sentinel() {
        let a = agent(fixed_kernel(0.5));
        let r = a.exploit(4.0).unwrap();
        assert!(!r.usable());
        assert_eq!(r.m_hat, 0.0);
        assert_eq!(r.bound, f64::INFINITY);
        assert_eq!(r.source, EstimateSource::Local);
    }

    #[test]
    fn exploit_rejects_queries_outside_the_domain() {
        let a = agent(fixed_kernel(0.5));
        assert!(a.exploit(10.5).is_err());
    }

    #[test]
    fn exploit_bound_is_the_minimum_over_all_certificates() {
        let mut a = agent(optimal_kernel());
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for round in 1..=60u64 {
            let xi = rng.random_range(0.0..10.0);
            a.observe(xi, rng.random_range(-1.0..1.0), round).unwrap();
        }
        for k in 0..30u64 {
            let t = Tuple {
                xi: rng.random_range(0.0..10.0),
                mu_hat: 0.0,
                beta: rng.random_range(0.05..0.8),
                origin: 1,
                created_at: k,
            };
            let _ = a.receive_tuple(t).unwrap();
        }
        for x in a.domain().grid(41) {
            let r = a.exploit(x).unwrap();
            let local = estimator::evaluate(x, a.samples(), a.kernel(), a.bound_params());
            assert!(r.bound <= local.beta);
            let lipschitz = a.bound_params().lipschitz;
            for t in a.acquired_store().entries() {
                assert!(r.bound <= t.transported_bound(x, lipschitz));
            }
            // A strictly tighter acquired candidate beats the local radius.
            if matches!(r.source, EstimateSource::Acquired { .. }) {
                assert!(r.bound < local.beta);
            }
        }
    }
}
