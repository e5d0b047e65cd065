//! Dominance-pruned collections of diffused estimate tuples.
//!
//! A [`Tuple`] certifies, at its own argument, an estimate with a finite
//! confidence radius. Through the Lipschitz constant it also certifies a
//! bound at any other point: the transported bound `beta + L*|x - xi|`.
//! A tuple whose own bound is matched or beaten by another tuple's
//! transported bound carries no information and is eliminated; a store
//! therefore never holds a dominated entry.

use crate::domain::Interval;
use serde::{Deserialize, Serialize};

/// Identifier of an agent in the network.
pub type AgentId = usize;

/// Round counter of the scheduler (1-based).
pub type Round = u64;

/// The payload diffused through the network: an argument, the estimate
/// there, and its confidence radius, plus provenance metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuple {
    pub xi: f64,
    pub mu_hat: f64,
    /// Finite and strictly positive; evaluations with an empty window
    /// are never packaged into tuples.
    pub beta: f64,
    pub origin: AgentId,
    pub created_at: Round,
}

impl Tuple {
    /// Stable identity: creator and creation round.
    pub fn id(&self) -> TupleId {
        TupleId {
            origin: self.origin,
            created_at: self.created_at,
        }
    }

    /// Bound this tuple certifies at `x`: `beta + L*|x - xi|`.
    pub fn transported_bound(&self, x: f64, lipschitz: f64) -> f64 {
        self.beta + lipschitz * (x - self.xi).abs()
    }

    /// Whether this tuple makes `other` redundant: its transported bound
    /// at `other`'s argument is no worse than `other`'s own radius.
    pub fn dominates(&self, other: &Tuple, lipschitz: f64) -> bool {
        self.transported_bound(other.xi, lipschitz) <= other.beta
    }
}

/// Stable identity of a tuple across stores and hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TupleId {
    pub origin: AgentId,
    pub created_at: Round,
}

/// Raised when a tuple's argument falls outside the region of interest.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("argument {xi} lies outside the region of interest [{lo}, {hi}]")]
pub struct DomainViolation {
    pub xi: f64,
    pub lo: f64,
    pub hi: f64,
}

/// What an append did to the store.
#[derive(Debug, Clone, PartialEq)]
pub enum AppendOutcome {
    /// Kept, nothing removed.
    Inserted,
    /// Discarded: an incumbent certifies at least as tight a bound at
    /// the candidate's argument. Equality goes to the incumbent, which
    /// makes appends idempotent.
    Rejected,
    /// Kept, and these previously stored entries became redundant.
    InsertedEvicting(Vec<Tuple>),
}

/// Tuple collection kept free of dominated entries, sorted by argument.
#[derive(Debug, Clone)]
pub struct TupleStore {
    entries: Vec<Tuple>,
    domain: Interval,
    lipschitz: f64,
    capacity: Option<usize>,
}

impl TupleStore {
    pub fn new(domain: Interval, lipschitz: f64) -> Self {
        Self {
            entries: Vec::new(),
            domain,
            lipschitz,
            capacity: None,
        }
    }

    /// Store that never grows beyond `capacity` entries; when dominance
    /// alone does not keep it within budget, the loosest radius goes.
    pub fn with_capacity(domain: Interval, lipschitz: f64, capacity: usize) -> Self {
        assert!(capacity >= 1, "a bounded store needs room for one entry");
        Self {
            entries: Vec::new(),
            domain,
            lipschitz,
            capacity: Some(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Entries in ascending argument order.
    pub fn entries(&self) -> &[Tuple] {
        &self.entries
    }

    /// Owned copy of the entries in ascending argument order.
    pub fn snapshot(&self) -> Vec<Tuple> {
        self.entries.clone()
    }

    /// Inserts under the dominance rule.
    ///
    /// If any incumbent dominates the candidate (ties included), the
    /// candidate is rejected; otherwise it is inserted and every
    /// incumbent it dominates is evicted. A bounded store that still
    /// exceeds capacity afterwards evicts the entry with the largest
    /// radius, which may be the candidate itself.
    pub fn append(&mut self, t: Tuple) -> Result<AppendOutcome, DomainViolation> {
        if !self.domain.contains(t.xi) {
            return Err(DomainViolation {
                xi: t.xi,
                lo: self.domain.lo(),
                hi: self.domain.hi(),
            });
        }
        debug_assert!(t.beta.is_finite() && t.beta > 0.0);

        if self.entries.iter().any(|e| e.dominates(&t, self.lipschitz)) {
            return Ok(AppendOutcome::Rejected);
        }
        let mut evicted = Vec::new();
        self.entries.retain(|e| {
            if t.dominates(e, self.lipschitz) {
                evicted.push(*e);
                false
            } else {
                true
            }
        });
        let pos = self.entries.partition_point(|e| e.xi < t.xi);
        self.entries.insert(pos, t);

        // Dominance evictions can only shrink the store, so a capacity
        // overflow implies none happened and exactly one entry must go.
        if let Some(cap) = self.capacity {
            if self.entries.len() > cap {
                debug_assert!(evicted.is_empty());
                let worst = self
                    .entries
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        a.beta
                            .total_cmp(&b.beta)
                            .then(a.xi.total_cmp(&b.xi))
                            .then(a.created_at.cmp(&b.created_at))
                    })
                    .map(|(i, _)| i)
                    .expect("store is non-empty here");
                let gone = self.entries.remove(worst);
                if gone.id() == t.id() && gone.xi == t.xi {
                    return Ok(AppendOutcome::Rejected);
                }
                return Ok(AppendOutcome::InsertedEvicting(vec![gone]));
            }
        }
        if evicted.is_empty() {
            Ok(AppendOutcome::Inserted)
        } else {
            Ok(AppendOutcome::InsertedEvicting(evicted))
        }
    }

    /// Entry with the argument closest to `xi_req`, or `None` when the
    /// store is empty. Ties break toward the smaller argument, then the
    /// earlier creation round, then the smaller origin id.
    pub fn nearest(&self, xi_req: f64) -> Option<&Tuple> {
        nearest_of(self.entries.iter(), xi_req)
    }
}

/// Nearest-argument selection over any tuple sequence, e.g. the merged
/// view of an agent's local and acquired stores. Tie order: smaller
/// distance, then smaller argument, then earlier creation round, then
/// smaller origin id.
pub fn nearest_of<'a, I>(tuples: I, xi_req: f64) -> Option<&'a Tuple>
where
    I: IntoIterator<Item = &'a Tuple>,
{
    tuples.into_iter().min_by(|a, b| {
        (a.xi - xi_req)
            .abs()
            .total_cmp(&(b.xi - xi_req).abs())
            .then(a.xi.total_cmp(&b.xi))
            .then(a.created_at.cmp(&b.created_at))
            .then(a.origin.cmp(&b.origin))
    })
}
