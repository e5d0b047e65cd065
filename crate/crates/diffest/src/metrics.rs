//! Evaluation-grid reports: what each agent would answer, and how tight
//! its bounds are, across a uniform grid over the region of interest.

use crate::agent::{Agent, EstimateSource};
use crate::domain::Interval;
use crate::scenario::Phenomenon;
use crate::tuple_store::Round;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Provenance of a reported grid estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    /// Fresh local evaluation.
    Local,
    /// Transported acquired tuple.
    Acquired,
    /// Unusable sentinel: the agent knew nothing near the point.
    None,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceTag::Local => "local",
            SourceTag::Acquired => "acquired",
            SourceTag::None => "none",
        })
    }
}

impl FromStr for SourceTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(SourceTag::Local),
            "acquired" => Ok(SourceTag::Acquired),
            "none" => Ok(SourceTag::None),
            other => Err(format!("unknown source tag {other:?}")),
        }
    }
}

/// One agent's answer at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub round: Round,
    pub agent: usize,
    pub x: f64,
    pub m_true: f64,
    pub m_hat: f64,
    /// Certified error bound; infinite on unusable rows.
    pub bound: f64,
    pub source: SourceTag,
    /// `|m_hat - m_true|`; NaN on unusable rows.
    pub abs_error: f64,
}

/// Aggregate tightness of one agent's bounds at one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionRow {
    pub round: Round,
    pub agent: usize,
    /// Failure probability this run's bounds were computed under.
    pub delta: f64,
    pub mean_bound: f64,
    pub max_bound: f64,
}

/// Evaluates every agent's exploit answer on a uniform grid.
pub fn collect_grid(
    agents: &[Agent],
    phenomenon: &Phenomenon,
    domain: Interval,
    grid_size: usize,
    round: Round,
) -> Vec<GridRow> {
    let grid = domain.grid(grid_size);
    agents
        .par_iter()
        .map(|agent| {
            grid.iter()
                .map(|&x| {
                    let r = agent.exploit(x).expect("grid points lie inside the domain");
                    let m_true = phenomenon.eval(x);
                    let (source, abs_error) = if r.usable() {
                        let tag = match r.source {
                            EstimateSource::Local => SourceTag::Local,
                            EstimateSource::Acquired { .. } => SourceTag::Acquired,
                        };
                        (tag, (r.m_hat - m_true).abs())
                    } else {
                        (SourceTag::None, f64::NAN)
                    };
                    GridRow {
                        round,
                        agent: agent.id(),
                        x,
                        m_true,
                        m_hat: r.m_hat,
                        bound: r.bound,
                        source,
                        abs_error,
                    }
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect()
}

/// Mean and max exploit bound per agent over the grid; any infinite
/// point makes both aggregates infinite for that agent.
pub fn collect_evolution(
    agents: &[Agent],
    domain: Interval,
    grid_size: usize,
    round: Round,
    delta: f64,
) -> Vec<EvolutionRow> {
    let grid = domain.grid(grid_size);
    agents
        .par_iter()
        .map(|agent| {
            let mut sum = 0.0;
            let mut max = f64::NEG_INFINITY;
            for &x in &grid {
                let bound = agent
                    .exploit(x)
                    .expect("grid points lie inside the domain")
                    .bound;
                sum += bound;
                max = max.max(bound);
            }
            EvolutionRow {
                round,
                agent: agent.id(),
                delta,
                mean_bound: sum / grid.len() as f64,
                max_bound: max,
            }
        })
        .collect()
}
