//! Connected undirected topologies and their generators.

use crate::rng::{stream_rng, STREAM_TOPOLOGY};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Connected undirected graph held as sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds and validates a graph from an edge list.
    ///
    /// Duplicate edges collapse; self-loops, out-of-range endpoints, and
    /// disconnected results are rejected.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::Empty);
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(i, j) in edges {
            if i == j {
                return Err(TopologyError::SelfLoop { node: i });
            }
            if i >= node_count || j >= node_count {
                return Err(TopologyError::NodeOutOfRange {
                    node: i.max(j),
                    node_count,
                });
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let g = Self { adjacency };
        if !g.is_connected() {
            return Err(TopologyError::Disconnected);
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Neighbors of `node` in ascending id order.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Edge list with `i < j`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, neighbors) in self.adjacency.iter().enumerate() {
            for &j in neighbors {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }
}

/// Topology family of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    /// Nodes placed i.i.d. uniform on the unit square, an edge whenever
    /// the Euclidean distance is at most `radius`; placements are
    /// resampled until the graph is connected.
    RandomGeometric {
        radius: f64,
        #[serde(default = "default_max_attempts")]
        max_attempts: usize,
    },
    /// Every unordered pair becomes an edge independently with
    /// probability `edge_prob`; resampled until connected.
    ErdosRenyi {
        edge_prob: f64,
        #[serde(default = "default_max_attempts")]
        max_attempts: usize,
    },
    /// A fixed, user-supplied edge list.
    Explicit { edges: Vec<(usize, usize)> },
}

fn default_max_attempts() -> usize {
    1000
}

/// Why a topology could not be produced.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("a topology needs at least one node")]
    Empty,
    #[error("self-loop at node {node}")]
    SelfLoop { node: usize },
    #[error("edge endpoint {node} out of range for {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("no connected graph found within {attempts} attempts")]
    Unconnectable { attempts: usize },
}

/// Draws a connected topology, deterministically in `seed`.
pub fn generate_topology(
    spec: &TopologySpec,
    node_count: usize,
    seed: u64,
) -> Result<Graph, TopologyError> {
    let mut rng = stream_rng(seed, STREAM_TOPOLOGY);
    match *spec {
        TopologySpec::RandomGeometric {
            radius,
            max_attempts,
        } => {
            for _ in 0..max_attempts {
                let positions: Vec<(f64, f64)> = (0..node_count)
                    .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
                    .collect();
                let mut edges = Vec::new();
                for i in 0..node_count {
                    for j in (i + 1)..node_count {
                        let dx = positions[i].0 - positions[j].0;
                        let dy = positions[i].1 - positions[j].1;
                        if dx * dx + dy * dy <= radius * radius {
                            edges.push((i, j));
                        }
                    }
                }
                match Graph::new(node_count, &edges) {
                    Ok(g) => return Ok(g),
                    Err(TopologyError::Disconnected) => continue,
                    Err(other) => return Err(other),
                }
            }
            Err(TopologyError::Unconnectable {
                attempts: max_attempts,
            })
        }
        TopologySpec::ErdosRenyi {
            edge_prob,
            max_attempts,
        } => {
            for _ in 0..max_attempts {
                let mut edges = Vec::new();
                for i in 0..node_count {
                    for j in (i + 1)..node_count {
                        if rng.random::<f64>() < edge_prob {
                            edges.push((i, j));
                        }
                    }
                }
                match Graph::new(node_count, &edges) {
                    Ok(g) => return Ok(g),
                    Err(TopologyError::Disconnected) => continue,
                    Err(other) => return Err(other),
                }
            }
            Err(TopologyError::Unconnectable {
                attempts: max_attempts,
            })
        }
        TopologySpec::Explicit { ref edges } => Graph::new(node_count, edges),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes_with_a_wide_radius_always_connect() {
        let spec = TopologySpec::RandomGeometric {
            radius: 2.0,
            max_attempts: 1,
        };
        let g = generate_topology(&spec, 2, 7).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let spec = TopologySpec::RandomGeometric {
            radius: 0.25,
            max_attempts: 1000,
        };
        let a = generate_topology(&spec, 50, 7).unwrap();
        let b = generate_topology(&spec, 50, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_topology(&spec, 50, 8).unwrap();
        // Different seeds virtually never agree on the full edge set.
        assert_ne!(a, c);
    }

    #[test]
    fn generated_graphs_are_connected_and_symmetric() {
        for seed in 0..5 {
            let spec = TopologySpec::RandomGeometric {
                radius: 0.3,
                max_attempts: 1000,
            };
            let g = generate_topology(&spec, 30, seed).unwrap();
            assert!(g.is_connected());
            for i in 0..g.node_count() {
                for &j in g.neighbors(i) {
                    assert!(g.neighbors(j).contains(&i));
                    assert_ne!(i, j);
                }
            }
        }
    }

    #[test]
    fn tiny_radius_exhausts_the_retry_budget() {
        let spec = TopologySpec::RandomGeometric {
            radius: 1e-6,
            max_attempts: 5,
        };
        let err = generate_topology(&spec, 20, 7).unwrap_err();
        assert_eq!(err, TopologyError::Unconnectable { attempts: 5 });
    }

    #[test]
    fn erdos_renyi_with_certain_edges_is_complete() {
        let spec = TopologySpec::ErdosRenyi {
            edge_prob: 1.0,
            max_attempts: 1,
        };
        let g = generate_topology(&spec, 5, 7).unwrap();
        for i in 0..5 {
            assert_eq!(g.degree(i), 4);
        }
    }

    #[test]
    fn explicit_edge_lists_are_validated() {
        assert!(Graph::new(3, &[(0, 1), (1, 2)]).is_ok());
        assert_eq!(
            Graph::new(3, &[(0, 1)]).unwrap_err(),
            TopologyError::Disconnected
        );
        assert_eq!(
            Graph::new(3, &[(0, 0), (1, 2)]).unwrap_err(),
            TopologyError::SelfLoop { node: 0 }
        );
        assert_eq!(
            Graph::new(3, &[(0, 5), (1, 2)]).unwrap_err(),
            TopologyError::NodeOutOfRange {
                node: 5,
                node_count: 3
            }
        );
        // Duplicate edges collapse to one.
        let g = Graph::new(2, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn star_graphs_have_the_expected_degrees() {
        let edges: Vec<(usize, usize)> = (1..6).map(|leaf| (0, leaf)).collect();
        let g = Graph::new(6, &edges).unwrap();
        assert_eq!(g.degree(0), 5);
        for leaf in 1..6 {
            assert_eq!(g.degree(leaf), 1);
            assert_eq!(g.neighbors(leaf), &[0]);
        }
    }
}
