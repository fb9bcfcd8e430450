//! Directed capacitated networks whose nodes either replicate traffic or
//! generate it.
//!
//! Capacities and flows are rates in bits per pixel (bpp) per unit time. A
//! relay conserves flow; a generative node may emit more than it receives as
//! long as it receives at least its `f_min`.

mod maxflow;
mod spec;
mod validate;

use std::collections::HashMap;

use thiserror::Error;

use crate::Scalar;

pub use maxflow::{baseline_max_flow, max_flow, max_flow_with_cut, CutResult, MaxFlow};
pub use spec::{EdgeSpec, NodeSpec, RoleName, TopologySpec};
pub use validate::{validate_flow, NodeCheck, ValidationReport, Violation};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edges[{index}]: duplicate edge ({from}, {to})")]
    DuplicateEdge {
        index: usize,
        from: String,
        to: String,
    },
    #[error("edges[{index}]: self-loop on `{node}`")]
    SelfLoop { index: usize, node: String },
    #[error("edges[{index}] ({from}, {to}): capacity {capacity} must be finite and >= 0")]
    InvalidCapacity {
        index: usize,
        from: String,
        to: String,
        capacity: f64,
    },
    #[error("topology needs exactly one {role} node, found {count}")]
    RoleCount { role: &'static str, count: usize },
    #[error("node `{id}`: {reason}")]
    InvalidRole { id: String, reason: String },
    #[error("source and sink are the same node `{0}`")]
    SameTerminal(String),
    #[error("node `{id}` is not the {expected}")]
    RoleMismatch { id: String, expected: &'static str },
    #[error("flow assignment has {actual} entries, topology has {expected} edges")]
    FlowShape { expected: usize, actual: usize },
    #[error("malformed topology JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// What a node does with the traffic passing through it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeRole<F> {
    Source,
    Sink,
    Relay,
    /// `f_min` is the smallest in-flow the generator can work from;
    /// `generation_cap` bounds the rate it can produce content at.
    Generative {
        f_min: F,
        generation_cap: Option<F>,
    },
}

impl<F> NodeRole<F> {
    pub fn name(&self) -> &'static str {
        match self {
            NodeRole::Source => "source",
            NodeRole::Sink => "sink",
            NodeRole::Relay => "relay",
            NodeRole::Generative { .. } => "generative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<F> {
    pub id: String,
    pub role: NodeRole<F>,
}

/// Edge between two node indices of the owning topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<F> {
    pub from: usize,
    pub to: usize,
    pub capacity: F,
}

/// A validated network: unique ids, one source, one sink, no self-loops,
/// no parallel edges and finite non-negative capacities.
#[derive(Debug, Clone)]
pub struct NetworkTopology<F> {
    nodes: Vec<Node<F>>,
    edges: Vec<Edge<F>>,
    index: HashMap<String, usize>,
    pairs: HashMap<(usize, usize), usize>,
    source: usize,
    sink: usize,
}

impl<F: Scalar> NetworkTopology<F> {
    pub fn new<S, T>(nodes: Vec<(S, NodeRole<F>)>, edges: Vec<(T, T, F)>) -> Result<Self, FlowError>
    where
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut index = HashMap::with_capacity(nodes.len());
        let mut out_nodes = Vec::with_capacity(nodes.len());
        for (id, role) in nodes {
            let id = id.into();
            check_role(&id, &role)?;
            if index.insert(id.clone(), out_nodes.len()).is_some() {
                return Err(FlowError::DuplicateNode(id));
            }
            out_nodes.push(Node { id, role });
        }

        let find_role = |wanted: &'static str| {
            let hits: Vec<usize> = out_nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.role.name() == wanted)
                .map(|(i, _)| i)
                .collect();
            if hits.len() == 1 {
                Ok(hits[0])
            } else {
                Err(FlowError::RoleCount {
                    role: wanted,
                    count: hits.len(),
                })
            }
        };
        let source = find_role("source")?;
        let sink = find_role("sink")?;

        let mut pairs = HashMap::with_capacity(edges.len());
        let mut out_edges = Vec::with_capacity(edges.len());
        for (i, (from, to, capacity)) in edges.into_iter().enumerate() {
            let (from, to) = (from.as_ref(), to.as_ref());
            let u = *index
                .get(from)
                .ok_or_else(|| FlowError::UnknownNode(from.to_string()))?;
            let v = *index
                .get(to)
                .ok_or_else(|| FlowError::UnknownNode(to.to_string()))?;
            if u == v {
                return Err(FlowError::SelfLoop {
                    index: i,
                    node: from.to_string(),
                });
            }
            if !capacity.is_finite() || capacity < F::zero() {
                return Err(FlowError::InvalidCapacity {
                    index: i,
                    from: from.to_string(),
                    to: to.to_string(),
                    capacity: capacity.to_f64_lossy(),
                });
            }
            if pairs.insert((u, v), out_edges.len()).is_some() {
                return Err(FlowError::DuplicateEdge {
                    index: i,
                    from: from.to_string(),
                    to: to.to_string(),
                });
            }
            out_edges.push(Edge {
                from: u,
                to: v,
                capacity,
            });
        }

        Ok(Self {
            nodes: out_nodes,
            edges: out_edges,
            index,
            pairs,
            source,
            sink,
        })
    }

    /// Parses the JSON topology schema
    /// (`nodes: [{id, role, f_min?, generation_cap?}]`, `edges: [{from, to, capacity}]`).
    pub fn from_json_str(text: &str) -> Result<Self, FlowError> {
        let spec: TopologySpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn nodes(&self) -> &[Node<F>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<F>] {
        &self.edges
    }

    pub fn node_index(&self, id: &str) -> Result<usize, FlowError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| FlowError::UnknownNode(id.to_string()))
    }

    pub fn node(&self, id: &str) -> Result<&Node<F>, FlowError> {
        Ok(&self.nodes[self.node_index(id)?])
    }

    pub fn source(&self) -> &str {
        &self.nodes[self.source].id
    }

    pub fn sink(&self) -> &str {
        &self.nodes[self.sink].id
    }

    /// Index of the edge `from -> to`, if present.
    pub fn edge_between(&self, from: &str, to: &str) -> Result<Option<usize>, FlowError> {
        let u = self.node_index(from)?;
        let v = self.node_index(to)?;
        Ok(self.pairs.get(&(u, v)).copied())
    }

    pub fn capacity(&self, from: &str, to: &str) -> Result<Option<F>, FlowError> {
        Ok(self.edge_between(from, to)?.map(|e| self.edges[e].capacity))
    }

    /// Copy of the topology with `node` and its incident edges removed.
    /// Terminals cannot be removed.
    pub fn without_node(&self, node: &str) -> Result<Self, FlowError> {
        let victim = self.node_index(node)?;
        if victim == self.source || victim == self.sink {
            return Err(FlowError::InvalidRole {
                id: node.to_string(),
                reason: "terminal nodes cannot be removed".into(),
            });
        }
        let nodes = self
            .nodes
            .iter()
            .filter(|n| n.id != node)
            .map(|n| (n.id.clone(), n.role))
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| e.from != victim && e.to != victim)
            .map(|e| {
                (
                    self.nodes[e.from].id.as_str(),
                    self.nodes[e.to].id.as_str(),
                    e.capacity,
                )
            })
            .collect();
        Self::new(nodes, edges)
    }
}

fn check_role<F: Scalar>(id: &str, role: &NodeRole<F>) -> Result<(), FlowError> {
    if let NodeRole::Generative {
        f_min,
        generation_cap,
    } = *role
    {
        if !f_min.is_finite() || f_min < F::zero() {
            return Err(FlowError::InvalidRole {
                id: id.to_string(),
                reason: format!("f_min = {f_min} must be finite and >= 0"),
            });
        }
        if let Some(cap) = generation_cap {
            if cap.is_nan() || cap < F::zero() {
                return Err(FlowError::InvalidRole {
                    id: id.to_string(),
                    reason: format!("generation_cap = {cap} must be >= 0"),
                });
            }
        }
    }
    Ok(())
}

/// Flow per edge, indexed like [`NetworkTopology::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment<F> {
    pub flows: Vec<F>,
}

impl<F: Scalar> FlowAssignment<F> {
    pub fn zeros(topology: &NetworkTopology<F>) -> Self {
        Self {
            flows: vec![F::zero(); topology.edges().len()],
        }
    }

    pub fn get(&self, edge: usize) -> F {
        self.flows[edge]
    }

    fn check_shape(&self, topology: &NetworkTopology<F>) -> Result<(), FlowError> {
        if self.flows.len() != topology.edges().len() {
            return Err(FlowError::FlowShape {
                expected: topology.edges().len(),
                actual: self.flows.len(),
            });
        }
        Ok(())
    }
}

/// Out-flow minus in-flow at `node`.
pub fn node_divergence<F: Scalar>(
    topology: &NetworkTopology<F>,
    flow: &FlowAssignment<F>,
    node: &str,
) -> Result<F, FlowError> {
    flow.check_shape(topology)?;
    let n = topology.node_index(node)?;
    Ok(divergence_at(topology, flow, n))
}

pub(crate) fn divergence_at<F: Scalar>(
    topology: &NetworkTopology<F>,
    flow: &FlowAssignment<F>,
    n: usize,
) -> F {
    let mut out = F::zero();
    let mut inflow = F::zero();
    for (e, edge) in topology.edges().iter().enumerate() {
        if edge.from == n {
            out = out + flow.flows[e];
        }
        if edge.to == n {
            inflow = inflow + flow.flows[e];
        }
    }
    out - inflow
}

pub(crate) fn inflow_at<F: Scalar>(
    topology: &NetworkTopology<F>,
    flow: &FlowAssignment<F>,
    n: usize,
) -> F {
    topology
        .edges()
        .iter()
        .zip(&flow.flows)
        .filter(|(e, _)| e.to == n)
        .map(|(_, &f)| f)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn diamond() -> NetworkTopology<f64> {
        NetworkTopology::new(
            vec![
                ("s", NodeRole::Source),
                ("r", NodeRole::Relay),
                (
                    "g",
                    NodeRole::Generative {
                        f_min: 1.0,
                        generation_cap: None,
                    },
                ),
                ("d", NodeRole::Sink),
            ],
            vec![
                ("s", "r", 5.0),
                ("r", "d", 3.0),
                ("s", "g", 4.0),
                ("g", "d", 6.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_structural_defects() {
        let roles = || {
            vec![
                ("s", NodeRole::<f64>::Source),
                ("r", NodeRole::Relay),
                ("d", NodeRole::Sink),
            ]
        };
        assert!(matches!(
            NetworkTopology::new(roles(), vec![("s", "r", 1.0), ("s", "r", 2.0)]),
            Err(FlowError::DuplicateEdge { index: 1, .. })
        ));
        assert!(matches!(
            NetworkTopology::new(roles(), vec![("r", "r", 1.0)]),
            Err(FlowError::SelfLoop { .. })
        ));
        assert!(matches!(
            NetworkTopology::new(roles(), vec![("s", "r", -1.0)]),
            Err(FlowError::InvalidCapacity { .. })
        ));
        assert!(matches!(
            NetworkTopology::new(roles(), vec![("s", "r", f64::INFINITY)]),
            Err(FlowError::InvalidCapacity { .. })
        ));
        assert!(matches!(
            NetworkTopology::new(roles(), vec![("s", "x", 1.0)]),
            Err(FlowError::UnknownNode(_))
        ));
        assert!(matches!(
            NetworkTopology::<f64>::new(
                vec![("s", NodeRole::Source), ("s", NodeRole::Sink)],
                Vec::<(&str, &str, f64)>::new()
            ),
            Err(FlowError::DuplicateNode(_))
        ));
        assert!(matches!(
            NetworkTopology::<f64>::new(
                vec![
                    ("a", NodeRole::Source),
                    ("b", NodeRole::Source),
                    ("d", NodeRole::Sink)
                ],
                Vec::<(&str, &str, f64)>::new()
            ),
            Err(FlowError::RoleCount {
                role: "source",
                count: 2
            })
        ));
        assert!(matches!(
            NetworkTopology::<f64>::new(
                vec![
                    ("s", NodeRole::Source),
                    (
                        "g",
                        NodeRole::Generative {
                            f_min: -1.0,
                            generation_cap: None
                        }
                    ),
                    ("d", NodeRole::Sink)
                ],
                Vec::<(&str, &str, f64)>::new()
            ),
            Err(FlowError::InvalidRole { .. })
        ));
    }

    #[test]
    fn divergence_signs() {
        let t = diamond();
        let flow = FlowAssignment {
            flows: vec![3.0, 3.0, 1.0, 5.0],
        };
        assert_eq!(node_divergence(&t, &flow, "r").unwrap(), 0.0);
        assert_eq!(node_divergence(&t, &flow, "g").unwrap(), 4.0);
        assert_eq!(node_divergence(&t, &flow, "d").unwrap(), -8.0);
        assert_eq!(node_divergence(&t, &flow, "s").unwrap(), 4.0);
        let total: f64 = ["s", "r", "g", "d"]
            .iter()
            .map(|n| node_divergence(&t, &flow, n).unwrap())
            .sum();
        assert_eq!(total, 0.0);
        assert!(matches!(
            node_divergence(&t, &flow, "zz"),
            Err(FlowError::UnknownNode(_))
        ));
    }

    #[test]
    fn sink_divergence_is_negative_inflow() {
        let t = diamond();
        let flow = FlowAssignment {
            flows: vec![3.0, 3.0, 4.0, 4.0],
        };
        assert_eq!(node_divergence(&t, &flow, "d").unwrap(), -7.0);
    }

    #[test]
    fn removing_a_node_drops_its_edges() {
        let t = diamond().without_node("g").unwrap();
        assert_eq!(t.nodes().len(), 3);
        assert_eq!(t.edges().len(), 2);
        assert!(diamond().without_node("s").is_err());
    }
}
