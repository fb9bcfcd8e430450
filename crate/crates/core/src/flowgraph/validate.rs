use super::{divergence_at, inflow_at, FlowAssignment, NetworkTopology, NodeRole};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation<F> {
    /// The assignment does not have one entry per edge; nothing else was checked.
    Shape {
        expected: usize,
        actual: usize,
    },
    Capacity {
        edge: usize,
        from: String,
        to: String,
        flow: F,
        capacity: F,
    },
    NegativeFlow {
        edge: usize,
        flow: F,
    },
    /// A relay whose out-flow differs from its in-flow.
    Conservation {
        node: String,
        divergence: F,
    },
    /// A generative node that absorbs flow.
    NegativeGeneration {
        node: String,
        divergence: F,
    },
    /// A generative node fed less than its `f_min`.
    BelowMinFlow {
        node: String,
        inflow: F,
        f_min: F,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeCheck<F> {
    pub node: String,
    pub divergence: F,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<F> {
    pub nodes: Vec<NodeCheck<F>>,
    pub violations: Vec<Violation<F>>,
}

impl<F> ValidationReport<F> {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks capacities on every edge, conservation at relays, and
/// `y_g >= 0`, in-flow `>= f_min` at generative nodes. Terminals are not
/// constrained.
pub fn validate_flow<F: Scalar>(
    topology: &NetworkTopology<F>,
    flow: &FlowAssignment<F>,
) -> ValidationReport<F> {
    let mut violations = Vec::new();
    if flow.flows.len() != topology.edges().len() {
        violations.push(Violation::Shape {
            expected: topology.edges().len(),
            actual: flow.flows.len(),
        });
        return ValidationReport {
            nodes: Vec::new(),
            violations,
        };
    }

    let tol = F::conservation_tol();
    for (i, (e, &f)) in topology.edges().iter().zip(&flow.flows).enumerate() {
        if f < -tol {
            violations.push(Violation::NegativeFlow { edge: i, flow: f });
        }
        if f > e.capacity + tol {
            violations.push(Violation::Capacity {
                edge: i,
                from: topology.nodes()[e.from].id.clone(),
                to: topology.nodes()[e.to].id.clone(),
                flow: f,
                capacity: e.capacity,
            });
        }
    }

    let mut nodes = Vec::with_capacity(topology.nodes().len());
    for (i, node) in topology.nodes().iter().enumerate() {
        let y = divergence_at(topology, flow, i);
        let before = violations.len();
        match node.role {
            NodeRole::Relay => {
                if y.abs() > tol {
                    violations.push(Violation::Conservation {
                        node: node.id.clone(),
                        divergence: y,
                    });
                }
            }
            NodeRole::Generative { f_min, .. } => {
                if y < -tol {
                    violations.push(Violation::NegativeGeneration {
                        node: node.id.clone(),
                        divergence: y,
                    });
                }
                let inflow = inflow_at(topology, flow, i);
                if inflow < f_min - tol {
                    violations.push(Violation::BelowMinFlow {
                        node: node.id.clone(),
                        inflow,
                        f_min,
                    });
                }
            }
            NodeRole::Source | NodeRole::Sink => {}
        }
        nodes.push(NodeCheck {
            node: node.id.clone(),
            divergence: y,
            ok: violations.len() == before,
        });
    }

    ValidationReport { nodes, violations }
}
