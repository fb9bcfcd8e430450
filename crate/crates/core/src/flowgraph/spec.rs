use serde::{Deserialize, Serialize};

use super::{FlowError, NetworkTopology, NodeRole};
use crate::Scalar;

/// On-disk form of a topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleName {
    Source,
    Sink,
    Relay,
    Generative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub role: RoleName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub capacity: f64,
}

impl TopologySpec {
    pub fn build<F: Scalar>(&self) -> Result<NetworkTopology<F>, FlowError> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let role = match n.role {
                RoleName::Generative => NodeRole::Generative {
                    f_min: F::lit(n.f_min.unwrap_or(0.0)),
                    generation_cap: n.generation_cap.map(F::lit),
                },
                other => {
                    if n.f_min.is_some() || n.generation_cap.is_some() {
                        return Err(FlowError::InvalidRole {
                            id: n.id.clone(),
                            reason: format!(
                                "nodes[{i}]: f_min/generation_cap only apply to generative nodes"
                            ),
                        });
                    }
                    match other {
                        RoleName::Source => NodeRole::Source,
                        RoleName::Sink => NodeRole::Sink,
                        _ => NodeRole::Relay,
                    }
                }
            };
            nodes.push((n.id.clone(), role));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str(), F::lit(e.capacity)))
            .collect();
        NetworkTopology::new(nodes, edges)
    }
}

impl<F: Scalar> NetworkTopology<F> {
    pub fn to_spec(&self) -> TopologySpec {
        let nodes = self
            .nodes()
            .iter()
            .map(|n| {
                let (role, f_min, generation_cap) = match n.role {
                    NodeRole::Source => (RoleName::Source, None, None),
                    NodeRole::Sink => (RoleName::Sink, None, None),
                    NodeRole::Relay => (RoleName::Relay, None, None),
                    NodeRole::Generative {
                        f_min,
                        generation_cap,
                    } => (
                        RoleName::Generative,
                        Some(f_min.to_f64_lossy()),
                        generation_cap.map(|c| c.to_f64_lossy()),
                    ),
                };
                NodeSpec {
                    id: n.id.clone(),
                    role,
                    f_min,
                    generation_cap,
                }
            })
            .collect();
        let edges = self
            .edges()
            .iter()
            .map(|e| EdgeSpec {
                from: self.nodes()[e.from].id.clone(),
                to: self.nodes()[e.to].id.clone(),
                capacity: e.capacity.to_f64_lossy(),
            })
            .collect();
        TopologySpec { nodes, edges }
    }
}
