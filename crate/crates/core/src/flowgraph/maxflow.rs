use std::collections::VecDeque;

use super::{FlowAssignment, FlowError, NetworkTopology, NodeRole};
use crate::Scalar;

/// A minimum s-d cut.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResult<F> {
    pub value: F,
    /// Edge indices crossing from the source side to the sink side.
    pub edges: Vec<usize>,
    pub source_side: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow<F> {
    pub value: F,
    pub flow: FlowAssignment<F>,
    pub cut: CutResult<F>,
}

/// Maximum s→d flow with every node acting as a replicator.
pub fn max_flow<F: Scalar>(
    topology: &NetworkTopology<F>,
    s: &str,
    d: &str,
) -> Result<(F, FlowAssignment<F>), FlowError> {
    let r = max_flow_with_cut(topology, s, d)?;
    Ok((r.value, r.flow))
}

/// Replication-only max flow `f'_sd`, the denominator of the flow gain.
pub fn baseline_max_flow<F: Scalar>(
    topology: &NetworkTopology<F>,
    s: &str,
    d: &str,
) -> Result<F, FlowError> {
    Ok(max_flow_with_cut(topology, s, d)?.value)
}

/// Edmonds–Karp on the residual graph. Each edge `e` owns arcs `2e`
/// (forward) and `2e + 1` (residual back-arc); residuals at or below
/// [`Scalar::flow_floor`] count as saturated.
pub fn max_flow_with_cut<F: Scalar>(
    topology: &NetworkTopology<F>,
    s: &str,
    d: &str,
) -> Result<MaxFlow<F>, FlowError> {
    let src = topology.node_index(s)?;
    let dst = topology.node_index(d)?;
    if src == dst {
        return Err(FlowError::SameTerminal(s.to_string()));
    }
    if !matches!(topology.nodes()[src].role, NodeRole::Source) {
        return Err(FlowError::RoleMismatch {
            id: s.to_string(),
            expected: "source",
        });
    }
    if !matches!(topology.nodes()[dst].role, NodeRole::Sink) {
        return Err(FlowError::RoleMismatch {
            id: d.to_string(),
            expected: "sink",
        });
    }

    let n = topology.nodes().len();
    let edges = topology.edges();
    let mut head = Vec::with_capacity(edges.len() * 2);
    let mut residual = Vec::with_capacity(edges.len() * 2);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in edges {
        adj[e.from].push(head.len());
        head.push(e.to);
        residual.push(e.capacity);
        adj[e.to].push(head.len());
        head.push(e.from);
        residual.push(F::zero());
    }

    let floor = F::flow_floor();
    let mut parent = vec![usize::MAX; n];
    loop {
        parent.fill(usize::MAX);
        let mut seen = vec![false; n];
        seen[src] = true;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if u == dst {
                break;
            }
            for &a in &adj[u] {
                let v = head[a];
                if !seen[v] && residual[a] > floor {
                    seen[v] = true;
                    parent[v] = a;
                    queue.push_back(v);
                }
            }
        }
        if !seen[dst] {
            break;
        }

        let mut bottleneck = F::infinity();
        let mut v = dst;
        while v != src {
            let a = parent[v];
            bottleneck = bottleneck.min(residual[a]);
            v = head[a ^ 1];
        }
        let mut v = dst;
        while v != src {
            let a = parent[v];
            residual[a] = residual[a] - bottleneck;
            residual[a ^ 1] = residual[a ^ 1] + bottleneck;
            v = head[a ^ 1];
        }
    }

    let flows = edges
        .iter()
        .enumerate()
        .map(|(i, e)| residual[2 * i + 1].max(F::zero()).min(e.capacity))
        .collect();
    let flow = FlowAssignment { flows };
    let value = super::divergence_at(topology, &flow, src);

    // Source side of the cut: everything still reachable in the residual graph.
    let mut reach = vec![false; n];
    reach[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &a in &adj[u] {
            let v = head[a];
            if !reach[v] && residual[a] > floor {
                reach[v] = true;
                queue.push_back(v);
            }
        }
    }
    let cut_edges: Vec<usize> = edges
        .iter()
        .enumerate()
        .filter(|(_, e)| reach[e.from] && !reach[e.to])
        .map(|(i, _)| i)
        .collect();
    let cut = CutResult {
        value: cut_edges.iter().map(|&i| edges[i].capacity).sum(),
        edges: cut_edges,
        source_side: topology
            .nodes()
            .iter()
            .enumerate()
            .filter(|(i, _)| reach[*i])
            .map(|(_, n)| n.id.clone())
            .collect(),
    };

    Ok(MaxFlow { value, flow, cut })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowgraph::tests::diamond;
    use crate::flowgraph::{node_divergence, validate_flow};
    use proptest::prelude::*;

    #[test]
    fn diamond_value_and_cut() {
        let t = diamond();
        let r = max_flow_with_cut(&t, "s", "d").unwrap();
        assert_eq!(r.value, 7.0);
        assert_eq!(r.cut.value, 7.0);
        let rd = t.edge_between("r", "d").unwrap().unwrap();
        let sg = t.edge_between("s", "g").unwrap().unwrap();
        let mut cut = r.cut.edges.clone();
        cut.sort();
        let mut want = vec![rd, sg];
        want.sort();
        assert_eq!(cut, want);
        // The s-r-d path carries min{5, 3}.
        assert_eq!(r.flow.get(rd), 3.0);
        assert_eq!(baseline_max_flow(&t, "s", "d").unwrap(), 7.0);
    }

    #[test]
    fn f32_matches_f64_on_diamond() {
        let t: NetworkTopology<f32> = diamond().to_spec().build().unwrap();
        assert_eq!(max_flow(&t, "s", "d").unwrap().0, 7.0f32);
    }

    #[test]
    fn trivial_cases() {
        let single = NetworkTopology::new(
            vec![("s", NodeRole::Source), ("d", NodeRole::Sink)],
            vec![("s", "d", 2.5)],
        )
        .unwrap();
        assert_eq!(baseline_max_flow(&single, "s", "d").unwrap(), 2.5);

        let disconnected = NetworkTopology::<f64>::new(
            vec![
                ("s", NodeRole::Source),
                ("r", NodeRole::Relay),
                ("d", NodeRole::Sink),
            ],
            vec![("s", "r", 4.0)],
        )
        .unwrap();
        assert_eq!(baseline_max_flow(&disconnected, "s", "d").unwrap(), 0.0);

        let zero_out = NetworkTopology::<f64>::new(
            vec![
                ("s", NodeRole::Source),
                ("r", NodeRole::Relay),
                ("d", NodeRole::Sink),
            ],
            vec![("s", "r", 0.0), ("r", "d", 9.0)],
        )
        .unwrap();
        let r = max_flow_with_cut(&zero_out, "s", "d").unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.cut.value, 0.0);
        assert_eq!(r.cut.source_side, vec!["s".to_string()]);
    }

    #[test]
    fn errors() {
        let t = diamond();
        assert!(matches!(
            max_flow(&t, "s", "s"),
            Err(FlowError::SameTerminal(_))
        ));
        assert!(matches!(
            max_flow(&t, "s", "q"),
            Err(FlowError::UnknownNode(_))
        ));
        assert!(matches!(
            max_flow(&t, "r", "d"),
            Err(FlowError::RoleMismatch { .. })
        ));
    }

    fn random_topology(n: usize, caps: &[Option<u8>]) -> NetworkTopology<f64> {
        let id = |i: usize| format!("n{i}");
        let nodes = (0..n)
            .map(|i| {
                let role = if i == 0 {
                    NodeRole::Source
                } else if i == n - 1 {
                    NodeRole::Sink
                } else {
                    NodeRole::Relay
                };
                (id(i), role)
            })
            .collect();
        let mut edges = Vec::new();
        let mut k = 0;
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    continue;
                }
                if let Some(Some(c)) = caps.get(k) {
                    edges.push((id(u), id(v), *c as f64 / 4.0));
                }
                k += 1;
            }
        }
        NetworkTopology::new(nodes, edges).unwrap()
    }

    proptest! {
        #[test]
        fn returned_flow_is_feasible_and_conserving(
            n in 2usize..7,
            caps in prop::collection::vec(prop::option::of(0u8..40), 42),
        ) {
            let t = random_topology(n, &caps);
            let r = max_flow_with_cut(&t, "n0", &format!("n{}", n - 1)).unwrap();
            let report = validate_flow(&t, &r.flow);
            prop_assert!(report.is_ok(), "{:?}", report.violations);
            prop_assert!((r.value - r.cut.value).abs() < 1e-9);
            let total: f64 = t.nodes().iter().map(|x| node_divergence(&t, &r.flow, &x.id).unwrap()).sum();
            prop_assert!(total.abs() < 1e-9);
        }

        #[test]
        fn monotone_in_capacity(
            n in 3usize..7,
            caps in prop::collection::vec(prop::option::of(0u8..40), 42),
            bump_edge in 0usize..42,
            bump in 1u8..20,
        ) {
            let t = random_topology(n, &caps);
            let d = format!("n{}", n - 1);
            let before = baseline_max_flow(&t, "n0", &d).unwrap();
            let mut bumped = caps.clone();
            if let Some(Some(c)) = bumped.get_mut(bump_edge) {
                *c = c.saturating_add(bump);
            }
            let after = baseline_max_flow(&random_topology(n, &bumped), "n0", &d).unwrap();
            prop_assert!(after >= before - 1e-12);
        }
    }
}
