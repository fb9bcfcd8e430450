use genflow::flowgraph::{
    max_flow_with_cut, node_divergence, validate_flow, NetworkTopology, NodeRole,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest s-d cut by enumerating every node subset containing `s` but not `d`.
fn min_cut_by_enumeration(t: &NetworkTopology<f64>) -> f64 {
    let n = t.nodes().len();
    let s = t.node_index(t.source()).unwrap();
    let d = t.node_index(t.sink()).unwrap();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask & (1 << s) == 0 || mask & (1 << d) != 0 {
            continue;
        }
        let cut: f64 = t
            .edges()
            .iter()
            .filter(|e| mask & (1 << e.from) != 0 && mask & (1 << e.to) == 0)
            .map(|e| e.capacity)
            .sum();
        best = best.min(cut);
    }
    best
}

fn random_graph(rng: &mut ChaCha8Rng) -> NetworkTopology<f64> {
    let n = rng.random_range(2..=8usize);
    let nodes: Vec<(String, NodeRole<f64>)> = (0..n)
        .map(|i| {
            let role = match i {
                0 => NodeRole::Source,
                i if i == n - 1 => NodeRole::Sink,
                _ => NodeRole::Relay,
            };
            (format!("v{i}"), role)
        })
        .collect();
    let density = rng.random_range(0.2..0.8);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(density) {
                // quarter units keep every partial sum exact
                let cap = rng.random_range(0..=64u32) as f64 / 4.0;
                edges.push((format!("v{u}"), format!("v{v}"), cap));
            }
        }
    }
    NetworkTopology::new(nodes, edges).unwrap()
}

#[test]
fn max_flow_equals_enumerated_min_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..300 {
        let t = random_graph(&mut rng);
        let r = max_flow_with_cut(&t, t.source(), t.sink()).unwrap();
        assert_eq!(r.value, min_cut_by_enumeration(&t));
        assert_eq!(r.cut.value, r.value);
        assert!(validate_flow(&t, &r.flow).is_ok());
        for node in t.nodes() {
            if matches!(node.role, NodeRole::Relay) {
                assert!(node_divergence(&t, &r.flow, &node.id).unwrap().abs() < 1e-9);
            }
        }
    }
}

#[test]
fn json_topology_matches_constructor() {
    let text = r#"{
        "nodes": [
            {"id": "s", "role": "source"},
            {"id": "r", "role": "relay"},
            {"id": "g", "role": "generative", "f_min": 1.0},
            {"id": "d", "role": "sink"}
        ],
        "edges": [
            {"from": "s", "to": "r", "capacity": 5},
            {"from": "r", "to": "d", "capacity": 3},
            {"from": "s", "to": "g", "capacity": 4},
            {"from": "g", "to": "d", "capacity": 6}
        ]
    }"#;
    let t = NetworkTopology::<f64>::from_json_str(text).unwrap();
    // cut {r->d, s->g}
    assert_eq!(max_flow_with_cut(&t, "s", "d").unwrap().value, 7.0);
    assert_eq!(min_cut_by_enumeration(&t), 7.0);
}
