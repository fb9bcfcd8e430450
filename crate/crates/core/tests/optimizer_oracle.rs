use genflow::flowgraph::{NetworkTopology, NodeRole};
use genflow::flowopt::{brute_force_optimize, optimize_prompt_size, sweep_w, GenScenario};
use genflow::metrics::MetricKind;
use genflow::ratequality::{fit_curve, CurveFamily, SamplePoint, Scheme, Strategy};
use genflow::Curve;

fn topology(c_sg: f64, c_gd: f64, f_min: f64) -> NetworkTopology<f64> {
    NetworkTopology::new(
        vec![
            ("s", NodeRole::Source),
            ("r", NodeRole::Relay),
            (
                "g",
                NodeRole::Generative {
                    f_min,
                    generation_cap: None,
                },
            ),
            ("d", NodeRole::Sink),
        ],
        vec![
            ("s", "r", 10.0),
            ("r", "d", 10.0),
            ("s", "g", c_sg),
            ("g", "d", c_gd),
        ],
    )
    .unwrap()
}

/// A cubic fitted to a noisy, roughly linear pixel-swap profile.
fn fitted_ps_curve(lp: f64, d0: f64) -> Curve {
    let samples: Vec<SamplePoint> = (0..=10)
        .map(|i| {
            let g = i as f64 / 10.0;
            let wobble = 0.01 * ((i * 7 % 5) as f64 - 2.0) * d0;
            let v = (d0 * (1.0 - g) * (1.0 - 0.3 * g) + wobble).clamp(0.0, 1.0);
            SamplePoint::new(
                lp + 24.0 * g,
                v,
                MetricKind::Perception,
                Scheme::Genai,
                Strategy::PsLow,
            )
            .unwrap()
        })
        .collect();
    fit_curve(&samples, CurveFamily::Polynomial(3)).unwrap()
}

#[test]
fn solver_matches_oracle_on_fitted_curves() {
    for (i, d0) in [0.3, 0.6, 0.9].into_iter().enumerate() {
        let curve = fitted_ps_curve(0.1 + 0.4 * i as f64, d0);
        for w in [0.0, 0.5, 1.0] {
            let sc = GenScenario::new(
                topology(3.184, 24.0, 0.1),
                "g",
                24.0,
                w,
                curve.clone(),
                (1.0, 24.0),
            )
            .unwrap();
            let fast = optimize_prompt_size(&sc).unwrap();
            let slow = brute_force_optimize(&sc, 1024).unwrap();
            assert!(fast.feasible && slow.feasible);
            assert!(fast.objective >= slow.objective - 1e-9, "d0={d0} w={w}");
            assert!(fast.objective - slow.objective < 1e-3, "d0={d0} w={w}");
        }
    }
}

#[test]
fn sweep_entries_equal_single_runs() {
    let curve = fitted_ps_curve(0.1, 0.8);
    let sc = GenScenario::new(
        topology(3.184, 24.0, 0.1),
        "g",
        24.0,
        0.0,
        curve,
        (1.0, 24.0),
    )
    .unwrap();
    let ws = [0.0, 0.25, 0.5, 1.0, 2.0];
    let rows = sweep_w(&sc, &ws).unwrap();
    for (w, row) in ws.iter().zip(&rows) {
        assert_eq!(*row, optimize_prompt_size(&sc.with_w(*w).unwrap()).unwrap());
    }
    for pair in rows.windows(2) {
        assert!(pair[0].lp <= pair[1].lp);
        assert!(pair[0].g_flow >= pair[1].g_flow);
    }
}

#[test]
fn negative_objectives_are_reported() {
    let curve = Curve::new(
        CurveFamily::ExponentialDecay,
        vec![0.9, 0.05, 0.0],
        0.1,
        24.0,
        MetricKind::Perception,
        1.0,
    )
    .unwrap();
    let sc = GenScenario::new(
        topology(3.184, 24.0, 0.1),
        "g",
        24.0,
        10.0,
        curve,
        (1.0, 24.0),
    )
    .unwrap();
    let r = optimize_prompt_size(&sc).unwrap();
    assert!(r.feasible);
    assert!(r.objective <= 0.0);
}
