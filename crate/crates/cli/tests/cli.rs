use std::path::Path;

use genflow::flowopt::read_results_csv;
use genflow::ratequality::{CurveRecord, Strategy};
use genflow_cli::commands::{
    DatasetManifest, CURVES_DIR, DATASET_DIR, MANIFEST_FILE, SAMPLES_FILE,
};
use genflow_cli::{run, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK};

fn genflow(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(
        std::iter::once("genflow").chain(args.iter().copied()),
        &mut out,
    );
    (code, String::from_utf8(out).unwrap())
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn small_config(dir: &Path, seed: u64) -> String {
    let path = dir.join(format!("config{seed}.json"));
    write(
        &path,
        &format!(r#"{{"seed": {seed}, "dataset": {{"count": 40, "width": 32, "height": 32}}}}"#),
    );
    path.to_string_lossy().into_owned()
}

fn manifest(out: &Path) -> DatasetManifest {
    serde_json::from_slice(&std::fs::read(out.join(DATASET_DIR).join(MANIFEST_FILE)).unwrap())
        .unwrap()
}

#[test]
fn dataset_manifest_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), 1);
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    for out in [&a, &b] {
        assert_eq!(
            genflow(&[
                "gen-dataset",
                "--config",
                &cfg,
                "--out",
                out.to_str().unwrap()
            ])
            .0,
            EXIT_OK
        );
    }
    assert_eq!(
        genflow(&[
            "gen-dataset",
            "--config",
            &cfg,
            "--seed",
            "2",
            "--out",
            c.to_str().unwrap()
        ])
        .0,
        EXIT_OK
    );
    let (ma, mb, mc) = (manifest(&a), manifest(&b), manifest(&c));
    assert_eq!(ma, mb);
    assert_eq!(ma.count, 40);
    assert_eq!(std::fs::read_dir(a.join(DATASET_DIR)).unwrap().count(), 41);
    assert_ne!(ma.dataset_hash, mc.dataset_hash);
    assert_eq!(mc.seed, 2);
}

#[test]
fn measure_fit_and_optimize() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), 3);
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(
        genflow(&["gen-dataset", "--config", &cfg, "--out", o]).0,
        EXIT_OK
    );
    assert_eq!(
        genflow(&["measure", "--config", &cfg, "--out", o]).0,
        EXIT_OK
    );
    let first = std::fs::read(out.join(SAMPLES_FILE)).unwrap();
    assert!(String::from_utf8_lossy(&first).starts_with("# genflow "));
    assert_eq!(
        genflow(&["measure", "--config", &cfg, "--out", o, "--jobs", "3"]).0,
        EXIT_OK
    );
    assert_eq!(std::fs::read(out.join(SAMPLES_FILE)).unwrap(), first);

    let (code, text) = genflow(&["fit", "--config", &cfg, "--out", o]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(text.lines().count(), 16);
    let records: Vec<CurveRecord> = std::fs::read_dir(out.join(CURVES_DIR))
        .unwrap()
        .map(|e| {
            CurveRecord::from_json(&std::fs::read_to_string(e.unwrap().path()).unwrap()).unwrap()
        })
        .collect();
    assert_eq!(records.len(), 16);
    assert_eq!(
        records
            .iter()
            .filter(|r| r.strategy == Strategy::Pe)
            .count(),
        4
    );
    assert_eq!(records.iter().filter(|r| r.strategy.is_ps()).count(), 12);
    for r in &records {
        assert!(
            r.r2 >= 0.9,
            "{:?} {:?} {:?} r2 {}",
            r.scheme,
            r.strategy,
            r.metric,
            r.r2
        );
    }

    // bundled scenario, curve found through --out
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let two_route = scenarios.join("paper_fig4.json");
    let (code, _) = genflow(&[
        "sweep",
        two_route.to_str().unwrap(),
        "--out",
        o,
        "--w",
        "0,0.5,1",
    ]);
    assert_eq!(code, EXIT_OK);
    let rows =
        read_results_csv(&std::fs::read(out.join("sweep_paper_fig4.csv")).unwrap()[..]).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.w).collect::<Vec<_>>(),
        vec![0.0, 0.5, 1.0]
    );
    assert!(rows[0].g_flow > 2.0);

    let relay = scenarios.join("paper_fig4_jpeg_relay.json");
    let (code, text) = genflow(&[
        "optimize",
        "--config",
        relay.to_str().unwrap(),
        "--out",
        o,
        "--w",
        "0.7",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("1.000000"), "{text}");
    let rows = read_results_csv(
        &std::fs::read(out.join("optimize_paper_fig4_jpeg_relay.csv")).unwrap()[..],
    )
    .unwrap();
    assert_eq!((rows.len(), rows[0].w, rows[0].g_flow), (1, 0.7, 1.0));

    // source link below f_min: infeasible, exit 1
    let text = std::fs::read_to_string(&two_route)
        .unwrap()
        .replace("\"capacity\": 3.184", "\"capacity\": 0.05");
    let starved = tmp.path().join("starved.json");
    write(&starved, &text);
    let curve = out.join(CURVES_DIR).join("genai_PE_perception.json");
    let (code, text) = genflow(&[
        "optimize",
        starved.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--out",
        o,
    ]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert!(text.contains("infeasible"));
}

#[test]
fn maxflow_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let diamond = tmp.path().join("diamond.json");
    write(
        &diamond,
        r#"{"nodes": [{"id": "s", "role": "source"}, {"id": "r", "role": "relay"},
                     {"id": "g", "role": "generative", "f_min": 1}, {"id": "d", "role": "sink"}],
            "edges": [{"from": "s", "to": "r", "capacity": 5}, {"from": "r", "to": "d", "capacity": 3},
                      {"from": "s", "to": "g", "capacity": 4}, {"from": "g", "to": "d", "capacity": 6}]}"#,
    );
    let (code, text) = genflow(&["maxflow", diamond.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(text.starts_with("max_flow 7\n"), "{text}");
    assert!(text.contains("min_cut 7"));
    assert!(text.contains("divergence r 0"));

    let empty = tmp.path().join("empty.json");
    write(
        &empty,
        r#"{"nodes": [{"id": "s", "role": "source"}, {"id": "d", "role": "sink"}], "edges": []}"#,
    );
    let (code, text) = genflow(&["maxflow", empty.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(text.starts_with("max_flow 0\n"));

    let dup = tmp.path().join("dup.json");
    write(
        &dup,
        r#"{"nodes": [{"id": "s", "role": "source"}, {"id": "d", "role": "sink"}],
            "edges": [{"from": "s", "to": "d", "capacity": 1}, {"from": "s", "to": "d", "capacity": 2}]}"#,
    );
    assert_eq!(genflow(&["maxflow", dup.to_str().unwrap()]).0, EXIT_ERROR);
    let bad = tmp.path().join("bad.json");
    write(&bad, "{\"nodes\": [\n  {\"id\": 3}\n]}");
    assert_eq!(genflow(&["maxflow", bad.to_str().unwrap()]).0, EXIT_ERROR);
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(genflow(&["frobnicate"]).0, EXIT_ERROR);
    assert_eq!(genflow(&["optimize"]).0, EXIT_ERROR);
    assert_eq!(
        genflow(&["maxflow", "/nonexistent/topology.json"]).0,
        EXIT_ERROR
    );
    assert_eq!(
        genflow(&["measure", "--out", "/nonexistent/out"]).0,
        EXIT_ERROR
    );
    assert_eq!(genflow(&["--help"]).0, EXIT_OK);
}

#[test]
fn binary_exit_status() {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_genflow"))
        .args(["maxflow", "/nonexistent.json"])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_ERROR));
}
