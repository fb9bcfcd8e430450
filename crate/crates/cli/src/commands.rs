use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use genflow::flowgraph::{
    max_flow_with_cut, node_divergence, validate_flow, NetworkTopology, TopologySpec,
};
use genflow::flowopt::{sweep_w, write_results_csv, ResultRow, ScenarioFile};
use genflow::imaging::{generate_dataset, read_pnm, write_pnm, Image};
use genflow::metrics::MetricKind;
use genflow::ratequality::{
    build_pe_curve, build_ps_curve, fit_pe_curve, measure_samples, read_samples_csv,
    write_samples_csv, CurveError, CurveRecord, SamplePoint, Scheme, Strategy, PE_FAMILIES,
    PS_FAMILIES,
};
use genflow::{fnv1a64, par_map, Curve};

use crate::artifact::{
    self, combined_hash, csv_comment, hex, read_file, read_text, write_file, FileHash,
};
use crate::config::PipelineConfig;

pub const DATASET_DIR: &str = "dataset";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const CURVES_DIR: &str = "curves";
pub const SWEEPS_DIR: &str = "sweeps";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Generated datasets are RGB, so the true image is 24 bpp.
pub const TRUE_BPP: f64 = 24.0;

pub const BUNDLED_SCENARIOS: [(&str, &str); 2] = [
    ("paper_fig4", include_str!("../scenarios/paper_fig4.json")),
    (
        "paper_fig4_jpeg_relay",
        include_str!("../scenarios/paper_fig4_jpeg_relay.json"),
    ),
];

/// Whether every result was feasible and every flow valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub tool: String,
    pub config: String,
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub dataset_hash: String,
    pub files: Vec<FileHash>,
}

pub fn gen_dataset(cfg: &PipelineConfig, out: &Path) -> anyhow::Result<DatasetManifest> {
    cfg.validate()?;
    let d = &cfg.dataset;
    let images = generate_dataset(d.count, d.width, d.height, cfg.seed)?;
    let dir = out.join(DATASET_DIR);
    let mut files = Vec::with_capacity(images.len());
    for (i, img) in images.iter().enumerate() {
        let path = dir.join(format!("img_{i:04}.ppm"));
        let mut bytes = Vec::new();
        write_pnm(img, &mut bytes)?;
        write_file(&path, &bytes)?;
        files.push(FileHash {
            file: path.file_name().unwrap().to_string_lossy().into_owned(),
            fnv1a64: hex(fnv1a64(&bytes)),
        });
    }
    let manifest = DatasetManifest {
        tool: format!("genflow {}", artifact::VERSION),
        config: hex(cfg.hash()),
        count: d.count,
        width: d.width,
        height: d.height,
        seed: cfg.seed,
        dataset_hash: combined_hash(&files),
        files,
    };
    write_file(
        &dir.join(MANIFEST_FILE),
        &artifact::to_json_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Loads the images listed in `out/dataset/manifest.json`, checking hashes.
pub fn load_dataset(out: &Path) -> anyhow::Result<Vec<Image>> {
    let dir = out.join(DATASET_DIR);
    let path = dir.join(MANIFEST_FILE);
    let manifest: DatasetManifest = serde_json::from_str(&read_text(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    manifest
        .files
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let p = dir.join(&f.file);
            let bytes = read_file(&p)?;
            anyhow::ensure!(
                hex(fnv1a64(&bytes)) == f.fnv1a64,
                "image {i} ({}) does not match the manifest",
                p.display()
            );
            read_pnm(&bytes[..]).with_context(|| format!("image {i} ({})", p.display()))
        })
        .collect()
}

pub fn measure(cfg: &PipelineConfig, out: &Path, jobs: usize) -> anyhow::Result<Vec<SamplePoint>> {
    cfg.validate()?;
    let images = load_dataset(out)?;
    let samples = measure_samples(&images, &cfg.measure_config(), jobs)?;
    let mut bytes = Vec::new();
    let comment = format!(
        "{}\nfeature_extractor={} entropy_tables={}",
        csv_comment(cfg.hash()),
        genflow::metrics::FEATURE_EXTRACTOR_VERSION,
        genflow::imaging::ENTROPY_TABLES_VERSION
    );
    write_samples_csv(&mut bytes, &samples, &comment)?;
    write_file(&out.join(SAMPLES_FILE), &bytes)?;
    Ok(samples)
}

pub fn curve_stem(scheme: Scheme, strategy: Strategy, metric: MetricKind) -> String {
    format!("{scheme}_{strategy}_{metric}")
}

/// Fits every (scheme, strategy, metric) curve. Perception values are
/// normalized by the `fid_max` estimated from the GenAI tier points, shared
/// by both schemes.
pub fn fit_records(
    samples: &[SamplePoint],
    metrics: &[MetricKind],
    provenance: &str,
) -> anyhow::Result<Vec<CurveRecord>> {
    anyhow::ensure!(!samples.is_empty(), "no samples");
    let true_bpp = TRUE_BPP;
    let pick = |scheme: Scheme, strategy: Strategy, metric: MetricKind| -> Vec<SamplePoint> {
        samples
            .iter()
            .filter(|s| s.scheme == scheme && s.strategy == strategy && s.metric == metric)
            .copied()
            .collect()
    };
    let mut records = Vec::new();
    for &metric in metrics {
        let genai_pe = pick(Scheme::Genai, Strategy::Pe, metric);
        let pe = build_pe_curve::<f64>(&genai_pe, true_bpp, &PE_FAMILIES)
            .with_context(|| format!("fitting genai PE {metric}"))?;
        let fid_max = pe.fid_max;
        let normalize = |pts: Vec<SamplePoint>| -> Result<Vec<SamplePoint>, CurveError> {
            pts.into_iter()
                .map(|mut p| {
                    if let Some(m) = fid_max {
                        p.value = genflow::metrics::normalize_fid(p.value, m)?;
                    }
                    Ok(p)
                })
                .collect()
        };
        for scheme in Scheme::ALL {
            for strategy in Strategy::ALL {
                let what = || format!("fitting {}", curve_stem(scheme, strategy, metric));
                let curve: Curve = match (scheme, strategy) {
                    (Scheme::Genai, Strategy::Pe) => pe.curve.clone(),
                    (_, Strategy::Pe) => fit_pe_curve(
                        &normalize(pick(scheme, strategy, metric))?,
                        true_bpp,
                        &PE_FAMILIES,
                    )
                    .with_context(what)?,
                    _ => {
                        let pts = normalize(pick(scheme, strategy, metric))?;
                        let prompt_bpp = pts.iter().map(|p| p.bpp).fold(f64::INFINITY, f64::min);
                        build_ps_curve(&pts, prompt_bpp, true_bpp, &PS_FAMILIES)
                            .with_context(what)?
                    }
                };
                records.push(CurveRecord::new(
                    &curve,
                    scheme,
                    strategy,
                    provenance.to_string(),
                    fid_max,
                ));
            }
        }
    }
    Ok(records)
}

pub fn fit(cfg: &PipelineConfig, out: &Path) -> anyhow::Result<Vec<CurveRecord>> {
    let path = out.join(SAMPLES_FILE);
    let bytes = read_file(&path)?;
    let samples =
        read_samples_csv(&bytes[..]).with_context(|| format!("reading {}", path.display()))?;
    let records = fit_records(&samples, &cfg.metrics, &hex(fnv1a64(&bytes)))?;
    for r in &records {
        let path = out.join(CURVES_DIR).join(format!(
            "{}.json",
            curve_stem(r.scheme, r.strategy, r.metric)
        ));
        write_file(&path, r.to_json().as_bytes())?;
    }
    Ok(records)
}

/// A scenario file with its curve resolved and loaded.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub name: String,
    pub file: ScenarioFile,
    pub curve_path: PathBuf,
    pub curve: CurveRecord,
}

impl LoadedScenario {
    /// Reads a scenario; its curve path is tried relative to the scenario
    /// file, then to `out`. `curve` overrides the path in the file.
    pub fn load(path: &Path, out: Option<&Path>, curve: Option<&Path>) -> anyhow::Result<Self> {
        let text = read_text(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&name, &text, dir, out, curve)
            .with_context(|| format!("loading {}", path.display()))
    }

    pub fn from_text(
        name: &str,
        text: &str,
        dir: &Path,
        out: Option<&Path>,
        curve: Option<&Path>,
    ) -> anyhow::Result<Self> {
        let file = ScenarioFile::from_json_str(text)?;
        let curve_path = match curve {
            Some(p) => p.to_path_buf(),
            None => {
                let mut bases = vec![dir];
                bases.extend(out);
                artifact::resolve(&file.curve, &bases)?
            }
        };
        let record = CurveRecord::from_json(&read_text(&curve_path)?)
            .with_context(|| format!("parsing {}", curve_path.display()))?;
        Ok(Self {
            name: name.to_string(),
            file,
            curve_path,
            curve: record,
        })
    }

    pub fn with_curve(&self, name: String, curve: CurveRecord) -> Self {
        let mut file = self.file.clone();
        file.metric = curve.metric;
        Self {
            name,
            file,
            curve_path: PathBuf::new(),
            curve,
        }
    }

    pub fn run(&self, ws: &[f64]) -> anyhow::Result<Vec<ResultRow>> {
        anyhow::ensure!(!ws.is_empty(), "no w values");
        let scenario = self.file.build(self.curve.curve::<f64>()?)?;
        Ok(sweep_w(&scenario, ws)?
            .iter()
            .map(ResultRow::from)
            .collect())
    }

    /// Provenance hash: the scenario JSON plus the curve record.
    pub fn hash(&self) -> u64 {
        let text = serde_json::to_string(&(&self.file, &self.curve)).expect("scenario serializes");
        fnv1a64(text.as_bytes())
    }
}

pub fn outcome(rows: &[ResultRow]) -> Outcome {
    if rows.iter().all(|r| r.feasible) {
        Outcome::Ok
    } else {
        Outcome::Infeasible
    }
}

pub fn write_results(path: &Path, rows: &[ResultRow], config_hash: u64) -> anyhow::Result<()> {
    let mut bytes = Vec::new();
    write_results_csv(&mut bytes, rows, &csv_comment(config_hash))?;
    write_file(path, &bytes)
}

/// Text report of max flow, a minimum cut and node divergences.
pub fn maxflow_report(text: &str) -> anyhow::Result<(String, Outcome)> {
    let spec: TopologySpec = serde_json::from_str(text).context("parsing topology")?;
    let topology: NetworkTopology<f64> = spec.build()?;
    let (s, d) = (topology.source().to_string(), topology.sink().to_string());
    let r = max_flow_with_cut(&topology, &s, &d)?;
    let mut out = String::new();
    writeln!(out, "max_flow {}", r.value)?;
    let cut: Vec<String> = r
        .cut
        .edges
        .iter()
        .map(|&e| {
            let edge = topology.edges()[e];
            format!(
                "{}->{}",
                topology.nodes()[edge.from].id,
                topology.nodes()[edge.to].id
            )
        })
        .collect();
    writeln!(out, "min_cut {} [{}]", r.cut.value, cut.join(", "))?;
    writeln!(out, "source_side [{}]", r.cut.source_side.join(", "))?;
    for node in topology.nodes() {
        writeln!(
            out,
            "divergence {} {}",
            node.id,
            node_divergence(&topology, &r.flow, &node.id)?
        )?;
    }
    let report = validate_flow(&topology, &r.flow);
    for v in &report.violations {
        writeln!(out, "violation {v:?}")?;
    }
    Ok((
        out,
        if report.is_ok() {
            Outcome::Ok
        } else {
            Outcome::Infeasible
        },
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CombinedRow {
    curve: String,
    scheme: Scheme,
    strategy: Strategy,
    metric: MetricKind,
    w: f64,
    #[serde(rename = "L_p_star")]
    lp_star: f64,
    lambda_star: f64,
    f_sg: f64,
    f_gd: f64,
    y_g: f64,
    #[serde(rename = "G_flow")]
    g_flow: f64,
    objective: f64,
    feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub tool: String,
    pub config: String,
    pub files: Vec<FileHash>,
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub curves: Vec<CurveRecord>,
    pub scenarios: Vec<(String, Vec<ResultRow>)>,
    pub per_curve: Vec<(String, Vec<ResultRow>)>,
    pub manifest: PipelineManifest,
    pub outcome: Outcome,
}

/// gen-dataset, measure, fit, then sweeps of every configured scenario and
/// of every fitted curve on the first scenario's topology.
pub fn pipeline(
    cfg: &PipelineConfig,
    config_dir: &Path,
    out: &Path,
    jobs: usize,
) -> anyhow::Result<PipelineSummary> {
    cfg.validate()?;
    let hash = cfg.hash();
    gen_dataset(cfg, out)?;
    measure(cfg, out, jobs)?;
    let curves = fit(cfg, out)?;

    let scenarios: Vec<LoadedScenario> = if cfg.scenarios.is_empty() {
        BUNDLED_SCENARIOS
            .iter()
            .map(|(name, text)| LoadedScenario::from_text(name, text, out, None, None))
            .collect::<anyhow::Result<_>>()?
    } else {
        cfg.scenarios
            .iter()
            .map(|p| LoadedScenario::load(&artifact::resolve(p, &[config_dir])?, Some(out), None))
            .collect::<anyhow::Result<_>>()?
    };
    let scenarios: Vec<LoadedScenario> = scenarios
        .into_iter()
        .filter(|s| cfg.metrics.contains(&s.file.metric))
        .collect();

    let mut written = Vec::new();
    let mut scenario_rows = Vec::new();
    for sc in &scenarios {
        let rows = sc
            .run(&cfg.w_values)
            .with_context(|| format!("scenario {}", sc.name))?;
        let path = out.join(format!("{}.csv", sc.name));
        write_results(&path, &rows, hash)?;
        written.push(path);
        scenario_rows.push((sc.name.clone(), rows));
    }

    let mut per_curve = Vec::new();
    if let Some(base) = scenarios.first() {
        let jobs_list: Vec<LoadedScenario> = curves
            .iter()
            .map(|r| base.with_curve(curve_stem(r.scheme, r.strategy, r.metric), r.clone()))
            .collect();
        let results = par_map(&jobs_list, jobs, |_, sc| sc.run(&cfg.w_values));
        let mut combined = csv::WriterBuilder::new().from_writer(Vec::new());
        for (sc, rows) in jobs_list.iter().zip(results) {
            let rows = rows.with_context(|| format!("sweeping {}", sc.name))?;
            let path = out.join(SWEEPS_DIR).join(format!("{}.csv", sc.name));
            write_results(&path, &rows, hash)?;
            written.push(path);
            for r in &rows {
                combined.serialize(CombinedRow {
                    curve: sc.name.clone(),
                    scheme: sc.curve.scheme,
                    strategy: sc.curve.strategy,
                    metric: sc.curve.metric,
                    w: r.w,
                    lp_star: r.lp_star,
                    lambda_star: r.lambda_star,
                    f_sg: r.f_sg,
                    f_gd: r.f_gd,
                    y_g: r.y_g,
                    g_flow: r.g_flow,
                    objective: r.objective,
                    feasible: r.feasible,
                })?;
            }
            per_curve.push((sc.name.clone(), rows));
        }
        let mut bytes = format!("# {}\n", csv_comment(hash)).into_bytes();
        bytes.extend(combined.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?);
        let path = out.join(SWEEPS_DIR).join("combined.csv");
        write_file(&path, &bytes)?;
        written.push(path);
    }

    let mut files = Vec::new();
    let dataset_manifest = out.join(DATASET_DIR).join(MANIFEST_FILE);
    files.push(FileHash::of(out, &dataset_manifest)?);
    files.push(FileHash::of(out, &out.join(SAMPLES_FILE))?);
    for r in &curves {
        let p = out.join(CURVES_DIR).join(format!(
            "{}.json",
            curve_stem(r.scheme, r.strategy, r.metric)
        ));
        files.push(FileHash::of(out, &p)?);
    }
    for p in &written {
        files.push(FileHash::of(out, p)?);
    }
    let manifest = PipelineManifest {
        tool: format!("genflow {}", artifact::VERSION),
        config: hex(hash),
        files,
    };
    write_file(
        &out.join(MANIFEST_FILE),
        &artifact::to_json_pretty(&manifest)?,
    )?;

    let all_ok = scenario_rows
        .iter()
        .chain(per_curve.iter())
        .all(|(_, rows)| outcome(rows) == Outcome::Ok);
    Ok(PipelineSummary {
        curves,
        scenarios: scenario_rows,
        per_curve,
        manifest,
        outcome: if all_ok {
            Outcome::Ok
        } else {
            Outcome::Infeasible
        },
    })
}
