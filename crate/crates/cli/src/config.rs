use serde::{Deserialize, Serialize};

use genflow::fnv1a64;
use genflow::metrics::MetricKind;
use genflow::ratequality::MeasureConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSpec {
    pub count: usize,
    pub width: usize,
    pub height: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            count: 256,
            width: 64,
            height: 64,
        }
    }
}

/// Everything `pipeline` and the per-stage commands read. Paths are
/// relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub gammas: Vec<f64>,
    pub jpeg_pe_qualities: Vec<u32>,
    pub jpeg_ps_qualities: [u32; 3],
    pub metrics: Vec<MetricKind>,
    /// Quality weights swept for every fitted curve.
    pub w_values: Vec<f64>,
    /// Scenario files to sweep; the bundled ones when empty. The first
    /// scenario's topology is also used for the per-curve sweeps.
    pub scenarios: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let m = MeasureConfig::default();
        Self {
            seed: 0,
            dataset: DatasetSpec::default(),
            gammas: m.gammas,
            jpeg_pe_qualities: m.jpeg_pe_qualities,
            jpeg_ps_qualities: m.jpeg_ps_qualities,
            metrics: vec![MetricKind::Distortion, MetricKind::Perception],
            w_values: vec![0.0, 0.5, 1.0],
            scenarios: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn measure_config(&self) -> MeasureConfig {
        MeasureConfig {
            gammas: self.gammas.clone(),
            jpeg_pe_qualities: self.jpeg_pe_qualities.clone(),
            jpeg_ps_qualities: self.jpeg_ps_qualities,
            seed: genflow::derive_seed(self.seed, 1),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.dataset.count >= 2, "dataset.count must be at least 2");
        anyhow::ensure!(
            self.dataset.width >= genflow::imaging::MIN_DIMENSION
                && self.dataset.height >= genflow::imaging::MIN_DIMENSION,
            "dataset dimensions must be at least {}",
            genflow::imaging::MIN_DIMENSION
        );
        anyhow::ensure!(!self.metrics.is_empty(), "no metrics selected");
        anyhow::ensure!(!self.w_values.is_empty(), "w_values is empty");
        anyhow::ensure!(
            self.w_values.iter().all(|w| w.is_finite() && *w >= 0.0),
            "w_values must be finite and >= 0"
        );
        self.measure_config().validate()?;
        Ok(())
    }

    /// FNV-1a of the canonical JSON form.
    pub fn hash(&self) -> u64 {
        fnv1a64(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}
