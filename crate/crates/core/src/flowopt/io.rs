use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GenScenario, OptError, OptimizationResult};
use crate::flowgraph::{NodeRole, TopologySpec};
use crate::metrics::MetricKind;
use crate::ratequality::RateQualityCurve;
use crate::Scalar;

/// Lower search bound used when a scenario gives none: prompt sizes must
/// exceed 1 bpp.
pub const DEFAULT_PROMPT_FLOOR: f64 = 1.0 + 1e-9;

/// Scenario as stored on disk. `curve` is a path to a curve JSON file,
/// resolved by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub topology: TopologySpec,
    pub g: String,
    #[serde(rename = "L")]
    pub true_bpp: f64,
    #[serde(default)]
    pub w: f64,
    /// Weights for a sweep; `w` alone is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_values: Option<Vec<f64>>,
    pub metric: MetricKind,
    pub curve: String,
    /// Must agree with the generative node's own `f_min` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    /// Closed `[lo, hi]` restriction on `L_p`; defaults to
    /// `[DEFAULT_PROMPT_FLOOR, L]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_bounds: Option<[f64; 2]>,
}

impl ScenarioFile {
    pub fn from_json_str(text: &str) -> Result<Self, OptError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, OptError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String, OptError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn weights(&self) -> Vec<f64> {
        self.w_values.clone().unwrap_or_else(|| vec![self.w])
    }

    pub fn build<F: Scalar>(&self, curve: RateQualityCurve<F>) -> Result<GenScenario<F>, OptError> {
        if curve.metric() != self.metric {
            return Err(OptError::InvalidScenario(format!(
                "scenario metric is {} but the curve is {}",
                self.metric,
                curve.metric()
            )));
        }
        let topology = self.topology.build::<F>()?;
        if let Some(f_min) = self.f_min {
            if let NodeRole::Generative {
                f_min: role_min, ..
            } = topology.node(&self.g)?.role
            {
                if (role_min.to_f64_lossy() - f_min).abs() > 1e-12 * f_min.abs().max(1.0) {
                    return Err(OptError::InvalidScenario(format!(
                        "f_min {f_min} differs from node `{}` f_min {role_min}",
                        self.g
                    )));
                }
            }
        }
        let [lo, hi] = self
            .search_bounds
            .unwrap_or([DEFAULT_PROMPT_FLOOR, self.true_bpp]);
        GenScenario::new(
            topology,
            &self.g,
            F::lit(self.true_bpp),
            F::lit(self.w),
            curve,
            (F::lit(lo), F::lit(hi)),
        )
    }
}

/// One line of the optimization result table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub w: f64,
    #[serde(rename = "L_p_star")]
    pub lp_star: f64,
    pub lambda_star: f64,
    pub f_sg: f64,
    pub f_gd: f64,
    pub y_g: f64,
    #[serde(rename = "G_flow")]
    pub g_flow: f64,
    pub objective: f64,
    pub feasible: bool,
}

impl<F: Scalar> From<&OptimizationResult<F>> for ResultRow {
    fn from(r: &OptimizationResult<F>) -> Self {
        Self {
            w: r.w.to_f64_lossy(),
            lp_star: r.lp.to_f64_lossy(),
            lambda_star: r.lambda.to_f64_lossy(),
            f_sg: r.f_sg.to_f64_lossy(),
            f_gd: r.f_gd.to_f64_lossy(),
            y_g: r.y_g.to_f64_lossy(),
            g_flow: r.g_flow.to_f64_lossy(),
            objective: r.objective.to_f64_lossy(),
            feasible: r.feasible,
        }
    }
}

pub const RESULT_HEADER: [&str; 9] = [
    "w",
    "L_p_star",
    "lambda_star",
    "f_sg",
    "f_gd",
    "y_g",
    "G_flow",
    "objective",
    "feasible",
];

/// Writes `#`-prefixed comment lines followed by the result table.
pub fn write_results_csv<W: Write>(
    mut out: W,
    rows: &[ResultRow],
    comment: &str,
) -> Result<(), OptError> {
    for line in comment.lines() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, OptError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    if r.headers()?.iter().collect::<Vec<_>>() != RESULT_HEADER {
        return Err(OptError::InvalidScenario("unexpected result header".into()));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratequality::CurveFamily;

    const TWO_ROUTE: &str = r#"{
        "topology": {
            "nodes": [
                {"id": "s", "role": "source"},
                {"id": "r", "role": "relay"},
                {"id": "g", "role": "generative", "f_min": 0.1},
                {"id": "d", "role": "sink"}
            ],
            "edges": [
                {"from": "s", "to": "r", "capacity": 10},
                {"from": "r", "to": "d", "capacity": 10},
                {"from": "s", "to": "g", "capacity": 3.184},
                {"from": "g", "to": "d", "capacity": 24}
            ]
        },
        "g": "g", "L": 24, "w": 0.3, "metric": "perception",
        "curve": "curve.json", "f_min": 0.1
    }"#;

    fn curve(metric: MetricKind) -> RateQualityCurve<f64> {
        RateQualityCurve::new(
            CurveFamily::ExponentialDecay,
            vec![0.9, 0.4, 0.0],
            0.1,
            24.0,
            metric,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn scenario_round_trip_and_build() {
        let sf = ScenarioFile::from_json_str(TWO_ROUTE).unwrap();
        assert_eq!(
            ScenarioFile::from_json_str(&sf.to_json().unwrap()).unwrap(),
            sf
        );
        assert_eq!(sf.weights(), vec![0.3]);
        let sc = sf.build(curve(MetricKind::Perception)).unwrap();
        assert_eq!(sc.search_bounds(), (DEFAULT_PROMPT_FLOOR, 24.0));
        assert_eq!(sc.w(), 0.3);
        assert!(sf.build(curve(MetricKind::Distortion)).is_err());
        let mut bad = sf.clone();
        bad.f_min = Some(0.2);
        assert!(bad.build(curve(MetricKind::Perception)).is_err());
        assert!(ScenarioFile::from_json_str(
            &TWO_ROUTE.replace("\"g\": \"g\"", "\"g\": \"g\", \"x\": 1")
        )
        .is_err());
    }

    #[test]
    fn results_round_trip() {
        let sf = ScenarioFile::from_json_str(TWO_ROUTE).unwrap();
        let sc = sf.build(curve(MetricKind::Perception)).unwrap();
        let rows: Vec<ResultRow> = super::super::sweep_w(&sc, &[0.0, 0.5, 1.0])
            .unwrap()
            .iter()
            .map(ResultRow::from)
            .collect();
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &rows, "genflow test").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "# genflow test\nw,L_p_star,lambda_star,f_sg,f_gd,y_g,G_flow,objective,feasible\n"
        ));
        assert_eq!(read_results_csv(&buf[..]).unwrap(), rows);
    }
}
