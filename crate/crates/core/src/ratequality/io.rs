use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{CurveError, CurveFamily, RateQualityCurve, SamplePoint, Scheme, Strategy};
use crate::metrics::MetricKind;
use crate::Scalar;

/// Writes `# <comment>` and then `bpp,value,metric,scheme,strategy` rows.
pub fn write_samples_csv<W: Write>(
    mut out: W,
    samples: &[SamplePoint],
    comment: &str,
) -> Result<(), CurveError> {
    for line in comment.lines() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads sample rows, skipping `#` comment lines.
pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<SamplePoint>, CurveError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["bpp", "value", "metric", "scheme", "strategy"] {
        return Err(CurveError::InvalidSample(format!(
            "unexpected header {headers:?}"
        )));
    }
    r.deserialize()
        .map(|row| {
            let s: SamplePoint = row?;
            s.validate()?;
            Ok(s)
        })
        .collect()
}

/// On-disk form of a fitted curve with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRecord {
    pub family: CurveFamily,
    pub params: Vec<f64>,
    pub domain: [f64; 2],
    pub r2: f64,
    pub metric: MetricKind,
    pub scheme: Scheme,
    pub strategy: Strategy,
    /// FNV-1a hash (hex) of the sample CSV the curve was fitted to.
    pub provenance: String,
    pub feature_extractor: String,
    /// Result of the post-hoc non-increasing check on a 1000-point grid.
    pub monotone: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fid_max: Option<f64>,
}

impl CurveRecord {
    pub fn new<F: Scalar>(
        curve: &RateQualityCurve<F>,
        scheme: Scheme,
        strategy: Strategy,
        provenance: String,
        fid_max: Option<F>,
    ) -> Self {
        let (lo, hi) = curve.domain();
        Self {
            family: curve.family(),
            params: curve.params().iter().map(|p| p.to_f64_lossy()).collect(),
            domain: [lo.to_f64_lossy(), hi.to_f64_lossy()],
            r2: curve.r2().to_f64_lossy(),
            metric: curve.metric(),
            scheme,
            strategy,
            provenance,
            feature_extractor: crate::metrics::FEATURE_EXTRACTOR_VERSION.to_string(),
            monotone: curve.is_non_increasing(1000),
            fid_max: fid_max.map(|v| v.to_f64_lossy()),
        }
    }

    pub fn curve<F: Scalar>(&self) -> Result<RateQualityCurve<F>, CurveError> {
        RateQualityCurve::new(
            self.family,
            self.params.iter().map(|&p| F::lit(p)).collect(),
            F::lit(self.domain[0]),
            F::lit(self.domain[1]),
            self.metric,
            F::lit(self.r2),
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CurveError> {
        let rec: Self = serde_json::from_str(text)?;
        rec.curve::<f64>()?;
        Ok(rec)
    }
}
