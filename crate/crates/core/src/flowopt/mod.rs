//! Prompt-size optimization at the generative node.
//!
//! For a prompt size `L_p` the generation rate is the largest `lambda` the
//! two links admit, `min(c_sg / L_p, c_gd / L)`, and the quantity maximized
//! is the quality-weighted generative out-flow `y_g (1 - w delta(L_p))` with
//! `y_g = lambda (L - L_p)`.

mod io;
mod solve;

use thiserror::Error;

use crate::flowgraph::{
    baseline_max_flow, max_flow, FlowAssignment, FlowError, NetworkTopology, NodeRole,
};
use crate::metrics::MetricKind;
use crate::ratequality::{CurveError, RateQualityCurve};
use crate::Scalar;

pub use io::{
    read_results_csv, write_results_csv, ResultRow, ScenarioFile, DEFAULT_PROMPT_FLOOR,
    RESULT_HEADER,
};
pub use solve::{brute_force_optimize, optimize_prompt_size, sweep_w, GRID_POINTS};

#[derive(Debug, Error)]
pub enum OptError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{name} must be > 0, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("baseline max flow is zero")]
    ZeroBaseline,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn positive<F: Scalar>(name: &'static str, v: F) -> Result<(), OptError> {
    if v > F::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(OptError::NonPositive {
            name,
            value: v.to_f64_lossy(),
        })
    }
}

/// `min(c_sg / L_p, c_gd / L)`.
pub fn optimal_lambda<F: Scalar>(c_sg: F, c_gd: F, lp: F, l: F) -> Result<F, OptError> {
    positive("c_sg", c_sg)?;
    positive("c_gd", c_gd)?;
    positive("L_p", lp)?;
    positive("L", l)?;
    Ok((c_sg / lp).min(c_gd / l))
}

/// `y_g (1 - w delta(L_p))` with `y_g = lambda (L - L_p)`.
pub fn objective<F: Scalar>(
    lp: F,
    lambda: F,
    w: F,
    l: F,
    curve: &RateQualityCurve<F>,
) -> Result<F, OptError> {
    if !(lambda >= F::zero()) {
        return Err(OptError::InvalidScenario(format!(
            "lambda {lambda} must be >= 0"
        )));
    }
    let delta = curve.eval(lp)?;
    Ok(lambda * (l - lp) * (F::one() - w * delta))
}

/// `1 + y_g / f'_sd`.
pub fn flow_gain<F: Scalar>(y_g: F, f_prime_sd: F) -> Result<F, OptError> {
    if !(f_prime_sd > F::zero()) {
        return Err(OptError::ZeroBaseline);
    }
    Ok(F::one() + y_g / f_prime_sd)
}

/// Everything the optimizer needs, with link capacities resolved.
#[derive(Debug, Clone)]
pub struct GenScenario<F> {
    topology: NetworkTopology<F>,
    g: String,
    true_bpp: F,
    w: F,
    curve: RateQualityCurve<F>,
    search_bounds: (F, F),
    c_sg: F,
    c_gd: F,
    f_min: F,
    baseline: F,
}

impl<F: Scalar> GenScenario<F> {
    /// `c_sg` and `c_gd` are the capacities of the direct source-to-`g` and
    /// `g`-to-sink edges, the latter capped by the node's generation cap.
    /// `search_bounds` is a closed interval further restricting `L_p`.
    pub fn new(
        topology: NetworkTopology<F>,
        g: &str,
        true_bpp: F,
        w: F,
        curve: RateQualityCurve<F>,
        search_bounds: (F, F),
    ) -> Result<Self, OptError> {
        positive("L", true_bpp)?;
        if !(w >= F::zero()) || !w.is_finite() {
            return Err(OptError::InvalidScenario(format!("w = {w} must be >= 0")));
        }
        if !(search_bounds.0 <= search_bounds.1)
            || !search_bounds.0.is_finite()
            || !search_bounds.1.is_finite()
        {
            return Err(OptError::InvalidScenario(format!(
                "search bounds [{}, {}] are not an interval",
                search_bounds.0, search_bounds.1
            )));
        }
        let (f_min, cap) = match topology.node(g)?.role {
            NodeRole::Generative {
                f_min,
                generation_cap,
            } => (f_min, generation_cap),
            ref other => {
                return Err(OptError::InvalidScenario(format!(
                    "node `{g}` is a {} node, not generative",
                    other.name()
                )))
            }
        };
        let (s, d) = (topology.source().to_string(), topology.sink().to_string());
        let c_sg = topology
            .capacity(&s, g)?
            .ok_or_else(|| OptError::InvalidScenario(format!("no edge ({s}, {g})")))?;
        let mut c_gd = topology
            .capacity(g, &d)?
            .ok_or_else(|| OptError::InvalidScenario(format!("no edge ({g}, {d})")))?;
        if let Some(cap) = cap {
            c_gd = c_gd.min(cap);
        }
        let baseline = baseline_max_flow(&topology, &s, &d)?;
        Ok(Self {
            topology,
            g: g.to_string(),
            true_bpp,
            w,
            curve,
            search_bounds,
            c_sg,
            c_gd,
            f_min,
            baseline,
        })
    }

    pub fn with_w(&self, w: F) -> Result<Self, OptError> {
        if !(w >= F::zero()) || !w.is_finite() {
            return Err(OptError::InvalidScenario(format!("w = {w} must be >= 0")));
        }
        Ok(Self { w, ..self.clone() })
    }

    pub fn topology(&self) -> &NetworkTopology<F> {
        &self.topology
    }

    pub fn generative_node(&self) -> &str {
        &self.g
    }

    pub fn true_bpp(&self) -> F {
        self.true_bpp
    }

    pub fn w(&self) -> F {
        self.w
    }

    pub fn metric(&self) -> MetricKind {
        self.curve.metric()
    }

    pub fn curve(&self) -> &RateQualityCurve<F> {
        &self.curve
    }

    pub fn search_bounds(&self) -> (F, F) {
        self.search_bounds
    }

    pub fn c_sg(&self) -> F {
        self.c_sg
    }

    /// Effective `g -> d` capacity, after the generation cap.
    pub fn c_gd(&self) -> F {
        self.c_gd
    }

    pub fn f_min(&self) -> F {
        self.f_min
    }

    /// Replication-only max flow `f'_sd`.
    pub fn baseline_flow(&self) -> F {
        self.baseline
    }

    /// Prompt size above which the source link, not the output link,
    /// limits `lambda`: `c_sg L / c_gd`.
    pub fn capacity_bound(&self) -> F {
        self.c_sg * self.true_bpp / self.c_gd
    }

    /// Closed interval of prompt sizes meeting every constraint, or `None`.
    pub fn admissible_interval(&self) -> Option<(F, F)> {
        let (x_lo, x_hi) = self.curve.domain();
        if !(self.c_sg > F::zero()) || !(self.c_gd > F::zero()) || self.c_sg < self.f_min {
            return None;
        }
        // lambda L_p >= f_min holds on the c_sg branch by the check above and
        // on the c_gd branch once L_p >= f_min L / c_gd
        let fmin_bound = self.f_min * self.true_bpp / self.c_gd;
        let lo = x_lo
            .max(self.search_bounds.0)
            .max(fmin_bound)
            .max(F::min_positive_value());
        let hi = x_hi.min(self.search_bounds.1).min(self.true_bpp);
        (lo <= hi).then_some((lo, hi))
    }

    /// Evaluates the objective at `lp` with `lambda = optimal_lambda`.
    pub fn evaluate(&self, lp: F) -> Result<OptimizationResult<F>, OptError> {
        let lambda = optimal_lambda(self.c_sg, self.c_gd, lp, self.true_bpp)?;
        let objective = objective(lp, lambda, self.w, self.true_bpp, &self.curve)?;
        let f_sg = lambda * lp;
        let f_gd = lambda * self.true_bpp;
        let y_g = f_gd - f_sg;
        Ok(OptimizationResult {
            w: self.w,
            lp,
            lambda,
            f_sg,
            f_gd,
            y_g,
            objective,
            g_flow: flow_gain(y_g, self.baseline)?,
            feasible: true,
        })
    }

    fn infeasible(&self) -> OptimizationResult<F> {
        OptimizationResult {
            w: self.w,
            lp: F::nan(),
            lambda: F::zero(),
            f_sg: F::zero(),
            f_gd: F::zero(),
            y_g: F::zero(),
            objective: F::zero(),
            g_flow: F::one(),
            feasible: false,
        }
    }

    /// Edge flows realizing `result`: `f_sg` and `f_gd` on the generative
    /// route plus a replication max flow over the rest of the network.
    pub fn flow_assignment(
        &self,
        result: &OptimizationResult<F>,
    ) -> Result<FlowAssignment<F>, OptError> {
        let mut flow = FlowAssignment::zeros(&self.topology);
        let (s, d) = (self.topology.source(), self.topology.sink());
        let rest = self.topology.without_node(&self.g)?;
        let (_, rest_flow) = max_flow(&rest, s, d)?;
        let names = |t: &NetworkTopology<F>, e: usize| {
            let edge = t.edges()[e];
            (
                t.nodes()[edge.from].id.clone(),
                t.nodes()[edge.to].id.clone(),
            )
        };
        for e in 0..rest.edges().len() {
            let (a, b) = names(&rest, e);
            if let Some(i) = self.topology.edge_between(&a, &b)? {
                flow.flows[i] = rest_flow.get(e);
            }
        }
        if result.feasible {
            let sg = self
                .topology
                .edge_between(s, &self.g)?
                .expect("resolved at construction");
            let gd = self
                .topology
                .edge_between(&self.g, d)?
                .expect("resolved at construction");
            flow.flows[sg] = result.f_sg;
            flow.flows[gd] = result.f_gd;
        }
        Ok(flow)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationResult<F> {
    pub w: F,
    /// Optimal prompt size `L_p*`; NaN when infeasible.
    pub lp: F,
    pub lambda: F,
    pub f_sg: F,
    pub f_gd: F,
    pub y_g: F,
    pub objective: F,
    pub g_flow: F,
    pub feasible: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratequality::CurveFamily;

    pub(crate) fn two_route_topology(c_sg: f64, c_gd: f64, f_min: f64) -> NetworkTopology<f64> {
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

    pub(crate) fn exp_curve(lo: f64, hi: f64) -> RateQualityCurve<f64> {
        RateQualityCurve::new(
            CurveFamily::ExponentialDecay,
            vec![0.9, 0.4, 0.0],
            lo,
            hi,
            MetricKind::Perception,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(optimal_lambda(3.184, 48.0, 1.0, 24.0).unwrap(), 2.0);
        assert_eq!(optimal_lambda(5.0, 5.0, 24.0, 24.0).unwrap(), 5.0 / 24.0);
        assert!(optimal_lambda(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(optimal_lambda(1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let c = exp_curve(0.1, 24.0);
        let lambda = 0.7;
        assert_eq!(
            objective(2.0, lambda, 0.0, 24.0, &c).unwrap(),
            lambda * 22.0
        );
        let d = c.eval(2.0).unwrap();
        assert!(objective(2.0, lambda, 1.0 / d, 24.0, &c).unwrap().abs() < 1e-12);
        assert!(objective(0.05, lambda, 1.0, 24.0, &c).is_err());
        let flat = RateQualityCurve::new(
            CurveFamily::Polynomial(1),
            vec![0.0, 0.0],
            0.1,
            24.0,
            MetricKind::Distortion,
            1.0,
        )
        .unwrap();
        assert_eq!(objective(3.0, 2.0, 5.0, 24.0, &flat).unwrap(), 42.0);
    }

    #[test]
    fn gain_examples() {
        assert_eq!(flow_gain(0.0, 13.0).unwrap(), 1.0);
        assert_eq!(flow_gain(13.0, 13.0).unwrap(), 2.0);
        assert_eq!(flow_gain(6.5, 13.0).unwrap(), 1.5);
        assert!(matches!(flow_gain(1.0, 0.0), Err(OptError::ZeroBaseline)));
    }

    #[test]
    fn scenario_resolution() {
        let sc = GenScenario::new(
            two_route_topology(3.184, 24.0, 0.1),
            "g",
            24.0,
            0.5,
            exp_curve(0.1, 24.0),
            (1.0, 24.0),
        )
        .unwrap();
        assert_eq!(sc.c_sg(), 3.184);
        assert_eq!(sc.c_gd(), 24.0);
        assert!((sc.baseline_flow() - 13.184).abs() < 1e-12);
        assert!((sc.capacity_bound() - 3.184).abs() < 1e-12);
        assert_eq!(sc.admissible_interval(), Some((1.0, 24.0)));
        assert!(GenScenario::new(
            two_route_topology(3.0, 24.0, 0.1),
            "r",
            24.0,
            0.5,
            exp_curve(0.1, 24.0),
            (1.0, 24.0)
        )
        .is_err());
        assert!(GenScenario::new(
            two_route_topology(3.0, 24.0, 0.1),
            "g",
            24.0,
            -1.0,
            exp_curve(0.1, 24.0),
            (1.0, 24.0)
        )
        .is_err());

        let capped = NetworkTopology::new(
            vec![
                ("s", NodeRole::Source),
                (
                    "g",
                    NodeRole::Generative {
                        f_min: 0.0,
                        generation_cap: Some(6.0),
                    },
                ),
                ("d", NodeRole::Sink),
            ],
            vec![("s", "g", 2.0), ("g", "d", 24.0)],
        )
        .unwrap();
        let sc =
            GenScenario::new(capped, "g", 24.0, 0.0, exp_curve(0.1, 24.0), (0.1, 24.0)).unwrap();
        assert_eq!(sc.c_gd(), 6.0);
    }

    #[test]
    fn f_min_shapes_the_interval() {
        // c_sg below f_min: nothing is feasible
        let sc = GenScenario::new(
            two_route_topology(0.5, 24.0, 1.0),
            "g",
            24.0,
            0.5,
            exp_curve(0.1, 24.0),
            (0.1, 24.0),
        )
        .unwrap();
        assert_eq!(sc.admissible_interval(), None);
        // c_gd branch: lambda = c_gd / L = 0.25, so L_p >= f_min / 0.25 = 4
        let sc = GenScenario::new(
            two_route_topology(10.0, 6.0, 1.0),
            "g",
            24.0,
            0.5,
            exp_curve(0.1, 24.0),
            (0.1, 24.0),
        )
        .unwrap();
        assert_eq!(sc.admissible_interval(), Some((4.0, 24.0)));
    }
}
