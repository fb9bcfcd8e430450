use super::{GenScenario, OptError, OptimizationResult};
use crate::Scalar;

/// Uniform grid size of the first search stage.
pub const GRID_POINTS: usize = 2048;

const REFINE_TOL: f64 = 1e-6;

/// Maximizes the objective over the admissible prompt sizes.
///
/// A uniform grid (plus the capacity kink) locates the best cell, and
/// golden-section search refines inside the neighbouring cells. Among equal
/// objective values the smallest `L_p` wins. An empty admissible interval
/// yields a result with `feasible == false`.
pub fn optimize_prompt_size<F: Scalar>(
    scenario: &GenScenario<F>,
) -> Result<OptimizationResult<F>, OptError> {
    let Some((lo, hi)) = scenario.admissible_interval() else {
        return Ok(scenario.infeasible());
    };
    let mut xs = linspace(lo, hi, GRID_POINTS);
    let kink = scenario.capacity_bound();
    if kink > lo && kink < hi {
        xs.push(kink);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
    }
    let value = |x: F| scenario.evaluate(x).map(|r| r.objective);

    let mut best = 0;
    let mut best_val = value(xs[0])?;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        let v = value(x)?;
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    let mut best_x = xs[best];

    // the objective is smooth inside each cell, so refine on either side
    let tol = F::lit(REFINE_TOL);
    for (a, b) in [
        (best.saturating_sub(1), best),
        (best, (best + 1).min(xs.len() - 1)),
    ] {
        if a == b {
            continue;
        }
        let (x, v) = golden_max(xs[a], xs[b], tol, &value)?;
        if v > best_val || (v == best_val && x < best_x) {
            best_x = x;
            best_val = v;
        }
    }
    scenario.evaluate(best_x)
}

fn linspace<F: Scalar>(lo: F, hi: F, n: usize) -> Vec<F> {
    if hi <= lo || n < 2 {
        return vec![lo];
    }
    let step = (hi - lo) / F::lit((n - 1) as f64);
    let mut xs: Vec<F> = (0..n - 1).map(|k| lo + step * F::lit(k as f64)).collect();
    xs.push(hi);
    xs
}

fn golden_max<F: Scalar>(
    mut a: F,
    mut b: F,
    tol: F,
    f: &impl Fn(F) -> Result<F, OptError>,
) -> Result<(F, F), OptError> {
    let inv_phi = F::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        // keep the left part on ties so equal plateaus drift to smaller L_p
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        if b - a <= F::epsilon() * b.abs() {
            break;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Runs [`optimize_prompt_size`] once per weight.
pub fn sweep_w<F: Scalar>(
    scenario: &GenScenario<F>,
    ws: &[F],
) -> Result<Vec<OptimizationResult<F>>, OptError> {
    ws.iter()
        .map(|&w| optimize_prompt_size(&scenario.with_w(w)?))
        .collect()
}

/// Exhaustive reference solver over a `grid_n x grid_n` grid of
/// `(L_p, lambda)` pairs, checking every constraint directly and leaving
/// `lambda` free instead of using the closed form. The `L_p` grid includes
/// the constraint breakpoints so boundary optima are hit exactly.
pub fn brute_force_optimize<F: Scalar>(
    scenario: &GenScenario<F>,
    grid_n: usize,
) -> Result<OptimizationResult<F>, OptError> {
    let grid_n = grid_n.max(2);
    let l = scenario.true_bpp();
    let (x_lo, x_hi) = scenario.curve().domain();
    let (b_lo, b_hi) = scenario.search_bounds();
    let lo = x_lo.max(b_lo).max(F::min_positive_value());
    let hi = x_hi.min(b_hi).min(l);
    if lo > hi {
        return Ok(scenario.infeasible());
    }
    let (c_sg, c_gd, f_min, w) = (
        scenario.c_sg(),
        scenario.c_gd(),
        scenario.f_min(),
        scenario.w(),
    );
    let mut xs = linspace(lo, hi, grid_n);
    for extra in [scenario.capacity_bound(), f_min * l / c_gd] {
        if extra > lo && extra < hi {
            xs.push(extra);
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // relative slack for rounding at the breakpoints themselves
    let tol = F::lit(1e-12);
    let mut best: Option<(F, F, F)> = None;
    for &lp in &xs {
        let lam_max = (c_sg / lp).min(c_gd / l);
        let lam_min = (f_min / lp).max(F::zero());
        if !(lam_max > F::zero()) || lam_min > lam_max * (F::one() + tol) {
            continue;
        }
        let weight = (l - lp) * (F::one() - w * scenario.curve().eval(lp)?);
        for lam in linspace(lam_min.min(lam_max), lam_max, grid_n) {
            // every constraint, written out
            let (f_sg, f_gd) = (lam * lp, lam * l);
            if f_sg > c_sg * (F::one() + tol)
                || f_gd > c_gd * (F::one() + tol)
                || f_sg < f_min * (F::one() - tol)
            {
                continue;
            }
            let v = lam * weight;
            if best.is_none_or(|(_, _, bv)| v > bv) {
                best = Some((lp, lam, v));
            }
        }
    }
    let Some((lp, lambda, objective)) = best else {
        return Ok(scenario.infeasible());
    };
    let y_g = lambda * (l - lp);
    Ok(OptimizationResult {
        w,
        lp,
        lambda,
        f_sg: lambda * lp,
        f_gd: lambda * l,
        y_g,
        objective,
        g_flow: super::flow_gain(y_g, scenario.baseline_flow())?,
        feasible: true,
    })
}
