//! Outer iteration loop and post-hoc certificates shared by the solvers.

use crate::bundle::{
    implicit_solve, median_step_ratio, AbParams, DiscreteBase, GapAudit, GeneratingPair, GridGraph,
    InnerStats, SectionPair, SolveError,
};

use super::step::graph_transform_step;
use super::SolverOptions;

/// How the change between consecutive sweeps is measured.
pub(crate) enum ChangeMetric<'a> {
    /// Plain sup distance over all fibers and nodes.
    Sup,
    /// Sup distance weighted per fiber by the given defect bounds; fibers
    /// with a nonpositive weight are excluded (they never move).
    EtaWeighted(&'a [f64]),
}

impl ChangeMetric<'_> {
    fn distance(&self, a: &GridGraph, b: &GridGraph) -> f64 {
        match self {
            ChangeMetric::Sup => a.sup_distance(b),
            ChangeMetric::EtaWeighted(eta) => a.weighted_sup_distance(b, eta),
        }
    }
}

#[derive(Debug)]
pub(crate) struct EngineOutcome {
    pub f: GridGraph,
    /// Horizontal node map solved against the final graph.
    pub x_map: GridGraph,
    pub outer_iterations: usize,
    pub final_change: f64,
    pub contraction_estimate: f64,
    pub inner: InnerStats,
}

/// Unconditional bound `sup_m lambda_u(m) / (1 - alpha(m) beta'(u(m)))` on
/// the plain-sup step ratio of the transform.
///
/// The certified contraction rate of a solve only governs differences
/// anchored at the distinguished section; consecutive sweeps from an
/// arbitrary admissible start contract at this rate instead, so the
/// step-ratio certificate uses whichever of the two is larger.
pub(crate) fn sup_step_rate(params: &AbParams, base: &DiscreteBase) -> Result<f64, SolveError> {
    let vartheta = params.vartheta(base)?;
    Ok((0..params.len())
        .map(|m| params.lambda_u[m] * vartheta[m])
        .fold(0.0f64, f64::max))
}

fn fiber_sup_distance(a: &GridGraph, b: &GridGraph, m: usize) -> f64 {
    let mut worst = 0.0f64;
    for node in 0..a.grid().node_count() {
        for (x, y) in a.node_value(m, node).iter().zip(b.node_value(m, node)) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// Iterate the graph transform from `start` until the per-sweep change drops
/// to the outer tolerance, then run one more sweep on the converged graph to
/// measure the invariance residual and to solve the horizontal map against
/// the final graph.
///
/// Records the contraction-rate certificate against `ratio_bound` and the
/// residual certificate into `gap`; the caller adds its own and decides
/// enforcement.
pub(crate) fn run_graph_iteration(
    pair: &GeneratingPair,
    start: &GridGraph,
    params: &AbParams,
    metric: ChangeMetric<'_>,
    ratio_bound: f64,
    opts: &SolverOptions,
    gap: &mut GapAudit,
) -> Result<EngineOutcome, SolveError> {
    let inner = opts.inner();
    let mut f = start.clone();
    let mut steps = Vec::new();
    let mut inner_stats = InnerStats::default();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    for iter in 1..=opts.max_outer_iter {
        let (f_new, _, st) = graph_transform_step(pair, &f, params, &inner)?;
        inner_stats.merge(&st);
        let change = metric.distance(&f_new, &f);
        if !change.is_finite() {
            return Err(SolveError::NonFinite(iter));
        }
        f = f_new;
        steps.push(change);
        iterations = iter;
        last_change = change;
        if change <= opts.tol_outer {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SolveError::MaxIterExceeded { last_change });
    }

    let (f_check, x_map, st) = graph_transform_step(pair, &f, params, &inner)?;
    inner_stats.merge(&st);
    let residual = metric.distance(&f_check, &f);
    let contraction_estimate = median_step_ratio(&steps, opts.tol_outer);
    gap.require_at_most(
        "contraction ratio",
        contraction_estimate,
        ratio_bound * 1.05 + 1e-9,
    );
    gap.require_at_most("invariance residual", residual, 10.0 * opts.tol_outer);
    if let ChangeMetric::EtaWeighted(eta) = metric {
        let mut worst = 0.0f64;
        for (m, &w) in eta.iter().enumerate() {
            if w <= 0.0 {
                worst = worst.max(fiber_sup_distance(&f_check, &f, m));
            }
        }
        gap.require_at_most("pinned-fiber residual", worst, 10.0 * opts.tol_outer);
    }

    Ok(EngineOutcome {
        f,
        x_map,
        outer_iterations: iterations,
        final_change: last_change,
        contraction_estimate,
        inner: inner_stats,
    })
}

/// Turn the first failed audit entry into an error unless `force` is set.
pub(crate) fn enforce_certificates(gap: &GapAudit, force: bool) -> Result<(), SolveError> {
    if force {
        return Ok(());
    }
    match gap.first_failure() {
        None => Ok(()),
        Some(check) => Err(SolveError::CertificateViolated(format!(
            "{} = {:.6e} vs limit {:.6e}",
            check.name, check.value, check.limit
        ))),
    }
}

/// Check the measured node-to-node slopes of the graph and the horizontal
/// map against their certified Lipschitz bounds, allowing the discretisation
/// slack `2 h * curvature` per fiber.
pub(crate) fn record_lipschitz_certificates(
    f: &GridGraph,
    x_map: &GridGraph,
    params: &AbParams,
    gap: &mut GapAudit,
) {
    let h = f.grid().spacing();
    let mut worst_f = f64::NEG_INFINITY;
    let mut worst_x = f64::NEG_INFINITY;
    for m in 0..f.base_count() {
        let slack_f = 2.0 * h * f.second_difference_bound(m);
        worst_f = worst_f.max(f.lipschitz_estimate(m) - params.beta_prime[m] - slack_f);
        let slack_x = 2.0 * h * x_map.second_difference_bound(m);
        worst_x = worst_x.max(x_map.lipschitz_estimate(m) - params.lambda_s[m] - slack_x);
    }
    let tol_f = 1e-9 * (1.0 + params.sup_beta_prime()) + 1e-12;
    gap.require_at_most("graph Lipschitz excess", worst_f.max(0.0), tol_f);
    let tol_x = 1e-9 * (1.0 + params.sup_lambda_s()) + 1e-12;
    gap.require_at_most("horizontal Lipschitz excess", worst_x.max(0.0), tol_x);
}

/// Check the displacement of the solved graph and horizontal map over the
/// input section against the certified multiples of the defect bounds.
///
/// The horizontal fixed point is re-solved at `i_X(m)` rather than read off
/// the stored node map, so the only discretisation error left is the
/// interpolation of the graph itself; that enters through the curvature term
/// of the slack.
#[allow(clippy::too_many_arguments)]
pub(crate) fn record_displacement_certificates(
    pair: &GeneratingPair,
    sections: &SectionPair,
    f: &GridGraph,
    k1: Option<f64>,
    k2: Option<f64>,
    opts: &SolverOptions,
    gap: &mut GapAudit,
    inner_stats: &mut InnerStats,
) -> Result<(), SolveError> {
    if k1.is_none() && k2.is_none() {
        return Ok(());
    }
    let base = pair.base();
    let h = f.grid().spacing();
    let max_curv = (0..f.base_count())
        .map(|m| f.second_difference_bound(m))
        .fold(0.0f64, f64::max);
    let slack = 10.0 * opts.tol_outer + 1e-12 + 0.25 * max_curv * h * h;
    let inner = opts.inner();
    let mut worst_f = 0.0f64;
    let mut worst_x = 0.0f64;
    for m in 0..base.count() {
        let up = base.u(m);
        let ix = sections.i_x(m);
        let out = implicit_solve(|xh| pair.eval_f(m, ix, &f.eval(up, xh)), ix, &inner)?;
        inner_stats.record(out.iterations, out.residual);
        if let Some(k1) = k1 {
            let g = pair.eval_g(m, ix, &f.eval(up, &out.value));
            let dev: f64 = g
                .iter()
                .zip(sections.i_y(m))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_f = worst_f.max(dev - k1 * sections.eta(m));
        }
        if let Some(k2) = k2 {
            let dev: f64 = out
                .value
                .iter()
                .zip(sections.i_x(up))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_x = worst_x.max(dev - k2 * sections.eta(up));
        }
    }
    if k1.is_some() {
        gap.require_at_most("graph displacement excess", worst_f, slack);
    }
    if k2.is_some() {
        gap.require_at_most("horizontal displacement excess", worst_x, slack);
    }
    Ok(())
}
