//! Bounded-deviation solver: invariant graphs near a section whose vertical
//! defect is controlled uniformly in the horizontal variable.

use crate::bundle::{
    sup_dist, AbParams, GapAudit, GeneratingPair, Grid, GridGraph, Interp, SectionPair, SolveError,
    SolveReport,
};

use super::engine::{enforce_certificates, run_graph_iteration, ChangeMetric};
use super::{GraphSolution, SolverOptions};

/// Solve for the invariant graph whose deviation from `i_Y` is bounded by
/// `eta / (1 - lambda_bar_1)` fiberwise.
///
/// Unlike [`super::solve_invariant_graph`] this requires the vertical defect
/// bound to hold uniformly in the horizontal variable,
/// `sup_x |G_m(x, i_Y(u(m))) - i_Y(m)| <= eta(m)`, demands only the defect
/// feedback rate `lambda_bar_1 < 1` instead of the full contraction factor,
/// and imposes no hypotheses on `i_X`. Fibers with `eta = 0` are exactly
/// invariant and stay pinned at `i_Y`.
pub fn solve_invariant_graph_bounded(
    pair: &GeneratingPair,
    sections: &SectionPair,
    params: &AbParams,
    grid: &Grid,
    interp: Interp,
    opts: &SolverOptions,
) -> Result<GraphSolution, SolveError> {
    opts.validate()?;
    let base = pair.base();
    let fibers = pair.fibers();
    let n = base.count();
    if sections.base_count() != n {
        return Err(SolveError::InvalidSection(
            "section base size disagrees with the correspondence".into(),
        ));
    }
    sections.check_in_fibers(fibers)?;
    if grid.dim() != fibers.dim_x {
        return Err(SolveError::InvalidSection(
            "grid dimension disagrees with the horizontal fibers".into(),
        ));
    }
    if fibers.dim_x > 0 && grid.radius() > fibers.radius_x * (1.0 + 1e-12) {
        return Err(SolveError::InvalidSection(
            "grid radius exceeds the horizontal fiber ball".into(),
        ));
    }

    let angle = params.angle_sup(base)?;
    if !(angle < 1.0) {
        return Err(SolveError::AngleConditionViolated {
            product: angle,
            limit: 1.0,
        });
    }
    let lb1 = params.lambda_bar_1(base)?;
    let mut gap = GapAudit::new();
    if !gap.require_below("defect feedback rate", lb1, 1.0) && !opts.force {
        return Err(SolveError::SpectralGapViolated(format!(
            "defect feedback rate {lb1:.6} is not below one"
        )));
    }

    let eta_slack = 1e-9 * sections.max_eta() + 1e-12;
    let mut worst_unif = f64::MIN;
    for m in 0..n {
        let up = base.u(m);
        let mut meas = 0.0f64;
        for node in 0..grid.node_count() {
            let g = pair.eval_g(m, &grid.node(node), sections.i_y(up));
            meas = meas.max(sup_dist(&g, sections.i_y(m)));
        }
        worst_unif = worst_unif.max(meas - sections.eta(m));
    }
    if !gap.require_at_most(
        "uniform vertical defect bound",
        worst_unif.max(0.0),
        eta_slack,
    ) && !opts.force
    {
        return Err(SolveError::BoundednessViolated(format!(
            "uniform vertical defect bound violated by {worst_unif:.6e} (allowed slack {eta_slack:.6e})"
        )));
    }
    let worst_chain = (0..n)
        .map(|m| {
            let e1 = params.epsilon1.as_ref().map_or(0.0, |e| e[m]);
            sections.eta(base.u(m)) - e1 * sections.eta(m)
        })
        .fold(f64::MIN, f64::max);
    if !gap.require_at_most("defect decay chain", worst_chain.max(0.0), eta_slack) && !opts.force {
        return Err(SolveError::BoundednessViolated(format!(
            "defect decay chain violated by {worst_chain:.6e} (allowed slack {eta_slack:.6e})"
        )));
    }

    let start = GridGraph::from_fn(grid.clone(), n, fibers.dim_y, interp, |m, _| {
        sections.i_y(m).to_vec()
    });
    let out = run_graph_iteration(
        pair,
        &start,
        params,
        ChangeMetric::EtaWeighted(sections.eta_slice()),
        lb1,
        opts,
        &mut gap,
    )?;

    let k_bound = if lb1 < 1.0 {
        1.0 / (1.0 - lb1)
    } else {
        f64::INFINITY
    };
    let slack = 10.0 * opts.tol_outer + 1e-12;
    let mut worst_ratio = 0.0f64;
    let mut worst_pinned = 0.0f64;
    for m in 0..n {
        let mut dev = 0.0f64;
        for node in 0..grid.node_count() {
            dev = dev.max(sup_dist(out.f.node_value(m, node), sections.i_y(m)));
        }
        if sections.eta(m) > 0.0 {
            worst_ratio = worst_ratio.max(dev / sections.eta(m));
        } else {
            worst_pinned = worst_pinned.max(dev);
        }
    }
    gap.require_at_most("bounded deviation rate", worst_ratio, k_bound + slack);
    gap.require_at_most("pinned fiber deviation", worst_pinned, slack);
    enforce_certificates(&gap, opts.force)?;

    let report = SolveReport {
        outer_iterations: out.outer_iterations,
        final_change: out.final_change,
        contraction_estimate: out.contraction_estimate,
        theta_bound: lb1,
        gap,
        inner: out.inner,
        sup_graph_norm: out.f.sup_norm_values(),
        max_lipschitz: out.f.max_lipschitz(),
    };
    Ok(GraphSolution {
        graph: out.f,
        x_map: out.x_map,
        report,
    })
}
