//! Global solver: the invariant graph over an almost-invariant section pair.

use crate::bundle::{
    sup_norm, AbParams, GapAudit, GeneratingPair, Grid, GridGraph, Interp, SectionPair, SolveError,
    SolveReport,
};

use super::engine::{
    enforce_certificates, record_displacement_certificates, record_lipschitz_certificates,
    run_graph_iteration, sup_step_rate, ChangeMetric,
};
use super::{GraphSolution, SolverOptions};

/// Solve for the invariant graph attracted by the transform, starting from
/// the graph constantly equal to `i_Y` on each fiber.
///
/// The sections' declared defect bounds are audited against the measured
/// defects and against the decay chain `eta(u(m)) <= epsilon1(m) eta(m)`,
/// `epsilon(m) <= eta(u(m))` before iterating; the returned graph carries
/// displacement certificates `|f(i_X) - i_Y| <= K1 eta` and
/// `|xh(i_X) - i_X o u| <= K2 eta o u` afterwards.
pub fn solve_invariant_graph(
    pair: &GeneratingPair,
    sections: &SectionPair,
    params: &AbParams,
    grid: &Grid,
    interp: Interp,
    opts: &SolverOptions,
) -> Result<GraphSolution, SolveError> {
    if sections.base_count() != pair.base().count() {
        return Err(SolveError::InvalidSection(
            "section base size disagrees with the correspondence".into(),
        ));
    }
    let start = GridGraph::from_fn(
        grid.clone(),
        sections.base_count(),
        sections.dim_y(),
        interp,
        |m, _| sections.i_y(m).to_vec(),
    );
    solve_invariant_graph_with_start(pair, sections, params, &start, opts)
}

/// As [`solve_invariant_graph`], but iterating from a caller-supplied start
/// graph; the solved graph must not depend on the choice.
pub fn solve_invariant_graph_with_start(
    pair: &GeneratingPair,
    sections: &SectionPair,
    params: &AbParams,
    start: &GridGraph,
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
    let grid = start.grid();
    if start.base_count() != n || start.dim_out() != fibers.dim_y || grid.dim() != fibers.dim_x {
        return Err(SolveError::InvalidSection(
            "start graph shape disagrees with the correspondence".into(),
        ));
    }
    if fibers.dim_x > 0 && grid.radius() > fibers.radius_x * (1.0 + 1e-12) {
        return Err(SolveError::InvalidSection(
            "grid radius exceeds the horizontal fiber ball".into(),
        ));
    }
    let node_bound = grid.radius() * (1.0 + 1e-9) + 1e-12;
    for m in 0..n {
        if sup_norm(sections.i_x(m)) > node_bound {
            return Err(SolveError::InvalidSection(format!(
                "i_X({m}) lies outside the grid ball"
            )));
        }
    }

    let angle = params.angle_sup(base)?;
    if !(angle < 1.0) {
        return Err(SolveError::AngleConditionViolated {
            product: angle,
            limit: 1.0,
        });
    }
    let theta = params.theta_contraction(base)?;
    let mut gap = GapAudit::new();
    if !gap.require_below("contraction factor", theta, 1.0) && !opts.force {
        return Err(SolveError::SpectralGapViolated(format!(
            "contraction factor {theta:.6} is not below one"
        )));
    }

    let eta_slack = 1e-9 * sections.max_eta() + 1e-12;
    let eps_slack = 1e-9 * sections.max_epsilon() + 1e-12;
    let (eta_meas, eps_meas) = pair.section_defects(sections);
    let defect_audits: [(&str, f64, f64); 4] = [
        (
            "vertical defect bound",
            (0..n)
                .map(|m| eta_meas[m] - sections.eta(m))
                .fold(f64::MIN, f64::max),
            eta_slack,
        ),
        (
            "horizontal defect bound",
            (0..n)
                .map(|m| eps_meas[m] - sections.epsilon(m))
                .fold(f64::MIN, f64::max),
            eps_slack,
        ),
        (
            "defect decay chain",
            (0..n)
                .map(|m| {
                    let e1 = params.epsilon1.as_ref().map_or(0.0, |e| e[m]);
                    sections.eta(base.u(m)) - e1 * sections.eta(m)
                })
                .fold(f64::MIN, f64::max),
            eta_slack,
        ),
        (
            "horizontal defect domination",
            (0..n)
                .map(|m| sections.epsilon(m) - sections.eta(base.u(m)))
                .fold(f64::MIN, f64::max),
            eta_slack,
        ),
    ];
    for (name, value, slack) in defect_audits {
        if !gap.require_at_most(name, value.max(0.0), slack) && !opts.force {
            return Err(SolveError::InvalidSection(format!(
                "{name} violated by {value:.6e} (allowed slack {slack:.6e})"
            )));
        }
    }

    let ratio_bound = theta.max(sup_step_rate(params, base)?);
    let out = run_graph_iteration(
        pair,
        start,
        params,
        ChangeMetric::Sup,
        ratio_bound,
        opts,
        &mut gap,
    )?;
    let (f, x_map) = (out.f, out.x_map);
    let mut inner = out.inner;
    record_lipschitz_certificates(&f, &x_map, params, &mut gap);
    record_displacement_certificates(
        pair,
        sections,
        &f,
        params.k1(base).ok(),
        params.k2(base).ok(),
        opts,
        &mut gap,
        &mut inner,
    )?;
    enforce_certificates(&gap, opts.force)?;

    let report = SolveReport {
        outer_iterations: out.outer_iterations,
        final_change: out.final_change,
        contraction_estimate: out.contraction_estimate,
        theta_bound: theta,
        gap,
        inner,
        sup_graph_norm: f.sup_norm_values(),
        max_lipschitz: f.max_lipschitz(),
    };
    Ok(GraphSolution {
        graph: f,
        x_map,
        report,
    })
}
