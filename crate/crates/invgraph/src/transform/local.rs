//! Local solver: an invariant graph over a small ball around the zero
//! sections, with the localisation radius derived from the measured defects.

use crate::bundle::{
    sup_norm, AbParams, BundleError, GapAudit, GeneratingPair, Grid, GridGraph, Interp,
    SectionPair, SolveError, SolveReport,
};

use super::engine::{
    enforce_certificates, record_displacement_certificates, record_lipschitz_certificates,
    run_graph_iteration, sup_step_rate, ChangeMetric,
};
use super::SolverOptions;

/// Result of a local solve: the graph and horizontal map over the ball of
/// radius `sigma0` that the solver chose.
#[derive(Clone, Debug)]
pub struct LocalGraphSolution {
    pub graph: GridGraph,
    pub x_map: GridGraph,
    /// Radius of the localisation ball the graph lives over.
    pub sigma0: f64,
    pub report: SolveReport,
}

/// Solve for an invariant graph near the zero sections, measuring the defect
/// sizes `eta(m) = max(|G_m(0,0)|, max over u(m') = m of |F_{m'}(0,0)|)`
/// directly from the generating maps.
///
/// The localisation radius `sigma0` is picked from the admissible window
/// `[K2 eta0 / (1 - sup lambda_s), min(r, (r - K1 eta0) / sup beta'))` around
/// the working radius `r` (half the smaller fiber radius); `sigma_hint`
/// overrides the midpoint choice when it lies in the window. The stronger
/// angle condition `sup alpha(m) beta'(u(m)) < 1/2` is required so the
/// horizontal displacement constant stays finite.
pub fn solve_invariant_graph_local(
    pair: &GeneratingPair,
    params: &AbParams,
    grid_nodes: usize,
    interp: Interp,
    sigma_hint: Option<f64>,
    opts: &SolverOptions,
) -> Result<LocalGraphSolution, SolveError> {
    opts.validate()?;
    let base = pair.base();
    let fibers = pair.fibers();
    let n = base.count();

    let mut working = f64::INFINITY;
    if fibers.dim_x > 0 {
        working = working.min(fibers.radius_x);
    }
    if fibers.dim_y > 0 {
        working = working.min(fibers.radius_y);
    }
    if !working.is_finite() {
        return Err(BundleError::Invalid(
            "local solve needs at least one nontrivial fiber direction".into(),
        )
        .into());
    }
    let r = 0.5 * working;

    let gamma = params.angle_sup(base)?;
    if !(gamma < 0.5) {
        return Err(SolveError::AngleConditionViolated {
            product: gamma,
            limit: 0.5,
        });
    }
    let sup_ls = params.sup_lambda_s();
    if !(sup_ls < 1.0) {
        return Err(SolveError::Inadmissible(format!(
            "horizontal contraction rate sup lambda_s = {sup_ls:.6} is not below one"
        )));
    }
    let theta = params.theta_contraction(base)?;
    let mut gap = GapAudit::new();
    if !gap.require_below("contraction factor", theta, 1.0) && !opts.force {
        return Err(SolveError::SpectralGapViolated(format!(
            "contraction factor {theta:.6} is not below one"
        )));
    }
    let k1 = params
        .k1(base)
        .map_err(|e| SolveError::Inadmissible(e.to_string()))?;
    let k2_local = (params.sup_alpha() * k1 + 1.0) / (1.0 - 2.0 * gamma);

    let zero_x = vec![0.0; fibers.dim_x];
    let zero_y = vec![0.0; fibers.dim_y];
    let f0: Vec<f64> = (0..n)
        .map(|m| sup_norm(&pair.eval_f(m, &zero_x, &zero_y)))
        .collect();
    let mut eta: Vec<f64> = (0..n)
        .map(|m| sup_norm(&pair.eval_g(m, &zero_x, &zero_y)))
        .collect();
    for (m, &horiz) in f0.iter().enumerate() {
        let up = base.u(m);
        eta[up] = eta[up].max(horiz);
    }
    let eta0 = eta.iter().fold(0.0f64, |a, &b| a.max(b));

    if k1 * eta0 >= r {
        return Err(SolveError::Inadmissible(format!(
            "defects too large for the localisation ball: K1 eta0 = {:.6} is not below the working radius r = {r:.6}",
            k1 * eta0
        )));
    }
    let lo = k2_local * eta0 / (1.0 - sup_ls);
    let bp = params.sup_beta_prime();
    let hi = if bp > 0.0 {
        r.min((r - k1 * eta0) / bp)
    } else {
        r
    };
    if !(lo < hi) {
        return Err(SolveError::Inadmissible(format!(
            "empty localisation window: horizontal displacement floor {lo:.6} is not below the vertical range ceiling {hi:.6}"
        )));
    }
    let sigma0 = match sigma_hint {
        Some(h) if h > 0.0 && h >= lo && h < hi => h,
        _ => 0.5 * (lo + hi),
    };

    let grid = Grid::new(fibers.dim_x, grid_nodes, sigma0)?;
    let sections =
        SectionPair::zero(n, fibers.dim_x, fibers.dim_y).with_defects(eta.clone(), f0)?;
    let eta_slack = 1e-9 * eta0 + 1e-12;
    let worst_chain = (0..n)
        .map(|m| {
            let e1 = params.epsilon1.as_ref().map_or(0.0, |e| e[m]);
            eta[base.u(m)] - e1 * eta[m]
        })
        .fold(f64::MIN, f64::max);
    if !gap.require_at_most("defect decay chain", worst_chain.max(0.0), eta_slack) && !opts.force {
        return Err(SolveError::InvalidSection(format!(
            "defect decay chain violated by {worst_chain:.6e}: the measured defects do not decay at the declared rate"
        )));
    }

    let start = GridGraph::constant(grid, n, interp, &zero_y);
    let ratio_bound = theta.max(sup_step_rate(params, base)?);
    let out = run_graph_iteration(
        pair,
        &start,
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
        &sections,
        &f,
        Some(k1),
        Some(k2_local),
        opts,
        &mut gap,
        &mut inner,
    )?;
    gap.require_at_most(
        "horizontal ball containment",
        x_map.sup_norm_values() - sigma0,
        sigma0 * 1e-9 + 1e-12,
    );
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
    Ok(LocalGraphSolution {
        graph: f,
        x_map,
        sigma0,
        report,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::bundle::{DiscreteBase, FiberFn, FiberSpec};

    fn saddle() -> (GeneratingPair, AbParams) {
        let base = Arc::new(DiscreteBase::single_point());
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, x, y| vec![0.5 * y[0] - 0.5 * x[0] * x[0]]);
        let pair = GeneratingPair::new(base, FiberSpec::new(1, 1, 1.0, 1.0).unwrap(), f, g);
        let params = AbParams::uniform(1, 0.0, 0.0, 4.0 / 3.0, 4.0 / 3.0, 0.5, 0.5).unwrap();
        (pair, params)
    }

    #[test]
    fn exactly_invariant_origin_yields_the_zero_graph() {
        let base = Arc::new(DiscreteBase::single_point());
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, _, y| vec![0.5 * y[0]]);
        let pair = GeneratingPair::new(base, FiberSpec::new(1, 1, 1.0, 1.0).unwrap(), f, g);
        let params = AbParams::uniform(1, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5).unwrap();
        let sol = solve_invariant_graph_local(
            &pair,
            &params,
            21,
            Interp::Multilinear,
            None,
            &SolverOptions::default(),
        )
        .unwrap();
        // Window [0, r) with r = 0.5; no hint picks the midpoint.
        assert!((sol.sigma0 - 0.25).abs() < 1e-15);
        assert!(sol.graph.sup_norm_values() < 1e-12);
        assert!(sol.report.gap.all_satisfied());
    }

    #[test]
    fn saddle_graph_is_recovered_on_the_hinted_ball() {
        let (pair, params) = saddle();
        let sol = solve_invariant_graph_local(
            &pair,
            &params,
            41,
            Interp::CubicAxis,
            Some(0.25),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((sol.sigma0 - 0.25).abs() < 1e-15);
        for node in 0..41 {
            let x = sol.graph.grid().node(node)[0];
            let v = sol.graph.node_value(0, node)[0];
            assert!((v + 4.0 / 7.0 * x * x).abs() < 1e-6, "x = {x}");
            let xh = sol.x_map.node_value(0, node)[0];
            assert!((xh - 0.5 * x).abs() < 1e-9);
        }
        assert!(
            sol.report.gap.all_satisfied(),
            "{:?}",
            sol.report.gap.first_failure()
        );
    }

    #[test]
    fn hints_outside_the_window_fall_back_to_the_midpoint() {
        let (pair, params) = saddle();
        let sol = solve_invariant_graph_local(
            &pair,
            &params,
            21,
            Interp::CubicAxis,
            Some(0.9),
            &SolverOptions::default(),
        )
        .unwrap();
        // Window [0, min(0.5, 0.5 / (4/3))) = [0, 0.375).
        assert!((sol.sigma0 - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn oversized_defects_leave_no_admissible_ball() {
        let base = Arc::new(DiscreteBase::single_point());
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, x, y| vec![0.5 * y[0] - 0.5 * x[0] * x[0] + 3.0]);
        let pair = GeneratingPair::new(base, FiberSpec::new(1, 1, 1.0, 1.0).unwrap(), f, g);
        let params = AbParams::uniform(1, 0.0, 0.0, 4.0 / 3.0, 4.0 / 3.0, 0.5, 0.5)
            .unwrap()
            .with_epsilon1(vec![1.0])
            .unwrap();
        let err = solve_invariant_graph_local(
            &pair,
            &params,
            21,
            Interp::Multilinear,
            None,
            &SolverOptions::default(),
        )
        .unwrap_err();
        match err {
            SolveError::Inadmissible(msg) => {
                assert!(msg.contains("localisation"), "{msg}")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn point_fibers_in_both_directions_are_rejected() {
        let base = Arc::new(DiscreteBase::single_point());
        let f: FiberFn = Arc::new(|_, _, _| vec![]);
        let g: FiberFn = Arc::new(|_, _, _| vec![]);
        let pair = GeneratingPair::new(base, FiberSpec::new(0, 0, 0.0, 0.0).unwrap(), f, g);
        let params = AbParams::uniform(1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let err = solve_invariant_graph_local(
            &pair,
            &params,
            3,
            Interp::Multilinear,
            None,
            &SolverOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SolveError::Construction(_)));
    }
}
