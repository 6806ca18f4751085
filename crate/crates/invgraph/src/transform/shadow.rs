//! Shadowing solver: the orbit section tracked forward by a pseudo-stable
//! section and backward by a pseudo-unstable one, found as the intersection
//! of the two invariant graph families.

use crate::bundle::{
    implicit_solve, AbParams, GapAudit, GeneratingPair, Grid, InnerStats, Interp, SectionPair,
    SolveError,
};

use super::engine::enforce_certificates;
use super::solve::solve_invariant_graph;
use super::unstable::solve_unstable_graph;
use super::{GraphSolution, SolverOptions};

/// Result of a shadowing solve.
#[derive(Clone, Debug)]
pub struct ShadowingSolution {
    /// The shadowing orbit section `k`, with the measured invariance
    /// residuals stored as its defect bounds.
    pub section: SectionPair,
    /// The forward-invariant graph family over the horizontal fibers.
    pub stable: GraphSolution,
    /// The backward-invariant graph family over the vertical fibers.
    pub unstable: GraphSolution,
    /// Hypothesis audits and shadowing certificates of the combined solve.
    pub gap: GapAudit,
    /// Fixed-point statistics of the intersection stage.
    pub inner: InnerStats,
}

fn sup_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Find the orbit section squeezed between the sections `i` and `j`: solve
/// the forward graph family over `i`, the backward family over `j`, and
/// intersect them fiberwise.
///
/// `i` must be pseudo-stable at the rate `epsilon1` declared in `params` and
/// `j` pseudo-unstable at the rate `epsilon2`. The returned section tracks
/// `i` along forward orbits and `j` along backward orbits, which is audited
/// at the inflated rates `max(epsilon1, lambda_s) + 1e-3` and
/// `max(epsilon2, lambda_u) + 1e-3`.
#[allow(clippy::too_many_arguments)]
pub fn shadowing_section(
    pair: &GeneratingPair,
    i: &SectionPair,
    j: &SectionPair,
    params: &AbParams,
    epsilon2: Option<&[f64]>,
    grid_x: &Grid,
    grid_y: &Grid,
    interp: Interp,
    opts: &SolverOptions,
) -> Result<ShadowingSolution, SolveError> {
    opts.validate()?;
    let base = pair.base();
    let n = base.count();
    let mut gap = GapAudit::new();

    let cone_product = (0..n)
        .map(|m| params.alpha_prime[m] * params.beta_prime[base.u(m)])
        .fold(0.0f64, f64::max);
    let mono_slack = 1e-9 + 1e-12;
    let mono_alpha = (0..n)
        .map(|m| params.alpha_prime[m] - params.alpha[base.u(m)])
        .fold(f64::MIN, f64::max);
    let mono_beta = (0..n)
        .map(|m| params.beta_prime[base.u(m)] - params.beta[m])
        .fold(f64::MIN, f64::max);
    let rate_product = (0..n)
        .map(|m| params.lambda_s[m] * params.lambda_u[m])
        .fold(0.0f64, f64::max);
    let e1 = |m: usize| params.epsilon1.as_ref().map_or(0.0, |e| e[m]);
    let e2 = |m: usize| epsilon2.map_or(0.0, |e| e[m]);
    let stable_feedback = (0..n)
        .map(|m| params.lambda_u[m] * e1(m))
        .fold(0.0f64, f64::max);
    let unstable_feedback = (0..n)
        .map(|m| params.lambda_s[m] * e2(m))
        .fold(0.0f64, f64::max);
    let hypotheses = [
        gap.require_below("cone product", cone_product, 1.0),
        gap.require_at_most("cone opening monotonicity", mono_alpha.max(0.0), mono_slack),
        gap.require_at_most("cone closing monotonicity", mono_beta.max(0.0), mono_slack),
        gap.require_below("rate product", rate_product, 1.0),
        gap.require_below("stable defect feedback", stable_feedback, 1.0),
        gap.require_below("unstable defect feedback", unstable_feedback, 1.0),
    ];
    if hypotheses.iter().any(|ok| !ok) && !opts.force {
        let failed = gap.first_failure().expect("a hypothesis failed");
        return Err(SolveError::Inadmissible(format!(
            "shadowing hypothesis {} = {:.6e} violates its limit {:.6e}",
            failed.name, failed.value, failed.limit
        )));
    }

    let stable = solve_invariant_graph(pair, i, params, grid_x, interp, opts)?;
    let unstable = solve_unstable_graph(pair, j, params, epsilon2, grid_y, interp, opts)?;

    let inner_opts = opts.inner();
    let mut inner = InnerStats::default();
    let mut k_x = Vec::with_capacity(n);
    let mut k_y = Vec::with_capacity(n);
    for m in 0..n {
        let out = implicit_solve(
            |x| unstable.graph.eval(m, &stable.graph.eval(m, x)),
            i.i_x(m),
            &inner_opts,
        )
        .map_err(|err| match err {
            SolveError::NotContracting { ratio, at } => SolveError::NonIntersecting(format!(
                "graph families fail to intersect over index {m}: contraction ratio {ratio:.6} at inner step {at}"
            )),
            other => other,
        })?;
        inner.record(out.iterations, out.residual);
        k_y.push(stable.graph.eval(m, &out.value));
        k_x.push(out.value);
    }

    let h_f = grid_x.spacing();
    let h_h = grid_y.spacing();
    let curv_f = (0..n)
        .map(|m| stable.graph.second_difference_bound(m))
        .fold(0.0f64, f64::max);
    let curv_h = (0..n)
        .map(|m| unstable.graph.second_difference_bound(m))
        .fold(0.0f64, f64::max);
    let interp_margin = 0.25 * (curv_f * h_f * h_f + curv_h * h_h * h_h);
    let residual_limit = 10.0 * opts.tol_outer + interp_margin;
    let mut eta_res = vec![0.0; n];
    let mut eps_res = vec![0.0; n];
    for m in 0..n {
        let up = base.u(m);
        let g = pair.eval_g(m, &k_x[m], &k_y[up]);
        let f = pair.eval_f(m, &k_x[m], &k_y[up]);
        eta_res[m] = sup_dev(&g, &k_y[m]);
        eps_res[m] = sup_dev(&f, &k_x[up]);
    }
    let worst_eta = eta_res.iter().fold(0.0f64, |a, &b| a.max(b));
    let worst_eps = eps_res.iter().fold(0.0f64, |a, &b| a.max(b));
    gap.require_at_most("vertical shadowing residual", worst_eta, residual_limit);
    gap.require_at_most("horizontal shadowing residual", worst_eps, residual_limit);

    let dev_to = |kx: &Vec<f64>, ky: &Vec<f64>, s: &SectionPair, m: usize| {
        sup_dev(kx, s.i_x(m)).max(sup_dev(ky, s.i_y(m)))
    };
    let sup_dev_i = (0..n)
        .map(|m| dev_to(&k_x[m], &k_y[m], i, m))
        .fold(0.0f64, f64::max);
    let c1 = 1.5 * sup_dev_i + 10.0 * opts.tol_outer;
    let mut worst_forward = 0.0f64;
    for m in 0..n {
        let mut cur = m;
        let mut bound = c1;
        for _ in 0..50 {
            bound *= (e1(cur).max(params.lambda_s[cur])) + 1e-3;
            cur = base.u(cur);
            if bound < 1e-12 {
                break;
            }
            worst_forward = worst_forward.max(dev_to(&k_x[cur], &k_y[cur], i, cur) - bound);
        }
    }
    gap.require_at_most("forward tracking decay", worst_forward, 0.0);
    if base.invertible() {
        let sup_dev_j = (0..n)
            .map(|m| dev_to(&k_x[m], &k_y[m], j, m))
            .fold(0.0f64, f64::max);
        let c2 = 1.5 * sup_dev_j + 10.0 * opts.tol_outer;
        let mut worst_backward = 0.0f64;
        for m in 0..n {
            let mut cur = m;
            let mut bound = c2;
            for _ in 0..50 {
                cur = base.u_inverse(cur).expect("invertible base");
                bound *= (e2(cur).max(params.lambda_u[cur])) + 1e-3;
                if bound < 1e-12 {
                    break;
                }
                worst_backward = worst_backward.max(dev_to(&k_x[cur], &k_y[cur], j, cur) - bound);
            }
        }
        gap.require_at_most("backward tracking decay", worst_backward, 0.0);
    }
    enforce_certificates(&gap, opts.force)?;

    let section = SectionPair::new(k_x, k_y, eta_res, eps_res)?;
    Ok(ShadowingSolution {
        section,
        stable,
        unstable,
        gap,
        inner,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::{Matrix2, Vector2};

    use super::*;
    use crate::bundle::{DiscreteBase, FiberFn, FiberSpec};
    use crate::conditions::ab_from_d1_lipschitz;

    #[test]
    fn diagonal_dynamics_shadow_the_origin() {
        let base = Arc::new(DiscreteBase::single_point());
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, _, y| vec![0.5 * y[0]]);
        let pair = GeneratingPair::new(base, FiberSpec::new(1, 1, 1.0, 1.0).unwrap(), f, g);
        let params = AbParams::uniform(1, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5).unwrap();
        let zero = SectionPair::zero(1, 1, 1);
        let grid = Grid::new(1, 21, 1.0).unwrap();
        let sol = shadowing_section(
            &pair,
            &zero,
            &zero,
            &params,
            None,
            &grid,
            &grid,
            Interp::Multilinear,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(sol.section.i_x(0)[0].abs() < 1e-12);
        assert!(sol.section.i_y(0)[0].abs() < 1e-12);
        assert!(sol.section.max_eta() < 1e-12);
        assert!(sol.gap.all_satisfied());
    }

    /// `(x, y) -> (x/2 + sin(y)/10, 2y + sin(x)/10)`: a hyperbolic fixed
    /// point near the origin, with the vertical generating component solved
    /// in closed form.
    fn coupled_sin() -> (GeneratingPair, AbParams) {
        let base = Arc::new(DiscreteBase::single_point());
        let gg = |x1: f64, y2: f64| (y2 - 0.1 * x1.sin()) / 2.0;
        let f: FiberFn = Arc::new(move |_, x, y| vec![0.5 * x[0] + 0.1 * gg(x[0], y[0]).sin()]);
        let g: FiberFn = Arc::new(move |_, x, y| vec![gg(x[0], y[0])]);
        let pair = GeneratingPair::new(base, FiberSpec::new(1, 1, 1.0, 1.0).unwrap(), f, g);
        let params = ab_from_d1_lipschitz(0.05, 0.05, 0.505, 0.5, 1.0)
            .unwrap()
            .ab
            .to_params(1)
            .unwrap();
        (pair, params)
    }

    /// Damped Newton iteration for the fixed point of the plain forward map,
    /// entirely independent of the graph machinery.
    fn newton_fixed_point() -> Vector2<f64> {
        let h = |z: Vector2<f64>| {
            Vector2::new(0.5 * z.x + 0.1 * z.y.sin(), 2.0 * z.y + 0.1 * z.x.sin())
        };
        let mut z = Vector2::new(0.4, -0.3);
        for _ in 0..200 {
            let residual = h(z) - z;
            let jac = Matrix2::new(0.5 - 1.0, 0.1 * z.y.cos(), 0.1 * z.x.cos(), 2.0 - 1.0);
            let step = jac.try_inverse().expect("nonsingular") * residual;
            z -= 0.9 * step;
            if residual.amax() < 1e-14 {
                break;
            }
        }
        assert!((h(z) - z).amax() < 1e-12);
        z
    }

    #[test]
    fn coupled_sin_shadowing_matches_a_plain_newton_solve() {
        let (pair, params) = coupled_sin();
        let zero = SectionPair::zero(1, 1, 1);
        let grid = Grid::new(1, 81, 1.0).unwrap();
        let sol = shadowing_section(
            &pair,
            &zero,
            &zero,
            &params,
            None,
            &grid,
            &grid,
            Interp::CubicAxis,
            &SolverOptions::default(),
        )
        .unwrap();
        let star = newton_fixed_point();
        assert!((sol.section.i_x(0)[0] - star.x).abs() < 1e-9);
        assert!((sol.section.i_y(0)[0] - star.y).abs() < 1e-9);
        // The graph families themselves are nontrivial away from the fixed
        // point even though the intersection sits at the origin.
        assert!(sol.stable.graph.eval(0, &[0.5])[0].abs() > 1e-4);
        assert!(sol.unstable.graph.eval(0, &[0.5])[0].abs() > 1e-4);
        assert!(sol.gap.all_satisfied(), "{:?}", sol.gap.first_failure());
    }

    #[test]
    fn periodic_affine_shadowing_matches_the_closed_form() {
        let base = Arc::new(DiscreteBase::periodic_orbit(2).unwrap());
        let a = [0.12, 0.06];
        let b = [0.4, 0.3];
        let f: FiberFn = Arc::new(move |m, x, _| vec![0.5 * x[0] + a[m]]);
        let g: FiberFn = Arc::new(move |m, _, y| vec![(y[0] - b[m]) / 2.0]);
        let pair = GeneratingPair::new(base, FiberSpec::new(1, 1, 1.0, 1.0).unwrap(), f, g);
        let params = AbParams::uniform(2, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5)
            .unwrap()
            .with_epsilon1(vec![1.0; 2])
            .unwrap();
        let sections = SectionPair::zero(2, 1, 1)
            .with_defects(vec![0.2; 2], vec![0.2; 2])
            .unwrap();
        let grid = Grid::new(1, 21, 1.0).unwrap();
        let sol = shadowing_section(
            &pair,
            &sections,
            &sections,
            &params,
            Some(&[1.0, 1.0]),
            &grid,
            &grid,
            Interp::Multilinear,
            &SolverOptions::default(),
        )
        .unwrap();
        // The unique bounded orbit: x solved forward, y solved backward.
        let x = [0.16, 0.2];
        let y = [-1.1 / 3.0, -1.0 / 3.0];
        for m in 0..2 {
            assert!((sol.section.i_x(m)[0] - x[m]).abs() < 1e-9, "m = {m}");
            assert!((sol.section.i_y(m)[0] - y[m]).abs() < 1e-9, "m = {m}");
        }
        assert!(sol.gap.all_satisfied(), "{:?}", sol.gap.first_failure());
        assert!(sol.section.max_eta() < 1e-9);
        assert!(sol.section.max_epsilon() < 1e-9);
    }
}
