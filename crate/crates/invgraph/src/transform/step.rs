//! One simultaneous sweep of the graph transform.

use rayon::prelude::*;

use crate::bundle::{
    implicit_solve, AbParams, GeneratingPair, GridGraph, InnerSolve, InnerStats, SolveError,
};

/// Apply the graph transform once: for every base index `m` and grid node
/// `x`, solve `xh = F_m(x, f_{u(m)}(xh))` to the inner tolerance and set
/// `fNew_m(x) = G_m(x, f_{u(m)}(xh))`.
///
/// All reads of `f` use the pre-sweep values; evaluation of `f_{u(m)}`
/// clamps its argument into the grid box axis by axis. Returns the new graph,
/// the solved horizontal map `x -> xh` over the same grid, and the inner
/// iteration statistics.
pub fn graph_transform_step(
    pair: &GeneratingPair,
    f: &GridGraph,
    params: &AbParams,
    inner: &InnerSolve,
) -> Result<(GridGraph, GridGraph, InnerStats), SolveError> {
    let base = pair.base();
    let n = base.count();
    if f.base_count() != n {
        return Err(SolveError::InvalidSection(
            "graph base size disagrees with the correspondence".into(),
        ));
    }
    if f.grid().dim() != pair.fibers().dim_x || f.dim_out() != pair.fibers().dim_y {
        return Err(SolveError::InvalidSection(
            "graph dimensions disagree with the fiber spec".into(),
        ));
    }
    let angle = params.angle_sup(base)?;
    if !(angle < 1.0) {
        return Err(SolveError::AngleConditionViolated {
            product: angle,
            limit: 1.0,
        });
    }

    let grid = f.grid();
    let node_count = grid.node_count();
    let dim_x = grid.dim();
    let dim_y = f.dim_out();
    let fibers: Vec<(Vec<f64>, Vec<f64>, InnerStats)> = (0..n)
        .into_par_iter()
        .map(
            |m| -> Result<(Vec<f64>, Vec<f64>, InnerStats), SolveError> {
                let up = base.u(m);
                let mut f_vals = Vec::with_capacity(node_count * dim_y);
                let mut x_vals = Vec::with_capacity(node_count * dim_x);
                let mut stats = InnerStats::default();
                for node in 0..node_count {
                    let x = grid.node(node);
                    let out = implicit_solve(|xh| pair.eval_f(m, &x, &f.eval(up, xh)), &x, inner)?;
                    stats.record(out.iterations, out.residual);
                    let y2 = f.eval(up, &out.value);
                    f_vals.extend_from_slice(&pair.eval_g(m, &x, &y2));
                    x_vals.extend_from_slice(&out.value);
                }
                Ok((f_vals, x_vals, stats))
            },
        )
        .collect::<Result<Vec<_>, _>>()?;

    let mut f_new = GridGraph::constant(grid.clone(), n, f.interp(), &vec![0.0; dim_y]);
    let mut x_map = GridGraph::constant(grid.clone(), n, f.interp(), &vec![0.0; dim_x]);
    let mut inner_stats = InnerStats::default();
    for (m, (f_vals, x_vals, stats)) in fibers.into_iter().enumerate() {
        f_new.set_fiber(m, &f_vals);
        x_map.set_fiber(m, &x_vals);
        inner_stats.merge(&stats);
    }
    Ok((f_new, x_map, inner_stats))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bundle::{DiscreteBase, FiberFn, FiberSpec, Grid, Interp};

    fn single_point() -> Arc<DiscreteBase> {
        Arc::new(DiscreteBase::single_point())
    }

    /// The saddle with quadratic coupling: `(x, y) -> (x/2, 2y + x^2)`.
    fn saddle() -> GeneratingPair {
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, x, y| vec![0.5 * y[0] - 0.5 * x[0] * x[0]]);
        GeneratingPair::new(
            single_point(),
            FiberSpec::new(1, 1, 1.0, 1.0).unwrap(),
            f,
            g,
        )
    }

    fn saddle_params() -> AbParams {
        // Opening converted from the raw rates lip_x G <= 1, lip rates 1/2.
        AbParams::uniform(1, 0.0, 0.0, 4.0 / 3.0, 4.0 / 3.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn linear_diagonal_fixes_the_zero_graph() {
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, _, y| vec![0.5 * y[0]]);
        let pair = GeneratingPair::new(
            single_point(),
            FiberSpec::new(1, 1, 1.0, 1.0).unwrap(),
            f,
            g,
        );
        let params = AbParams::uniform(1, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5).unwrap();
        let grid = Grid::new(1, 11, 1.0).unwrap();
        let zero = GridGraph::constant(grid.clone(), 1, Interp::Multilinear, &[0.0]);
        let (f_new, x_map, _) =
            graph_transform_step(&pair, &zero, &params, &InnerSolve::default()).unwrap();
        assert!(f_new.sup_distance(&zero) < 1e-14);
        for node in 0..grid.node_count() {
            let x = grid.node(node);
            assert!((x_map.node_value(0, node)[0] - 0.5 * x[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn one_saddle_sweep_from_zero_gives_the_first_parabola() {
        let pair = saddle();
        let grid = Grid::new(1, 41, 1.0).unwrap();
        let zero = GridGraph::constant(grid.clone(), 1, Interp::Multilinear, &[0.0]);
        let (f_new, x_map, stats) =
            graph_transform_step(&pair, &zero, &saddle_params(), &InnerSolve::default()).unwrap();
        for node in 0..grid.node_count() {
            let x = grid.node(node)[0];
            assert!(
                (f_new.node_value(0, node)[0] + 0.5 * x * x).abs() < 1e-13,
                "x = {x}"
            );
            assert!((x_map.node_value(0, node)[0] - 0.5 * x).abs() < 1e-13);
        }
        assert_eq!(stats.calls, grid.node_count());
    }

    #[test]
    fn angle_violations_are_rejected_before_sweeping() {
        let pair = saddle();
        let params = AbParams::uniform(1, 1.0, 1.0, 1.1, 1.1, 0.5, 0.5).unwrap();
        let grid = Grid::new(1, 5, 1.0).unwrap();
        let zero = GridGraph::constant(grid, 1, Interp::Multilinear, &[0.0]);
        let err = graph_transform_step(&pair, &zero, &params, &InnerSolve::default()).unwrap_err();
        assert!(matches!(err, SolveError::AngleConditionViolated { .. }));
    }

    /// Random graph with Lipschitz constant at most `slope`, pinned to the
    /// value 0 at the central node.
    fn anchored_walk(grid: &Grid, slope: f64, rng: &mut ChaCha8Rng) -> GridGraph {
        let n = grid.nodes_per_axis();
        let h = grid.spacing();
        let mut vals = vec![0.0; n];
        for i in 1..n {
            vals[i] = vals[i - 1] + rng.random_range(-slope * h..slope * h);
        }
        let anchor = vals[n / 2];
        let vals: Vec<f64> = vals.iter().map(|v| v - anchor).collect();
        let mut g = GridGraph::constant(grid.clone(), 1, Interp::Multilinear, &[0.0]);
        g.set_fiber(0, &vals);
        g
    }

    /// Distance weighted by the sup-distance to the distinguished section:
    /// the metric in which the transform contracts at its certified rate.
    fn weighted_dist(a: &GridGraph, b: &GridGraph) -> f64 {
        let grid = a.grid();
        let mut worst = 0.0f64;
        for node in 0..grid.node_count() {
            let w = grid.node(node)[0].abs();
            if w <= 1e-15 {
                continue;
            }
            let d = (a.node_value(0, node)[0] - b.node_value(0, node)[0]).abs();
            worst = worst.max(d / w);
        }
        worst
    }

    #[test]
    fn saddle_sweeps_contract_at_the_certified_rate() {
        let pair = saddle();
        let params = saddle_params();
        let grid = Grid::new(1, 41, 1.0).unwrap();
        let inner = InnerSolve::default();
        let theta = params.theta_contraction(pair.base()).unwrap();
        assert!((theta - 0.25).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2026);
        for _ in 0..20 {
            let f = anchored_walk(&grid, 4.0 / 3.0, &mut rng);
            let fp = anchored_walk(&grid, 4.0 / 3.0, &mut rng);
            let before = weighted_dist(&f, &fp);
            assert!(before > 1e-6);
            let (gf, _, _) = graph_transform_step(&pair, &f, &params, &inner).unwrap();
            let (gfp, _, _) = graph_transform_step(&pair, &fp, &params, &inner).unwrap();
            let after = weighted_dist(&gf, &gfp);
            assert!(
                after <= theta * 1.02 * before + 1e-14,
                "ratio {} exceeds {}",
                after / before,
                theta * 1.02
            );
        }
    }
}
