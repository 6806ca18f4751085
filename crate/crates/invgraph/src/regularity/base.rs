//! The base derivative of a solved graph: how the fibers of the invariant
//! graph move with the base point, solved as one more linear graph transform
//! over the same grid.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bundle::{
    AbParams, BundleError, GapAudit, GeneratingPair, GridGraph, InnerStats, SolveError, SolveReport,
};
use crate::transform::{enforce_certificates, SolverOptions};

use super::fiber::{FiberJacobianFn, FiberJacobians};
use super::{check_field_inputs, run_field_iteration, DerivativeField};

/// First derivative step of the finite-difference fallbacks in this module.
const FD_STEP: f64 = 1e-6;
/// Absolute size below which the base derivatives of the maps count as
/// vanishing on the zero section, enabling the pinning certificate.
const PIN_THRESHOLD: f64 = 1e-10;

/// Derivatives of the generating maps in the base point at one point,
/// row-major: `df_dm` is `dim_x x d`, `dg_dm` is `dim_y x d`, where `d` is
/// the base coordinate dimension. Derivatives are taken per unit of base
/// coordinate, not per index step.
#[derive(Clone, Debug)]
pub struct BaseJacobians {
    pub df_dm: Vec<f64>,
    pub dg_dm: Vec<f64>,
}

/// Analytic base derivatives of the generating maps at `(m, x, y)`.
pub type BaseJacobianFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> BaseJacobians + Send + Sync>;

/// Solved base-derivative field of a graph.
#[derive(Clone, Debug)]
pub struct BaseDerivativeSolution {
    /// Base derivative of the graph: `dim_y x d` matrices over `(m, x)`.
    pub k: DerivativeField,
    /// Base derivative of the horizontal map: `dim_x x d` matrices over
    /// `(m, x)`.
    pub r: DerivativeField,
    /// Whether any of the map derivatives came from finite differences.
    pub fd_fallback: bool,
    pub report: SolveReport,
}

/// Solve the linear graph transform for the base derivative of a solved
/// graph, on top of a solved fiber-derivative field.
///
/// The fixed point satisfies, at every `(m, x)` with `xh = x_map(m, x)`,
/// `y = f(u(m), xh)`, `Kup = K(u(m), xh)`, `K1up = K1(u(m), xh)`:
/// `R = (I - D2F K1up)^{-1} (DmF + D2F Kup Du)` and
/// `K(m, x) = DmG + D2G (Kup Du + K1up R)`,
/// with `Du` the derivative matrix of the base map. Iteration from the zero
/// field needs the plain step coefficient
/// `sup lambda_u mu / (1 - alpha beta' o u) < 1` in addition to the
/// declared spectral gap `sup lambda_s lambda_u mu / (1 - alpha beta' o u)
/// < 1`. When the base derivatives of both maps vanish on the zero section,
/// the solved field is certified to vanish there too.
#[allow(clippy::too_many_arguments)]
pub fn solve_base_derivative(
    pair: &GeneratingPair,
    jac: Option<&FiberJacobianFn>,
    base_jac: Option<&BaseJacobianFn>,
    f: &GridGraph,
    x_map: &GridGraph,
    k1: &DerivativeField,
    params: &AbParams,
    opts: &SolverOptions,
) -> Result<BaseDerivativeSolution, SolveError> {
    opts.validate()?;
    let base = pair.base();
    let fibers = pair.fibers();
    let n = base.count();
    check_field_inputs(f, x_map, fibers, n)?;
    let (dx, dy) = (fibers.dim_x, fibers.dim_y);
    if k1.base_count() != n || k1.rows() != dy || k1.cols() != dx {
        return Err(SolveError::InvalidSection(
            "derivative field shape disagrees with the correspondence".into(),
        ));
    }
    let du_rows = base.du_matrix().ok_or_else(|| {
        SolveError::BaseNotGridCompatible("base map has no derivative matrix".into())
    })?;
    let d = du_rows.len();
    let du = DMatrix::from_fn(d, d, |i, j| du_rows[i][j]);
    if base_jac.is_none() && base.grid_shape().is_none() {
        return Err(SolveError::BaseNotGridCompatible(
            "base is not a coordinate grid, analytic base derivatives are required".into(),
        ));
    }
    let mu = params
        .mu
        .as_ref()
        .ok_or(SolveError::Construction(BundleError::MissingParameter(
            "mu",
        )))?;

    let angle = params.angle_sup(base)?;
    if !(angle < 1.0) {
        return Err(SolveError::AngleConditionViolated {
            product: angle,
            limit: 1.0,
        });
    }
    let vartheta = params.vartheta(base)?;
    let theta = (0..n)
        .map(|m| vartheta[m] * params.lambda_s[m] * params.lambda_u[m] * mu[m])
        .fold(0.0f64, f64::max);
    let step_rate = (0..n)
        .map(|m| vartheta[m] * params.lambda_u[m] * mu[m])
        .fold(0.0f64, f64::max);
    let mut gap = GapAudit::new();
    let gap_ok = gap.require_below("base-derivative spectral gap", theta, 1.0);
    if !gap_ok && !opts.force {
        return Err(SolveError::SpectralGapViolated(format!(
            "base-derivative spectral gap {theta:.6} is not below one"
        )));
    }
    let step_ok = gap.require_below("base-derivative step contraction", step_rate, 1.0);
    if !step_ok && !opts.force {
        return Err(SolveError::SpectralGapViolated(format!(
            "base-derivative step contraction {step_rate:.6} is not below one"
        )));
    }

    let grid = f.grid().clone();
    {
        let x0 = grid.node(0);
        let xh = x_map.eval(0, &x0);
        let y = f.eval(base.u(0), &xh);
        let jb = fiber_jacobians_at(pair, jac, 0, &x0, &y);
        if jb.df_dy.len() != dx * dy || jb.dg_dy.len() != dy * dy {
            return Err(SolveError::Construction(BundleError::Invalid(
                "fiber jacobian blocks have wrong dimensions".into(),
            )));
        }
        let bb = base_jacobians_at(pair, base_jac, 0, &x0, &y)?;
        if bb.df_dm.len() != dx * d || bb.dg_dm.len() != dy * d {
            return Err(SolveError::Construction(BundleError::Invalid(
                "base jacobian blocks have wrong dimensions".into(),
            )));
        }
    }

    // Whether the maps' base derivatives vanish along the zero section, in
    // which case the solved field must vanish there too.
    let x0 = vec![0.0; dx];
    let mut section_slope = 0.0f64;
    for m in 0..n {
        let xh = x_map.eval(m, &x0);
        let y = f.eval(base.u(m), &xh);
        let bb = base_jacobians_at(pair, base_jac, m, &x0, &y)?;
        section_slope = bb
            .df_dm
            .iter()
            .chain(bb.dg_dm.iter())
            .fold(section_slope, |acc, v| acc.max(v.abs()));
    }
    let pinned = section_slope <= PIN_THRESHOLD;

    let nodes = grid.node_count();
    let sweep =
        |k_cur: &DerivativeField| -> Result<(DerivativeField, DerivativeField), SolveError> {
            let per_fiber: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
                .into_par_iter()
                .map(|m| {
                    let up = base.u(m);
                    let mut kv = vec![0.0; nodes * dy * d];
                    let mut rv = vec![0.0; nodes * dx * d];
                    for node in 0..nodes {
                        let x = grid.node(node);
                        let xh = x_map.eval(m, &x);
                        let y = f.eval(up, &xh);
                        let jb = fiber_jacobians_at(pair, jac, m, &x, &y);
                        let bb = base_jacobians_at(pair, base_jac, m, &x, &y)?;
                        let a2 = DMatrix::from_row_slice(dx, dy, &jb.df_dy);
                        let b2 = DMatrix::from_row_slice(dy, dy, &jb.dg_dy);
                        let nf = DMatrix::from_row_slice(dx, d, &bb.df_dm);
                        let ng = DMatrix::from_row_slice(dy, d, &bb.dg_dm);
                        let k1up = DMatrix::from_row_slice(dy, dx, &k1.eval(up, &xh));
                        let kup = DMatrix::from_row_slice(dy, d, &k_cur.eval(up, &xh));
                        let kup_du = &kup * &du;
                        let r = if dx == 0 {
                            DMatrix::zeros(0, d)
                        } else {
                            let lhs = DMatrix::identity(dx, dx) - &a2 * &k1up;
                            let rhs = nf + &a2 * &kup_du;
                            lhs.lu().solve(&rhs).ok_or_else(|| {
                                SolveError::Inadmissible(format!(
                                    "fiber-linearised transform is singular at index {m}"
                                ))
                            })?
                        };
                        let k_new = ng + &b2 * (&kup_du + &k1up * &r);
                        write_row_major(&mut kv[node * dy * d..(node + 1) * dy * d], &k_new);
                        write_row_major(&mut rv[node * dx * d..(node + 1) * dx * d], &r);
                    }
                    Ok((kv, rv))
                })
                .collect::<Result<Vec<_>, SolveError>>()?;
            let mut kf = DerivativeField::zero(n, grid.clone(), dy, d);
            let mut rf = DerivativeField::zero(n, grid.clone(), dx, d);
            for (m, (kv, rv)) in per_fiber.iter().enumerate() {
                kf.set_fiber(m, kv);
                rf.set_fiber(m, rv);
            }
            Ok((kf, rf))
        };

    let start = DerivativeField::zero(n, grid.clone(), dy, d);
    let it = run_field_iteration(start, sweep, step_rate, opts, &mut gap)?;
    let k = it.field;
    let r = it.aux;

    if pinned {
        let worst = (0..n)
            .map(|m| {
                k.eval(m, &x0)
                    .iter()
                    .fold(0.0f64, |acc, v| acc.max(v.abs()))
            })
            .fold(0.0f64, f64::max);
        gap.require_at_most(
            "base derivative pinned at the zero section",
            worst,
            (100.0 * opts.tol_outer).max(1e-8),
        );
    }
    enforce_certificates(&gap, opts.force)?;

    let report = SolveReport {
        outer_iterations: it.outer_iterations,
        final_change: it.final_change,
        contraction_estimate: it.contraction_estimate,
        theta_bound: theta,
        gap,
        inner: InnerStats::default(),
        sup_graph_norm: k.sup_operator_norm(),
        max_lipschitz: k.max_entry_lipschitz(),
    };
    Ok(BaseDerivativeSolution {
        k,
        r,
        fd_fallback: jac.is_none() || base_jac.is_none(),
        report,
    })
}

fn fiber_jacobians_at(
    pair: &GeneratingPair,
    jac: Option<&FiberJacobianFn>,
    m: usize,
    x: &[f64],
    y: &[f64],
) -> FiberJacobians {
    match jac {
        Some(j) => j(m, x, y),
        None => numeric_dy_jacobians(pair, m, x, y),
    }
}

/// Only the `y` blocks enter the base-derivative equations, so the fallback
/// differentiates in `y` alone and leaves the `x` blocks empty-shaped.
fn numeric_dy_jacobians(pair: &GeneratingPair, m: usize, x: &[f64], y: &[f64]) -> FiberJacobians {
    let dx = x.len();
    let dy = y.len();
    let mut df_dy = vec![0.0; dx * dy];
    let mut dg_dy = vec![0.0; dy * dy];
    for c in 0..dy {
        let h = FD_STEP * (1.0 + y[c].abs());
        let mut yp = y.to_vec();
        yp[c] += h;
        let mut ym = y.to_vec();
        ym[c] -= h;
        let fp = pair.eval_f(m, x, &yp);
        let fm = pair.eval_f(m, x, &ym);
        let gp = pair.eval_g(m, x, &yp);
        let gm = pair.eval_g(m, x, &ym);
        for i in 0..dx {
            df_dy[i * dy + c] = (fp[i] - fm[i]) / (2.0 * h);
        }
        for i in 0..dy {
            dg_dy[i * dy + c] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    FiberJacobians {
        df_dx: vec![0.0; dx * dx],
        df_dy,
        dg_dx: vec![0.0; dy * dx],
        dg_dy,
    }
}

fn base_jacobians_at(
    pair: &GeneratingPair,
    base_jac: Option<&BaseJacobianFn>,
    m: usize,
    x: &[f64],
    y: &[f64],
) -> Result<BaseJacobians, SolveError> {
    match base_jac {
        Some(j) => Ok(j(m, x, y)),
        None => numeric_base_jacobians(pair, m, x, y),
    }
}

/// Central differences across lattice neighbours of `m`, per base
/// coordinate axis, holding the fiber point fixed; the step is one grid
/// spacing.
fn numeric_base_jacobians(
    pair: &GeneratingPair,
    m: usize,
    x: &[f64],
    y: &[f64],
) -> Result<BaseJacobians, SolveError> {
    let base = pair.base();
    let (dim, _) = base.grid_shape().ok_or_else(|| {
        SolveError::BaseNotGridCompatible(
            "base is not a coordinate grid, analytic base derivatives are required".into(),
        )
    })?;
    let h = base.grid_spacing().unwrap_or(0.0);
    if h <= 0.0 {
        return Err(SolveError::BaseNotGridCompatible(
            "base grid spacing is degenerate".into(),
        ));
    }
    let dx = x.len();
    let dy = y.len();
    let mut df_dm = vec![0.0; dx * dim];
    let mut dg_dm = vec![0.0; dy * dim];
    for axis in 0..dim {
        let mp = base.grid_neighbor(m, axis, 1).ok_or_else(|| {
            SolveError::BaseNotGridCompatible(format!("no neighbour of index {m} on axis {axis}"))
        })?;
        let mm = base.grid_neighbor(m, axis, -1).ok_or_else(|| {
            SolveError::BaseNotGridCompatible(format!("no neighbour of index {m} on axis {axis}"))
        })?;
        let fp = pair.eval_f(mp, x, y);
        let fm = pair.eval_f(mm, x, y);
        let gp = pair.eval_g(mp, x, y);
        let gm = pair.eval_g(mm, x, y);
        for i in 0..dx {
            df_dm[i * dim + axis] = (fp[i] - fm[i]) / (2.0 * h);
        }
        for i in 0..dy {
            dg_dm[i * dim + axis] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Ok(BaseJacobians { df_dm, dg_dm })
}

fn write_row_major(dst: &mut [f64], mat: &DMatrix<f64>) {
    let cols = mat.ncols();
    for i in 0..mat.nrows() {
        for j in 0..cols {
            dst[i * cols + j] = mat[(i, j)];
        }
    }
}
