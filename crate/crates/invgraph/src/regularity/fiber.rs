//! Fiber derivatives of a solved graph: the linear graph transform for the
//! first derivative field and the one for the second derivative field, with
//! finite-difference fallbacks for the Jacobians and Hessians of the
//! generating maps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bundle::{
    AbParams, BundleError, GapAudit, GeneratingPair, GridGraph, InnerStats, SolveError, SolveReport,
};
use crate::transform::{enforce_certificates, SolverOptions};

use super::{check_field_inputs, run_field_iteration, DerivativeField};

/// Step scale of the finite-difference Jacobian fallback.
const FD_STEP: f64 = 1e-6;
/// Step scale of the finite-difference Hessian fallback.
const FD_HESS_STEP: f64 = 1e-4;

/// First derivatives of the generating maps at one point, row-major:
/// `df_dx` is `dim_x x dim_x`, `df_dy` is `dim_x x dim_y`, `dg_dx` is
/// `dim_y x dim_x`, `dg_dy` is `dim_y x dim_y`.
#[derive(Clone, Debug)]
pub struct FiberJacobians {
    pub df_dx: Vec<f64>,
    pub df_dy: Vec<f64>,
    pub dg_dx: Vec<f64>,
    pub dg_dy: Vec<f64>,
}

/// Analytic Jacobians of the generating maps at `(m, x, y)`; `y` lies in the
/// target fiber, as in the maps themselves.
pub type FiberJacobianFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> FiberJacobians + Send + Sync>;

/// Second derivatives of the generating maps at one point. Layouts, all
/// row-major with the output index slowest: `f_xx[a][j][k]` is
/// `dim_x x dim_x x dim_x`, `f_xy[a][j][c]` is `dim_x x dim_x x dim_y`,
/// `f_yy[a][c][c']` is `dim_x x dim_y x dim_y`, and `g_*` the same shapes
/// with `dim_y` outputs. The `xx`, `yy` blocks must be symmetric in their
/// trailing pair; mixed `yx` blocks are taken as transposes of `xy`.
#[derive(Clone, Debug)]
pub struct FiberHessians {
    pub f_xx: Vec<f64>,
    pub f_xy: Vec<f64>,
    pub f_yy: Vec<f64>,
    pub g_xx: Vec<f64>,
    pub g_xy: Vec<f64>,
    pub g_yy: Vec<f64>,
}

/// Analytic Hessians of the generating maps at `(m, x, y)`.
pub type FiberHessianFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> FiberHessians + Send + Sync>;

/// Solved first-derivative field of a graph, with the horizontal derivative
/// field it is coupled to.
#[derive(Clone, Debug)]
pub struct FiberDerivativeSolution {
    /// Derivative of the graph: `dim_y x dim_x` matrices over `(m, x)`.
    pub k1: DerivativeField,
    /// Derivative of the horizontal map: `dim_x x dim_x` matrices over
    /// `(m, x)`.
    pub r1: DerivativeField,
    /// Whether the Jacobians came from finite differences of the maps.
    pub fd_fallback: bool,
    pub report: SolveReport,
}

/// Solved second-derivative field of a graph.
#[derive(Clone, Debug)]
pub struct FiberHessianSolution {
    /// Second derivative of the graph: `dim_y x (dim_x * dim_x)` matrices
    /// over `(m, x)`, the trailing pair row-major and symmetric.
    pub k2: DerivativeField,
    /// Whether any of the map derivatives came from finite differences.
    pub fd_fallback: bool,
    pub report: SolveReport,
}

/// Solve the linear graph transform for the derivative of a solved graph.
///
/// The fixed point satisfies, at every `(m, x)` with `xh = x_map(m, x)` and
/// `y = f(u(m), xh)`,
/// `R = (I - D2F K1(u(m), xh))^{-1} D1F` and
/// `K1(m, x) = D1G + D2G K1(u(m), xh) R`,
/// all map derivatives taken at `(m, x, y)`. Iteration runs from the zero
/// field and contracts under the spectral gap
/// `sup lambda_s lambda_u / (1 - alpha beta' o u) < 1`; the converged field
/// carries the contraction-ratio, invariance-residual, and
/// `|K1| <= beta'` norm certificates.
pub fn solve_fiber_derivative(
    pair: &GeneratingPair,
    jac: Option<&FiberJacobianFn>,
    f: &GridGraph,
    x_map: &GridGraph,
    params: &AbParams,
    opts: &SolverOptions,
) -> Result<FiberDerivativeSolution, SolveError> {
    opts.validate()?;
    let base = pair.base();
    let fibers = pair.fibers();
    let n = base.count();
    check_field_inputs(f, x_map, fibers, n)?;
    let (dx, dy) = (fibers.dim_x, fibers.dim_y);

    let angle = params.angle_sup(base)?;
    if !(angle < 1.0) {
        return Err(SolveError::AngleConditionViolated {
            product: angle,
            limit: 1.0,
        });
    }
    let vartheta = params.vartheta(base)?;
    let theta = (0..n)
        .map(|m| vartheta[m] * params.lambda_s[m] * params.lambda_u[m])
        .fold(0.0f64, f64::max);
    let mut gap = GapAudit::new();
    if !gap.require_below("fiber-derivative spectral gap", theta, 1.0) && !opts.force {
        return Err(SolveError::SpectralGapViolated(format!(
            "fiber-derivative spectral gap {theta:.6} is not below one"
        )));
    }
    // Plain-sup sweeps contract at the unweighted coefficient, one factor of
    // vartheta above the certified gap.
    let ratio_bound = (0..n)
        .map(|m| params.lambda_s[m] * params.lambda_u[m] * vartheta[m] * vartheta[m])
        .fold(0.0f64, f64::max);

    let grid = f.grid().clone();
    let probe = {
        let x0 = grid.node(0);
        let xh = x_map.eval(0, &x0);
        let y = f.eval(base.u(0), &xh);
        jacobians_at(pair, jac, 0, &x0, &y)
    };
    if probe.df_dx.len() != dx * dx
        || probe.df_dy.len() != dx * dy
        || probe.dg_dx.len() != dy * dx
        || probe.dg_dy.len() != dy * dy
    {
        return Err(SolveError::Construction(BundleError::Invalid(
            "fiber jacobian blocks have wrong dimensions".into(),
        )));
    }

    let nodes = grid.node_count();
    let sweep =
        |k_cur: &DerivativeField| -> Result<(DerivativeField, DerivativeField), SolveError> {
            let per_fiber: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
                .into_par_iter()
                .map(|m| {
                    let up = base.u(m);
                    let mut kv = vec![0.0; nodes * dy * dx];
                    let mut rv = vec![0.0; nodes * dx * dx];
                    for node in 0..nodes {
                        let x = grid.node(node);
                        let xh = x_map.eval(m, &x);
                        let y = f.eval(up, &xh);
                        let jb = jacobians_at(pair, jac, m, &x, &y);
                        let a1 = DMatrix::from_row_slice(dx, dx, &jb.df_dx);
                        let a2 = DMatrix::from_row_slice(dx, dy, &jb.df_dy);
                        let b1 = DMatrix::from_row_slice(dy, dx, &jb.dg_dx);
                        let b2 = DMatrix::from_row_slice(dy, dy, &jb.dg_dy);
                        let p = DMatrix::from_row_slice(dy, dx, &k_cur.eval(up, &xh));
                        let lhs = DMatrix::identity(dx, dx) - &a2 * &p;
                        let r = lhs.lu().solve(&a1).ok_or_else(|| {
                            SolveError::Inadmissible(format!(
                                "fiber-linearised transform is singular at index {m}"
                            ))
                        })?;
                        let k_new = &b1 + &b2 * (&p * &r);
                        write_row_major(&mut kv[node * dy * dx..(node + 1) * dy * dx], &k_new);
                        write_row_major(&mut rv[node * dx * dx..(node + 1) * dx * dx], &r);
                    }
                    Ok((kv, rv))
                })
                .collect::<Result<Vec<_>, SolveError>>()?;
            let mut kf = DerivativeField::zero(n, grid.clone(), dy, dx);
            let mut rf = DerivativeField::zero(n, grid.clone(), dx, dx);
            for (m, (kv, rv)) in per_fiber.iter().enumerate() {
                kf.set_fiber(m, kv);
                rf.set_fiber(m, rv);
            }
            Ok((kf, rf))
        };

    let start = DerivativeField::zero(n, grid.clone(), dy, dx);
    let it = run_field_iteration(start, sweep, ratio_bound, opts, &mut gap)?;
    let k1 = it.field;
    let r1 = it.aux;

    let excess = (0..n)
        .map(|m| k1.fiber_operator_norm(m) - params.beta_prime[m])
        .fold(f64::MIN, f64::max);
    gap.require_at_most(
        "fiber-derivative norm excess",
        excess.max(0.0),
        10.0 * opts.tol_outer + 1e-9 * (1.0 + params.sup_beta_prime()),
    );
    enforce_certificates(&gap, opts.force)?;

    let report = SolveReport {
        outer_iterations: it.outer_iterations,
        final_change: it.final_change,
        contraction_estimate: it.contraction_estimate,
        theta_bound: theta,
        gap,
        inner: InnerStats::default(),
        sup_graph_norm: k1.sup_operator_norm(),
        max_lipschitz: k1.max_entry_lipschitz(),
    };
    Ok(FiberDerivativeSolution {
        k1,
        r1,
        fd_fallback: jac.is_none(),
        report,
    })
}

/// Solve the linear graph transform for the second derivative of a solved
/// graph, on top of a solved first-derivative field.
///
/// Differentiating the first-derivative equations once more leaves a system
/// that is linear in the unknown second derivative `K2` with the lower-order
/// chain-rule terms assembled from `K1`, `R1`, and the map Hessians: with
/// `P = K1(u(m), xh)`, `Q = K2(u(m), xh)`, `R = R1(m, x)`, `M = P R`,
/// `R2 = (I - D2F P)^{-1} (S + D2F Q[R, R])` and
/// `K2(m, x) = T + D2G Q[R, R] + D2G P R2`,
/// where `S` and `T` collect the Hessian terms of `F` and `G` contracted
/// with `M`. Contraction needs the order-two spectral gap
/// `sup lambda_s^2 lambda_u / (1 - alpha beta' o u) < 1`. Third and higher
/// derivatives are out of scope.
#[allow(clippy::too_many_arguments)]
pub fn solve_fiber_hessian(
    pair: &GeneratingPair,
    hess: Option<&FiberHessianFn>,
    jac: Option<&FiberJacobianFn>,
    f: &GridGraph,
    x_map: &GridGraph,
    first: &FiberDerivativeSolution,
    params: &AbParams,
    opts: &SolverOptions,
) -> Result<FiberHessianSolution, SolveError> {
    opts.validate()?;
    let base = pair.base();
    let fibers = pair.fibers();
    let n = base.count();
    check_field_inputs(f, x_map, fibers, n)?;
    let (dx, dy) = (fibers.dim_x, fibers.dim_y);
    if first.k1.base_count() != n
        || first.k1.rows() != dy
        || first.k1.cols() != dx
        || first.r1.rows() != dx
        || first.r1.cols() != dx
    {
        return Err(SolveError::InvalidSection(
            "derivative field shape disagrees with the correspondence".into(),
        ));
    }

    let angle = params.angle_sup(base)?;
    if !(angle < 1.0) {
        return Err(SolveError::AngleConditionViolated {
            product: angle,
            limit: 1.0,
        });
    }
    let vartheta = params.vartheta(base)?;
    let theta = (0..n)
        .map(|m| vartheta[m] * params.lambda_s[m] * params.lambda_s[m] * params.lambda_u[m])
        .fold(0.0f64, f64::max);
    let mut gap = GapAudit::new();
    if !gap.require_below("second-derivative spectral gap", theta, 1.0) && !opts.force {
        return Err(SolveError::SpectralGapViolated(format!(
            "second-derivative spectral gap {theta:.6} is not below one"
        )));
    }
    let ratio_bound = (0..n)
        .map(|m| {
            let sv = params.lambda_s[m] * vartheta[m];
            sv * sv * params.lambda_u[m] * vartheta[m]
        })
        .fold(0.0f64, f64::max);

    let grid = f.grid().clone();
    {
        let x0 = grid.node(0);
        let xh = x_map.eval(0, &x0);
        let y = f.eval(base.u(0), &xh);
        let hb = hessians_at(pair, hess, 0, &x0, &y);
        if hb.f_xx.len() != dx * dx * dx
            || hb.f_xy.len() != dx * dx * dy
            || hb.f_yy.len() != dx * dy * dy
            || hb.g_xx.len() != dy * dx * dx
            || hb.g_xy.len() != dy * dx * dy
            || hb.g_yy.len() != dy * dy * dy
        {
            return Err(SolveError::Construction(BundleError::Invalid(
                "fiber hessian blocks have wrong dimensions".into(),
            )));
        }
    }

    let nodes = grid.node_count();
    let cols = dx * dx;
    let sweep = |k_cur: &DerivativeField| -> Result<(DerivativeField, ()), SolveError> {
        let per_fiber: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|m| {
                let up = base.u(m);
                let mut kv = vec![0.0; nodes * dy * cols];
                for node in 0..nodes {
                    let x = grid.node(node);
                    let xh = x_map.eval(m, &x);
                    let y = f.eval(up, &xh);
                    let jb = jacobians_at(pair, jac, m, &x, &y);
                    let hb = hessians_at(pair, hess, m, &x, &y);
                    let a2 = DMatrix::from_row_slice(dx, dy, &jb.df_dy);
                    let b2 = DMatrix::from_row_slice(dy, dy, &jb.dg_dy);
                    let p = DMatrix::from_row_slice(dy, dx, &first.k1.eval(up, &xh));
                    let r = DMatrix::from_row_slice(dx, dx, &first.r1.eval(m, &x));
                    let mm = &p * &r;
                    let q = k_cur.eval(up, &xh);
                    // qrr[c][j][k] = sum_{a,b} Q[c][a][b] R[a][j] R[b][k]
                    let mut qrr = vec![0.0; dy * cols];
                    for c in 0..dy {
                        for j in 0..dx {
                            for k in 0..dx {
                                let mut s = 0.0;
                                for a in 0..dx {
                                    for b in 0..dx {
                                        s += q[c * cols + a * dx + b] * r[(a, j)] * r[(b, k)];
                                    }
                                }
                                qrr[(c * dx + j) * dx + k] = s;
                            }
                        }
                    }
                    let t = second_order_terms(&hb.g_xx, &hb.g_xy, &hb.g_yy, &mm, dy, dx, dy);
                    let s = second_order_terms(&hb.f_xx, &hb.f_xy, &hb.f_yy, &mm, dx, dx, dy);
                    let lhs = DMatrix::identity(dx, dx) - &a2 * &p;
                    let lu = lhs.lu();
                    for j in 0..dx {
                        for k in 0..dx {
                            let qcol = DVector::from_iterator(
                                dy,
                                (0..dy).map(|c| qrr[(c * dx + j) * dx + k]),
                            );
                            let scol = DVector::from_iterator(
                                dx,
                                (0..dx).map(|a| s[(a * dx + j) * dx + k]),
                            );
                            let rhs = scol + &a2 * &qcol;
                            let r2col = lu.solve(&rhs).ok_or_else(|| {
                                SolveError::Inadmissible(format!(
                                    "fiber-linearised transform is singular at index {m}"
                                ))
                            })?;
                            let kcol = DVector::from_iterator(
                                dy,
                                (0..dy).map(|i| t[(i * dx + j) * dx + k]),
                            ) + &b2 * &qcol
                                + &b2 * (&p * &r2col);
                            for i in 0..dy {
                                kv[node * dy * cols + i * cols + j * dx + k] = kcol[i];
                            }
                        }
                    }
                }
                Ok(kv)
            })
            .collect::<Result<Vec<_>, SolveError>>()?;
        let mut kf = DerivativeField::zero(n, grid.clone(), dy, cols);
        for (m, kv) in per_fiber.iter().enumerate() {
            kf.set_fiber(m, kv);
        }
        Ok((kf, ()))
    };

    let start = DerivativeField::zero(n, grid.clone(), dy, cols);
    let it = run_field_iteration(start, sweep, ratio_bound, opts, &mut gap)?;
    let k2 = it.field;

    let mut asym = 0.0f64;
    let mut max_abs = 0.0f64;
    for m in 0..n {
        for node in 0..nodes {
            let e = k2.node_entries(m, node);
            for i in 0..dy {
                for j in 0..dx {
                    for k in (j + 1)..dx {
                        asym =
                            asym.max((e[i * cols + j * dx + k] - e[i * cols + k * dx + j]).abs());
                    }
                }
            }
            max_abs = e.iter().fold(max_abs, |acc, v| acc.max(v.abs()));
        }
    }
    gap.require_at_most(
        "hessian symmetry defect",
        asym,
        10.0 * opts.tol_outer + 1e-9 * (1.0 + max_abs),
    );
    enforce_certificates(&gap, opts.force)?;

    let report = SolveReport {
        outer_iterations: it.outer_iterations,
        final_change: it.final_change,
        contraction_estimate: it.contraction_estimate,
        theta_bound: theta,
        gap,
        inner: InnerStats::default(),
        sup_graph_norm: k2.sup_operator_norm(),
        max_lipschitz: k2.max_entry_lipschitz(),
    };
    Ok(FiberHessianSolution {
        k2,
        fd_fallback: hess.is_none() || jac.is_none(),
        report,
    })
}

/// `out[i][j][k] = xx[i][j][k] + xy[i][j][.] M[., k] + xy[i][k][.] M[., j]
/// + M[., j]^T yy[i] M[., k]`: the Hessian chain-rule terms of a map
/// evaluated along `(x, f(u(m), x_map(x)))`.
fn second_order_terms(
    xx: &[f64],
    xy: &[f64],
    yy: &[f64],
    mm: &DMatrix<f64>,
    rows: usize,
    dx: usize,
    dy: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; rows * dx * dx];
    for i in 0..rows {
        for j in 0..dx {
            for k in 0..dx {
                let mut v = xx[(i * dx + j) * dx + k];
                for c in 0..dy {
                    v += xy[(i * dx + j) * dy + c] * mm[(c, k)];
                    v += xy[(i * dx + k) * dy + c] * mm[(c, j)];
                }
                for c in 0..dy {
                    for c2 in 0..dy {
                        v += yy[(i * dy + c) * dy + c2] * mm[(c, j)] * mm[(c2, k)];
                    }
                }
                out[(i * dx + j) * dx + k] = v;
            }
        }
    }
    out
}

fn jacobians_at(
    pair: &GeneratingPair,
    jac: Option<&FiberJacobianFn>,
    m: usize,
    x: &[f64],
    y: &[f64],
) -> FiberJacobians {
    match jac {
        Some(j) => j(m, x, y),
        None => numeric_fiber_jacobians(pair, m, x, y),
    }
}

fn hessians_at(
    pair: &GeneratingPair,
    hess: Option<&FiberHessianFn>,
    m: usize,
    x: &[f64],
    y: &[f64],
) -> FiberHessians {
    match hess {
        Some(h) => h(m, x, y),
        None => numeric_fiber_hessians(pair, m, x, y),
    }
}

/// Central differences of the generating maps in each fiber coordinate.
fn numeric_fiber_jacobians(
    pair: &GeneratingPair,
    m: usize,
    x: &[f64],
    y: &[f64],
) -> FiberJacobians {
    let dx = x.len();
    let dy = y.len();
    let mut df_dx = vec![0.0; dx * dx];
    let mut dg_dx = vec![0.0; dy * dx];
    for j in 0..dx {
        let h = FD_STEP * (1.0 + x[j].abs());
        let mut xp = x.to_vec();
        xp[j] += h;
        let mut xm = x.to_vec();
        xm[j] -= h;
        let fp = pair.eval_f(m, &xp, y);
        let fm = pair.eval_f(m, &xm, y);
        let gp = pair.eval_g(m, &xp, y);
        let gm = pair.eval_g(m, &xm, y);
        for i in 0..dx {
            df_dx[i * dx + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
        for i in 0..dy {
            dg_dx[i * dx + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
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
        df_dx,
        df_dy,
        dg_dx,
        dg_dy,
    }
}

/// Second central differences of the generating maps; mixed blocks use the
/// symmetric four-point stencil, so the returned tensors are symmetric by
/// construction.
fn numeric_fiber_hessians(pair: &GeneratingPair, m: usize, x: &[f64], y: &[f64]) -> FiberHessians {
    let dx = x.len();
    let dy = y.len();
    let hx: Vec<f64> = x.iter().map(|v| FD_HESS_STEP * (1.0 + v.abs())).collect();
    let hy: Vec<f64> = y.iter().map(|v| FD_HESS_STEP * (1.0 + v.abs())).collect();
    let ev = |ox: &[(usize, f64)], oy: &[(usize, f64)]| {
        let mut xs = x.to_vec();
        let mut ys = y.to_vec();
        for &(a, d) in ox {
            xs[a] += d;
        }
        for &(b, d) in oy {
            ys[b] += d;
        }
        (pair.eval_f(m, &xs, &ys), pair.eval_g(m, &xs, &ys))
    };
    let (f0, g0) = ev(&[], &[]);

    let mut f_xx = vec![0.0; dx * dx * dx];
    let mut g_xx = vec![0.0; dy * dx * dx];
    for j in 0..dx {
        for k in j..dx {
            if j == k {
                let (fp, gp) = ev(&[(j, hx[j])], &[]);
                let (fm, gm) = ev(&[(j, -hx[j])], &[]);
                let den = hx[j] * hx[j];
                for i in 0..dx {
                    f_xx[(i * dx + j) * dx + k] = (fp[i] - 2.0 * f0[i] + fm[i]) / den;
                }
                for i in 0..dy {
                    g_xx[(i * dx + j) * dx + k] = (gp[i] - 2.0 * g0[i] + gm[i]) / den;
                }
            } else {
                let (fpp, gpp) = ev(&[(j, hx[j]), (k, hx[k])], &[]);
                let (fpm, gpm) = ev(&[(j, hx[j]), (k, -hx[k])], &[]);
                let (fmp, gmp) = ev(&[(j, -hx[j]), (k, hx[k])], &[]);
                let (fmm, gmm) = ev(&[(j, -hx[j]), (k, -hx[k])], &[]);
                let den = 4.0 * hx[j] * hx[k];
                for i in 0..dx {
                    let v = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) / den;
                    f_xx[(i * dx + j) * dx + k] = v;
                    f_xx[(i * dx + k) * dx + j] = v;
                }
                for i in 0..dy {
                    let v = (gpp[i] - gpm[i] - gmp[i] + gmm[i]) / den;
                    g_xx[(i * dx + j) * dx + k] = v;
                    g_xx[(i * dx + k) * dx + j] = v;
                }
            }
        }
    }

    let mut f_xy = vec![0.0; dx * dx * dy];
    let mut g_xy = vec![0.0; dy * dx * dy];
    for j in 0..dx {
        for c in 0..dy {
            let (fpp, gpp) = ev(&[(j, hx[j])], &[(c, hy[c])]);
            let (fpm, gpm) = ev(&[(j, hx[j])], &[(c, -hy[c])]);
            let (fmp, gmp) = ev(&[(j, -hx[j])], &[(c, hy[c])]);
            let (fmm, gmm) = ev(&[(j, -hx[j])], &[(c, -hy[c])]);
            let den = 4.0 * hx[j] * hy[c];
            for i in 0..dx {
                f_xy[(i * dx + j) * dy + c] = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) / den;
            }
            for i in 0..dy {
                g_xy[(i * dx + j) * dy + c] = (gpp[i] - gpm[i] - gmp[i] + gmm[i]) / den;
            }
        }
    }

    let mut f_yy = vec![0.0; dx * dy * dy];
    let mut g_yy = vec![0.0; dy * dy * dy];
    for c in 0..dy {
        for c2 in c..dy {
            if c == c2 {
                let (fp, gp) = ev(&[], &[(c, hy[c])]);
                let (fm, gm) = ev(&[], &[(c, -hy[c])]);
                let den = hy[c] * hy[c];
                for i in 0..dx {
                    f_yy[(i * dy + c) * dy + c2] = (fp[i] - 2.0 * f0[i] + fm[i]) / den;
                }
                for i in 0..dy {
                    g_yy[(i * dy + c) * dy + c2] = (gp[i] - 2.0 * g0[i] + gm[i]) / den;
                }
            } else {
                let (fpp, gpp) = ev(&[], &[(c, hy[c]), (c2, hy[c2])]);
                let (fpm, gpm) = ev(&[], &[(c, hy[c]), (c2, -hy[c2])]);
                let (fmp, gmp) = ev(&[], &[(c, -hy[c]), (c2, hy[c2])]);
                let (fmm, gmm) = ev(&[], &[(c, -hy[c]), (c2, -hy[c2])]);
                let den = 4.0 * hy[c] * hy[c2];
                for i in 0..dx {
                    let v = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) / den;
                    f_yy[(i * dy + c) * dy + c2] = v;
                    f_yy[(i * dy + c2) * dy + c] = v;
                }
                for i in 0..dy {
                    let v = (gpp[i] - gpm[i] - gmp[i] + gmm[i]) / den;
                    g_yy[(i * dy + c) * dy + c2] = v;
                    g_yy[(i * dy + c2) * dy + c] = v;
                }
            }
        }
    }

    FiberHessians {
        f_xx,
        f_xy,
        f_yy,
        g_xx,
        g_xy,
        g_yy,
    }
}

fn write_row_major(dst: &mut [f64], mat: &DMatrix<f64>) {
    let cols = mat.ncols();
    for i in 0..mat.nrows() {
        for j in 0..cols {
            dst[i * cols + j] = mat[(i, j)];
        }
    }
}
