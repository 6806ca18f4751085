//! Derivative equations and regularity measurement: the linear graph
//! transforms for the fiber derivative and the base derivative of a solved
//! graph, finite-difference cross-checks, empirical Hölder-exponent
//! estimation, and the closed-form exponent calculators.

mod base;
mod fiber;
mod holder;

pub use base::{solve_base_derivative, BaseDerivativeSolution, BaseJacobianFn, BaseJacobians};
pub use fiber::{
    solve_fiber_derivative, solve_fiber_hessian, FiberDerivativeSolution, FiberHessianFn,
    FiberHessianSolution, FiberHessians, FiberJacobianFn, FiberJacobians,
};
pub use holder::{
    estimate_holder, gap_exponent, sup_lyapunov_numbers, theoretical_holder_bound, HolderEstimate,
    RegularityGrade, TheoreticalHolder,
};

use crate::bundle::{median_step_ratio, FiberSpec, GapAudit, Grid, GridGraph, Interp, SolveError};
use crate::transform::SolverOptions;

/// A matrix-valued field over base indices and horizontal grid nodes, stored
/// row-major per node and interpolated entrywise multilinearly.
#[derive(Clone, Debug)]
pub struct DerivativeField {
    values: GridGraph,
    rows: usize,
    cols: usize,
}

impl DerivativeField {
    /// The zero field with `rows x cols` matrices on every node.
    pub fn zero(base_count: usize, grid: Grid, rows: usize, cols: usize) -> Self {
        let zeros = vec![0.0; rows * cols];
        DerivativeField {
            values: GridGraph::constant(grid, base_count, Interp::Multilinear, &zeros),
            rows,
            cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn base_count(&self) -> usize {
        self.values.base_count()
    }

    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    /// Row-major entries of the matrix stored at one node.
    pub fn node_entries(&self, m: usize, node: usize) -> &[f64] {
        self.values.node_value(m, node)
    }

    /// Entrywise multilinear interpolation at `x`, row-major.
    pub fn eval(&self, m: usize, x: &[f64]) -> Vec<f64> {
        self.values.eval(m, x)
    }

    /// Replace the whole fiber over index `m` (`node_count * rows * cols`
    /// values).
    pub fn set_fiber(&mut self, m: usize, values: &[f64]) {
        self.values.set_fiber(m, values);
    }

    /// Largest absolute entry difference against another field.
    pub fn sup_distance(&self, other: &DerivativeField) -> f64 {
        self.values.sup_distance(&other.values)
    }

    /// Largest sup-induced operator norm (maximum absolute row sum) over all
    /// stored node matrices.
    pub fn sup_operator_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.base_count() {
            worst = worst.max(self.fiber_operator_norm(m));
        }
        worst
    }

    /// Largest sup-induced operator norm over the nodes of one fiber.
    pub fn fiber_operator_norm(&self, m: usize) -> f64 {
        let mut worst = 0.0f64;
        for node in 0..self.grid().node_count() {
            worst = worst.max(row_sum_norm(
                self.node_entries(m, node),
                self.rows,
                self.cols,
            ));
        }
        worst
    }

    /// Largest node-to-node slope of any entry.
    pub fn max_entry_lipschitz(&self) -> f64 {
        self.values.max_lipschitz()
    }
}

/// Sup-induced operator norm of a row-major `rows x cols` matrix.
fn row_sum_norm(entries: &[f64], rows: usize, cols: usize) -> f64 {
    (0..rows)
        .map(|i| {
            entries[i * cols..(i + 1) * cols]
                .iter()
                .map(|v| v.abs())
                .sum()
        })
        .fold(0.0f64, f64::max)
}

pub(crate) struct FieldIteration<A> {
    pub field: DerivativeField,
    /// Whatever the sweep produces alongside the field, taken from the final
    /// residual sweep so it is consistent with the returned field.
    pub aux: A,
    pub outer_iterations: usize,
    pub final_change: f64,
    pub contraction_estimate: f64,
}

/// Iterate a linear field transform from `start` until the sup-norm change
/// drops to the outer tolerance, then run one more sweep on the converged
/// field to measure the invariance residual.
///
/// Records the contraction-ratio and residual certificates into `gap`; the
/// caller adds its own and decides whether failures abort.
pub(crate) fn run_field_iteration<A>(
    start: DerivativeField,
    sweep: impl Fn(&DerivativeField) -> Result<(DerivativeField, A), SolveError>,
    ratio_bound: f64,
    opts: &SolverOptions,
    gap: &mut GapAudit,
) -> Result<FieldIteration<A>, SolveError> {
    let mut cur = start;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    for iter in 1..=opts.max_outer_iter {
        let (next, _) = sweep(&cur)?;
        let change = next.sup_distance(&cur);
        if !change.is_finite() {
            return Err(SolveError::NonFinite(iter));
        }
        cur = next;
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
    let (check, aux) = sweep(&cur)?;
    let residual = check.sup_distance(&cur);
    let contraction_estimate = median_step_ratio(&steps, opts.tol_outer);
    gap.require_at_most(
        "contraction ratio",
        contraction_estimate,
        ratio_bound * 1.05 + 1e-9,
    );
    gap.require_at_most("invariance residual", residual, 10.0 * opts.tol_outer);
    Ok(FieldIteration {
        field: cur,
        aux,
        outer_iterations: iterations,
        final_change: last_change,
        contraction_estimate,
    })
}

/// The solved graph and horizontal map a derivative solve differentiates
/// must match the correspondence they came from.
pub(crate) fn check_field_inputs(
    f: &GridGraph,
    x_map: &GridGraph,
    fibers: &FiberSpec,
    base_count: usize,
) -> Result<(), SolveError> {
    if f.base_count() != base_count
        || f.dim_out() != fibers.dim_y
        || f.grid().dim() != fibers.dim_x
        || x_map.base_count() != base_count
        || x_map.dim_out() != fibers.dim_x
        || x_map.grid().dim() != fibers.dim_x
    {
        return Err(SolveError::InvalidSection(
            "graph shape disagrees with the correspondence".into(),
        ));
    }
    Ok(())
}
