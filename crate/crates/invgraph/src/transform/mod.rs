//! Contraction solvers for invariant graphs over a discrete base: the global
//! solver for pseudo-stable sections, the Y-bounded variant, the local solver
//! on a computed small ball, unstable graphs via dualization, and the
//! shadowing section where the stable and unstable graphs intersect.
//!
//! All solvers iterate the graph transform with simultaneous (Jacobi) sweeps:
//! each sweep reads the previous graph everywhere and writes a fresh buffer,
//! so runs are deterministic and fibers can be processed in parallel. Every
//! converged run carries a [`crate::bundle::GapAudit`] with the admissibility
//! checks and post-hoc certificates (contraction ratio, Lipschitz bounds,
//! displacement bounds, invariance residual); a failed certificate aborts the
//! solve unless `force` is set, in which case it is merely recorded.

mod bounded;
mod engine;
mod local;
mod shadow;
mod solve;
mod step;
mod unstable;

use crate::bundle::{BundleError, GridGraph, InnerSolve, SolveReport};

pub(crate) use engine::enforce_certificates;

pub use bounded::solve_invariant_graph_bounded;
pub use local::{solve_invariant_graph_local, LocalGraphSolution};
pub use shadow::{shadowing_section, ShadowingSolution};
pub use solve::{solve_invariant_graph, solve_invariant_graph_with_start};
pub use step::graph_transform_step;
pub use unstable::solve_unstable_graph;

/// Tolerances and budget for an outer graph-transform solve.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Stop once the sup-norm sweep-to-sweep change falls to or below this.
    pub tol_outer: f64,
    /// Tolerance of every inner fixed-point solve; at most `tol_outer`.
    pub tol_inner: f64,
    pub max_outer_iter: usize,
    /// Record failed audits and certificates instead of aborting.
    pub force: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_outer: 1e-10,
            tol_inner: 1e-12,
            max_outer_iter: 10_000,
            force: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), BundleError> {
        if !(self.tol_outer > 0.0 && self.tol_outer.is_finite()) {
            return Err(BundleError::Invalid(
                "tol_outer must be positive and finite".into(),
            ));
        }
        if !(self.tol_inner > 0.0 && self.tol_inner <= self.tol_outer) {
            return Err(BundleError::Invalid(
                "tol_inner must be positive and at most tol_outer".into(),
            ));
        }
        if self.max_outer_iter == 0 {
            return Err(BundleError::Invalid(
                "max_outer_iter must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The inner fixed-point configuration used by the sweeps.
    pub fn inner(&self) -> InnerSolve {
        InnerSolve {
            tol: self.tol_inner,
            max_iter: 10_000,
        }
    }
}

/// A solved invariant graph: the graph itself, the horizontal tracking map
/// sending each point to where its orbit continues, and the solve report.
#[derive(Clone, Debug)]
pub struct GraphSolution {
    /// The invariant graph `f_m : X_m -> Y_m` (for the unstable solver, a
    /// graph over the `Y` fibers instead).
    pub graph: GridGraph,
    /// `x_m(x)`: the solved horizontal coordinate of the image of
    /// `(x, f_m(x))`, stored over the same grid.
    pub x_map: GridGraph,
    pub report: SolveReport,
}
