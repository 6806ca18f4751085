//! Unstable-graph solver: graphs over the vertical fibers, obtained by
//! solving the dual correspondence.

use crate::bundle::{
    dual_correspondence, AbParams, BundleError, GeneratingPair, Grid, Interp, SectionPair,
    SolveError,
};

use super::solve::solve_invariant_graph;
use super::{GraphSolution, SolverOptions};

/// Solve for the invariant graph of the backward dynamics: a family
/// `h_m : Y_m -> X_m` over the vertical fibers.
///
/// The problem is transported to the dual correspondence, where fiber roles
/// swap and every constant is read at the base preimage; a section whose
/// backward defect decays at the per-index rate `epsilon2` becomes a
/// pseudo-stable section of the dual with rate `epsilon2 o u^{-1}`. Requires
/// an invertible base map. The returned `graph` is the family `h` over the
/// supplied vertical grid, and `x_map` its node map one backward step along
/// the vertical dynamics.
pub fn solve_unstable_graph(
    pair: &GeneratingPair,
    sections: &SectionPair,
    params: &AbParams,
    epsilon2: Option<&[f64]>,
    grid: &Grid,
    interp: Interp,
    opts: &SolverOptions,
) -> Result<GraphSolution, SolveError> {
    let base = pair.base();
    let dual_pair = dual_correspondence(pair)?;
    let dual_sections = sections.dual(base)?;
    let mut dual_params = params.dual(base)?;
    if let Some(e2) = epsilon2 {
        if e2.len() != base.count() {
            return Err(
                BundleError::Invalid("epsilon2 length disagrees with the base".into()).into(),
            );
        }
        let e1: Vec<f64> = (0..base.count())
            .map(|m| e2[base.u_inverse(m).expect("invertible base")])
            .collect();
        dual_params = dual_params.with_epsilon1(e1)?;
    }
    solve_invariant_graph(&dual_pair, &dual_sections, &dual_params, grid, interp, opts)
}
