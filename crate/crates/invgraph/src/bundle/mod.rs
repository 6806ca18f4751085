//! Core data model shared by every solver.
//!
//! - [`DiscreteBase`]: finite index set with metric, exact base map, optional
//!   inverse.
//! - [`FiberSpec`] / [`Grid`] / [`GridGraph`]: sup-norm boxes, sample grids,
//!   interpolated graphs `f_m : X_m -> Y_m`.
//! - [`SectionPair`]: a section `i = (i_X, i_Y)` with defect bound `eta` and
//!   pseudo-stability rate `epsilon`.
//! - [`GeneratingPair`] / [`BundleMap`]: the dynamics, in generating-map and
//!   plain-map form, plus duality and composition.
//! - [`implicit_solve`]: the contraction fixed-point engine all inner loops
//!   use.
//! - [`SolveReport`] / [`GapAudit`]: iteration diagnostics and condition
//!   audits attached to every solve.

mod base;
mod error;
mod fiber;
mod fixed_point;
mod generating;
mod params;
mod report;
mod section;
mod vect;

pub use base::{BaseKind, DiscreteBase, TorusMap};
pub use error::{BundleError, SolveError};
pub use fiber::{FiberSpec, Grid, GridGraph, Interp};
pub use fixed_point::{implicit_solve, InnerOutcome, InnerSolve};
pub use generating::{
    bundle_map_from_diagonal_split, compose_correspondences, dual_correspondence,
    generating_pair_from_diagonal_split, AnalyticDerivs, BaseJetFn, BundleMap, FiberFn,
    GeneratingPair, JetFn, PointMapFn, SplitNonlinearity,
};
pub use params::{AbParams, AbVariant};
pub use report::{median_step_ratio, GapAudit, GapCheck, InnerStats, SolveReport};
pub use section::SectionPair;
pub use vect::{all_finite, radial_retraction, sup_dist, sup_norm};
