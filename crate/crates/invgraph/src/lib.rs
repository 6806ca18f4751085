//! Invariant graphs, sections, foliations, and holonomies for bundle maps and
//! bundle correspondences over finite discrete bases.
//!
//! A system is described per base index `m` by a generating pair `(F, G)`:
//! the pair `(x2, y2)` is an image of `(x1, y1)` exactly when
//!
//! ```text
//! y1 = G_m(x1, y2),    x2 = F_m(x1, y2),
//! ```
//!
//! where `x` lives in the contracting-side fiber and `y2` in the target
//! expanding-side fiber. This presentation turns ill-posed forward dynamics
//! (non-invertible or genuinely multivalued maps) into well-posed fixed-point
//! equations, which is the interface every solver in this crate consumes.
//!
//! Module map:
//! - [`bundle`]: discrete bases, boxed fibers with interpolation grids,
//!   sections, generating pairs, the contraction fixed-point utility, and
//!   solve reports.
//! - [`conditions`]: empirical hyperbolicity checks, closed-form parameter
//!   conversions, parameter transport (dual / composition), spectral-gap
//!   audits, and sup-Lyapunov-number estimation.
//! - [`transform`]: the graph-transform contraction solvers (global, bounded,
//!   local, unstable-via-dual, shadowing).
//! - [`verification`]: orbit-growth oracles that certify solved graphs
//!   independently of the solver.
//! - [`regularity`]: fiber/base derivative solvers and Hölder-exponent
//!   estimation against spectral-gap predictions.
//! - [`foliations`]: leaf families, trichotomies, fake foliations,
//!   holonomies, and the decoupling conjugacy.
//! - [`scenarios`]: built-in example systems, each shipping its own oracle.

// `!(x < limit)` guards are NaN-rejecting and stay in negated form.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod conditions;
pub mod regularity;
pub mod transform;
pub mod verification;
