//! Independent oracles for solved graphs: membership in the stable set by
//! forward orbit growth, sampled agreement between a solved graph and the
//! orbit-growth characterization, and orbit tracking along a graph.
//!
//! Everything here consumes the plain forward [`BundleMap`], not the
//! generating pair the solvers iterate, so a verification failure cannot be
//! caused by the machinery it is checking.
//!
//! [`BundleMap`]: crate::bundle::BundleMap

mod membership;
mod verify;

pub use membership::{orbit_growth_membership, track_orbit_on_graph, TrackedOrbit};
pub use verify::{verify_graph_by_orbits, Disagreement, OrbitVerification};

use crate::bundle::{AbParams, BundleError, DiscreteBase};

/// Growth envelope for the forward-orbit characterization of the stable set:
/// a point belongs iff its orbit distance to the section stays within
/// `c * prod_k epsilon_hat` over the horizon.
#[derive(Clone, Debug)]
pub struct GrowthSpec {
    epsilon_hat: Vec<f64>,
    c: f64,
    horizon: usize,
    margin: f64,
}

impl GrowthSpec {
    /// An envelope rate must sit strictly inside the per-index sandwich
    /// `lambda_s(m) + margin < epsilon_hat(m) < (lambda_u(m) vartheta(m))^-1 - margin`.
    pub fn new(
        epsilon_hat: Vec<f64>,
        c: f64,
        horizon: usize,
        margin: f64,
        params: &AbParams,
        base: &DiscreteBase,
    ) -> Result<Self, BundleError> {
        if epsilon_hat.len() != params.len() {
            return Err(BundleError::Invalid(format!(
                "envelope has {} rates for {} base indices",
                epsilon_hat.len(),
                params.len()
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(BundleError::Invalid(
                "admissible constant must be positive".into(),
            ));
        }
        if horizon == 0 {
            return Err(BundleError::Invalid(
                "horizon must be at least one step".into(),
            ));
        }
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(BundleError::Invalid(
                "sandwich margin must be positive".into(),
            ));
        }
        let vartheta = params.vartheta(base)?;
        for (m, &eps) in epsilon_hat.iter().enumerate() {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(BundleError::Invalid(format!(
                    "envelope rate at index {m} must be positive and finite"
                )));
            }
            let lower = params.lambda_s[m] + margin;
            let growth = params.lambda_u[m] * vartheta[m];
            let upper = if growth > 0.0 {
                1.0 / growth - margin
            } else {
                f64::INFINITY
            };
            if !(eps > lower && eps < upper) {
                return Err(BundleError::Inadmissible(format!(
                    "envelope rate {eps:.6} at index {m} leaves the sandwich ({lower:.6}, {upper:.6})"
                )));
            }
        }
        Ok(GrowthSpec {
            epsilon_hat,
            c,
            horizon,
            margin,
        })
    }

    /// Envelope at the midpoint of each per-index sandwich, with a quarter of
    /// the narrowest gap as the margin.
    pub fn midpoint(
        c: f64,
        horizon: usize,
        params: &AbParams,
        base: &DiscreteBase,
    ) -> Result<Self, BundleError> {
        let vartheta = params.vartheta(base)?;
        let mut epsilon_hat = Vec::with_capacity(params.len());
        let mut narrowest = f64::INFINITY;
        for (m, &vt) in vartheta.iter().enumerate() {
            let lower = params.lambda_s[m];
            let growth = params.lambda_u[m] * vt;
            let upper = if growth > 0.0 {
                1.0 / growth
            } else {
                lower + 2.0
            };
            if upper <= lower {
                return Err(BundleError::Inadmissible(format!(
                    "empty growth sandwich at index {m}: lambda_s = {lower:.6}, expansion cap = {upper:.6}"
                )));
            }
            epsilon_hat.push(0.5 * (lower + upper));
            narrowest = narrowest.min(upper - lower);
        }
        GrowthSpec::new(epsilon_hat, c, horizon, 0.25 * narrowest, params, base)
    }

    /// The default admissible constant `2 (K2 + 1)` built from the solver's
    /// section-distance estimate.
    pub fn default_constant(params: &AbParams, base: &DiscreteBase) -> Result<f64, BundleError> {
        Ok(2.0 * (params.k2(base)? + 1.0))
    }

    pub fn epsilon_hat(&self) -> &[f64] {
        &self.epsilon_hat
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }
}
