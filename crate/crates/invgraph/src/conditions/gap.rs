//! Spectral-gap quantities controlling existence and regularity of solved
//! objects, and the largest exponent at which each gap closes.

use serde::Serialize;

use crate::bundle::{AbParams, BundleError, DiscreteBase, GapAudit};

/// Which regularity statement the gap quantity certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GapLaw {
    /// Holder continuity of the fiber derivative of a solved graph.
    FiberDerivHolder,
    /// Holder dependence of a solved leaf on its base point.
    LeafInBaseHolder,
    /// Holder dependence of the fiber derivative on the base point.
    DerivInBaseHolder,
    /// Differentiable dependence on the base point (no exponent involved).
    BaseSmooth,
    /// Holder continuity of the base derivative of a solved graph.
    BaseDerivHolder,
    /// Holder dependence of a solved section on the base point.
    SectionBaseHolder,
}

/// The scalar rates a gap quantity is built from.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapRates {
    pub lambda_s: f64,
    pub lambda_u: f64,
    /// Sup of the angle-defect factor `1 / (1 - alpha beta' o u)`.
    pub vartheta: f64,
    /// Lipschitz constant of the base map; required by the base-direction
    /// laws.
    pub mu: Option<f64>,
}

impl GapRates {
    /// Collapse per-index constants to the scalar rates entering the gap
    /// laws. `mu` comes from the declared parameters when present and falls
    /// back to the base-map derivative norm.
    pub fn from_params(params: &AbParams, base: &DiscreteBase) -> Result<Self, BundleError> {
        let vartheta = params.vartheta(base)?.into_iter().fold(0.0f64, f64::max);
        let mu = params
            .mu
            .as_ref()
            .map(|v| v.iter().fold(0.0f64, |a, &b| a.max(b)))
            .or_else(|| base.du_norm());
        Ok(GapRates {
            lambda_s: params.sup_lambda_s(),
            lambda_u: params.sup_lambda_u(),
            vartheta,
            mu,
        })
    }

    fn require_mu(&self) -> Result<f64, BundleError> {
        self.mu.ok_or(BundleError::MissingParameter("mu"))
    }
}

/// The gap quantity of `law` at Holder exponent `alpha`; the certified
/// statement holds when the quantity is below one.
///
/// `gamma` is the Lipschitz-versus-Holder interpolation weight entering the
/// derivative laws; laws without a derivative component ignore it.
pub fn gap_quantity(
    law: GapLaw,
    rates: &GapRates,
    alpha: f64,
    gamma: f64,
) -> Result<f64, BundleError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(BundleError::Invalid(format!(
            "exponent alpha = {alpha} must be finite and nonnegative"
        )));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(BundleError::Invalid(format!(
            "weight gamma = {gamma} must be finite and nonnegative"
        )));
    }
    let GapRates {
        lambda_s,
        lambda_u,
        vartheta,
        ..
    } = *rates;
    let quantity = match law {
        GapLaw::FiberDerivHolder => lambda_s.powf(gamma * alpha) * lambda_s * lambda_u * vartheta,
        GapLaw::LeafInBaseHolder => rates.require_mu()?.powf(alpha) * lambda_u * vartheta,
        GapLaw::DerivInBaseHolder => {
            rates.require_mu()?.powf(gamma * alpha) * lambda_s * lambda_u * vartheta
        }
        GapLaw::BaseSmooth => lambda_s * lambda_u * rates.require_mu()? * vartheta,
        GapLaw::BaseDerivHolder => {
            let mu = rates.require_mu()?;
            let rate = lambda_s * lambda_u * mu * vartheta;
            if rate == 0.0 {
                return Ok(0.0);
            }
            (mu / lambda_s).max(mu).powf(alpha) * rate
        }
        GapLaw::SectionBaseHolder => rates.require_mu()?.powf(alpha) * lambda_u * vartheta,
    };
    Ok(quantity)
}

/// Largest exponent in `[0, 1]` at which the gap quantity of `law` stays
/// below one; zero when it never does.
///
/// `BaseSmooth` involves no exponent and reports one or zero depending on
/// whether its gap closes at all.
pub fn gap_exponent(law: GapLaw, rates: &GapRates, gamma: f64) -> Result<f64, BundleError> {
    if law == GapLaw::BaseSmooth {
        return Ok(if gap_quantity(law, rates, 0.0, gamma)? < 1.0 {
            1.0
        } else {
            0.0
        });
    }
    if gap_quantity(law, rates, 1.0, gamma)? < 1.0 {
        return Ok(1.0);
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if gap_quantity(law, rates, mid, gamma)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Audit the solvability conditions a graph solve rests on: the angle
/// product and, when it is meaningful, the contraction rate of the graph
/// transform.
pub fn gap_audit(params: &AbParams, base: &DiscreteBase) -> Result<GapAudit, BundleError> {
    let mut audit = GapAudit::new();
    let angle = params.angle_sup(base)?;
    let angle_ok = audit.require_below("angle product", angle, 1.0);
    if angle_ok {
        let theta = params.theta_contraction(base)?;
        audit.require_below("theta contraction", theta, 1.0);
    } else {
        audit.require_below("theta contraction", f64::INFINITY, 1.0);
    }
    Ok(audit)
}
