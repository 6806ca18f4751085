//! Conversions from other common hyperbolicity hypothesis formats into the
//! cone-and-rate constants the solvers consume.
//!
//! Each conversion validates its admissibility window strictly and reports
//! `Inadmissible` with the failed bound otherwise; none of them silently
//! widens a window to accept an input.

use serde::Serialize;

use crate::bundle::{AbParams, BundleError};

/// Scalar constants `(alpha; alpha', lambda_u)(beta; beta', lambda_s)`
/// produced by a conversion, uniform over the base.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvertedAb {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub lambda_s: f64,
    pub lambda_u: f64,
}

impl ConvertedAb {
    /// Spread the scalar constants uniformly over a base of the given size.
    pub fn to_params(&self, base_count: usize) -> Result<AbParams, BundleError> {
        AbParams::uniform(
            base_count,
            self.alpha,
            self.alpha_prime,
            self.beta,
            self.beta_prime,
            self.lambda_s,
            self.lambda_u,
        )
    }
}

fn require_rate(name: &'static str, v: f64) -> Result<(), BundleError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BundleError::Invalid(format!(
            "{name} must be finite and nonnegative, got {v}"
        )))
    }
}

/// Result of the max-metric Lipschitz conversion.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DinfConversion {
    pub ab: ConvertedAb,
    /// Whether the refined (wider-cone) form applied.
    pub refined: bool,
}

/// Convert Lipschitz constants stated for the max metric on the fiber
/// product into cone form.
///
/// Requires `alpha * beta < 1` and `lambda_s * lambda_u < 1`. The plain form
/// reuses each Lipschitz constant as both cone opening and closing rate; when
/// additionally `alpha * beta < lambda_s * lambda_u`, the hypothesis cones
/// widen by the factor `1 / (lambda_s lambda_u)` and that refined form is
/// returned.
pub fn ab_from_dinf_lipschitz(
    alpha: f64,
    beta: f64,
    lambda_s: f64,
    lambda_u: f64,
) -> Result<DinfConversion, BundleError> {
    require_rate("alpha", alpha)?;
    require_rate("beta", beta)?;
    require_rate("lambda_s", lambda_s)?;
    require_rate("lambda_u", lambda_u)?;
    if alpha * beta >= 1.0 {
        return Err(BundleError::Inadmissible(format!(
            "alpha * beta = {} is not below one",
            alpha * beta
        )));
    }
    let c = lambda_s * lambda_u;
    if c >= 1.0 {
        return Err(BundleError::Inadmissible(format!(
            "lambda_s * lambda_u = {c} is not below one"
        )));
    }
    if alpha * beta < c {
        Ok(DinfConversion {
            ab: ConvertedAb {
                alpha: alpha / c,
                alpha_prime: alpha,
                beta: beta / c,
                beta_prime: beta,
                lambda_s,
                lambda_u,
            },
            refined: true,
        })
    } else {
        Ok(DinfConversion {
            ab: ConvertedAb {
                alpha,
                alpha_prime: alpha,
                beta,
                beta_prime: beta,
                lambda_s,
                lambda_u,
            },
            refined: false,
        })
    }
}

/// Result of the sum-metric Lipschitz conversion.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct D1Conversion {
    pub ab: ConvertedAb,
    /// The cone-scale parameter the conversion was run at.
    pub c: f64,
}

/// Convert Lipschitz constants stated for the sum metric on the fiber
/// product into cone form, at cone scale `c` in `(0, 1]`.
///
/// Admissibility: `lambda_s lambda_u < c^2` and
/// `alpha beta < (c - sqrt(lambda_s lambda_u))^2`. The cone openings solve a
/// quadratic balance equation; its smaller root is taken.
pub fn ab_from_d1_lipschitz(
    alpha: f64,
    beta: f64,
    lambda_s: f64,
    lambda_u: f64,
    c: f64,
) -> Result<D1Conversion, BundleError> {
    require_rate("alpha", alpha)?;
    require_rate("beta", beta)?;
    require_rate("lambda_s", lambda_s)?;
    require_rate("lambda_u", lambda_u)?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(BundleError::Inadmissible(format!(
            "cone scale c = {c} must lie in (0, 1]"
        )));
    }
    let prod = lambda_s * lambda_u;
    if prod >= c * c {
        return Err(BundleError::Inadmissible(format!(
            "lambda_s * lambda_u = {prod} is not below c^2 = {}",
            c * c
        )));
    }
    let margin = c - prod.sqrt();
    if alpha * beta >= margin * margin {
        return Err(BundleError::Inadmissible(format!(
            "alpha * beta = {} is not below (c - sqrt(lambda_s lambda_u))^2 = {}",
            alpha * beta,
            margin * margin
        )));
    }
    let b = c - prod + alpha * beta;
    let disc = (b * b - 4.0 * c * alpha * beta).max(0.0);
    let root = disc.sqrt();
    let alpha_new = if beta < 1e-14 {
        c * alpha / b
    } else {
        (b - root) / (2.0 * beta)
    };
    let beta_new = if alpha < 1e-14 {
        c * beta / b
    } else {
        (b - root) / (2.0 * alpha)
    };
    let lambda_s_new = lambda_s / (1.0 - alpha_new * beta);
    let lambda_u_new = lambda_u / (1.0 - beta_new * alpha);
    if alpha_new * beta_new >= 1.0 || lambda_s_new * lambda_u_new >= 1.0 {
        return Err(BundleError::Inadmissible(format!(
            "converted constants violate their own admissibility: alpha beta = {}, lambda_s lambda_u = {}",
            alpha_new * beta_new,
            lambda_s_new * lambda_u_new
        )));
    }
    Ok(D1Conversion {
        ab: ConvertedAb {
            alpha: alpha_new,
            alpha_prime: c * alpha_new,
            beta: beta_new,
            beta_prime: c * beta_new,
            lambda_s: lambda_s_new,
            lambda_u: lambda_u_new,
        },
        c,
    })
}

/// Result of the two-parameter sum-metric conversion.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct D1RhoConversion {
    pub ab: ConvertedAb,
    pub rho1: f64,
    pub rho2: f64,
    /// `rho1 + rho2`, the cone-closing scale of the output.
    pub rho: f64,
}

/// Convert sum-metric Lipschitz constants into cone form with an explicit
/// splitting `(rho1, rho2)` of the cone budget.
///
/// Admissibility (strict except the last):
/// `lambda_s lambda_u < rho2 < sqrt(lambda_s lambda_u)` as numbers below one,
/// `1 - lambda_s lambda_u / rho2 < rho1 < 1 - rho2`, and
/// `alpha beta <= rho1 (1 - lambda_s lambda_u / rho2)`.
pub fn ab_from_d1_rho(
    alpha: f64,
    beta: f64,
    lambda_s: f64,
    lambda_u: f64,
    rho1: f64,
    rho2: f64,
) -> Result<D1RhoConversion, BundleError> {
    require_rate("alpha", alpha)?;
    require_rate("beta", beta)?;
    require_rate("lambda_s", lambda_s)?;
    require_rate("lambda_u", lambda_u)?;
    let prod = lambda_s * lambda_u;
    if !(prod < rho2 && rho2 < prod.sqrt()) {
        return Err(BundleError::Inadmissible(format!(
            "rho2 = {rho2} must lie strictly between lambda_s lambda_u = {prod} and its square root {}",
            prod.sqrt()
        )));
    }
    let slack = 1.0 - prod / rho2;
    if !(slack < rho1 && rho1 < 1.0 - rho2) {
        return Err(BundleError::Inadmissible(format!(
            "rho1 = {rho1} must lie strictly between 1 - lambda_s lambda_u / rho2 = {slack} and 1 - rho2 = {}",
            1.0 - rho2
        )));
    }
    if alpha * beta > rho1 * slack {
        return Err(BundleError::Inadmissible(format!(
            "alpha * beta = {} exceeds rho1 (1 - lambda_s lambda_u / rho2) = {}",
            alpha * beta,
            rho1 * slack
        )));
    }
    let alpha_new = alpha / rho1;
    let beta_new = beta / rho1;
    let rho = rho1 + rho2;
    Ok(D1RhoConversion {
        ab: ConvertedAb {
            alpha: alpha_new,
            alpha_prime: rho * alpha_new,
            beta: beta_new,
            beta_prime: rho * beta_new,
            lambda_s: lambda_s / (1.0 - alpha_new * beta),
            lambda_u: lambda_u / (1.0 - beta_new * alpha),
        },
        rho1,
        rho2,
        rho,
    })
}

/// Result of the converse-Lipschitz conversion.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChaperonConversion {
    pub ab: ConvertedAb,
    /// `lambda_u < 1` is guaranteed whenever `v0 + mu0 < 1`.
    pub lambda_u_below_one: bool,
    /// `lambda_s < 1` is guaranteed whenever `k0 < 1`.
    pub lambda_s_below_one: bool,
}

/// Convert constants of the converse-Lipschitz format `(k0, v0, mu0)` -
/// horizontal contraction `k0`, vertical backward rate `v0`, vertical
/// cross-coupling `mu0` - into cone form; requires `mu0 + v0 k0 < 1`.
pub fn ab_from_chaperon(k0: f64, v0: f64, mu0: f64) -> Result<ChaperonConversion, BundleError> {
    require_rate("k0", k0)?;
    require_rate("v0", v0)?;
    require_rate("mu0", mu0)?;
    if mu0 + v0 * k0 >= 1.0 {
        return Err(BundleError::Inadmissible(format!(
            "mu0 + v0 k0 = {} is not below one",
            mu0 + v0 * k0
        )));
    }
    let disc = (1.0 - 4.0 * k0 * v0 * mu0).max(0.0);
    let alpha = 2.0 * v0 * k0 / (1.0 + disc.sqrt());
    let beta = mu0 / (1.0 - k0 * v0);
    let lambda_s = k0;
    let lambda_u = v0 / (1.0 - alpha * mu0);
    Ok(ChaperonConversion {
        ab: ConvertedAb {
            alpha,
            alpha_prime: alpha,
            beta,
            beta_prime: beta,
            lambda_s,
            lambda_u,
        },
        lambda_u_below_one: v0 + mu0 < 1.0,
        lambda_s_below_one: k0 < 1.0,
    })
}

/// Result of the power conversion.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PowerConversion {
    /// The power of the correspondence the output constants apply to.
    pub n: usize,
    pub rho1: f64,
    pub rho2: f64,
    /// `rho1 + rho2 < 1/2`.
    pub rho: f64,
    /// Constants for the `n`-th power: the vertical hypothesis cone widens to
    /// `beta / rho1` and the rates become the `n`-step ones.
    pub ab: ConvertedAb,
}

/// Pass to a power of the correspondence so that cone constants with a small
/// opening product become admissible for the two-parameter splitting.
///
/// Requires `lambda_s lambda_u < 1` and `alpha beta < 1/4`. The power `n`
/// starts at the smallest value with
/// `(lambda_s lambda_u)^{n/2} < min(1 - sqrt(alpha beta), 1/2)` and grows
/// until the induced splitting satisfies `rho1 + rho2 < 1/2`.
pub fn ab_from_power(
    alpha: f64,
    beta: f64,
    lambda_s: f64,
    lambda_u: f64,
) -> Result<PowerConversion, BundleError> {
    require_rate("alpha", alpha)?;
    require_rate("beta", beta)?;
    require_rate("lambda_s", lambda_s)?;
    require_rate("lambda_u", lambda_u)?;
    let prod = lambda_s * lambda_u;
    if prod >= 1.0 {
        return Err(BundleError::Inadmissible(format!(
            "lambda_s * lambda_u = {prod} is not below one"
        )));
    }
    let opening = alpha * beta;
    if opening >= 0.25 {
        return Err(BundleError::Inadmissible(format!(
            "alpha * beta = {opening} is not below 1/4"
        )));
    }
    let target = (1.0 - opening.sqrt()).min(0.5);
    let mut n = 1usize;
    while prod.powf(n as f64 / 2.0) >= target {
        n += 1;
        if n > 10_000 {
            return Err(BundleError::Inadmissible(
                "no admissible power below 10000 steps".into(),
            ));
        }
    }
    loop {
        let l = prod.powi(n as i32);
        let rho2 = 0.5 * (l / (1.0 - 2.0 * opening) + l / (1.0 - opening.sqrt()));
        let lower = (opening / (1.0 - l / rho2)).max(1.0 - l / rho2);
        let rho1 = 0.5 * (lower + 0.5);
        let rho = rho1 + rho2;
        if rho < 0.5 {
            let beta1 = beta / rho1;
            let lambda_s_new = lambda_s.powi(n as i32) / (1.0 - beta1 * alpha);
            let lambda_u_new = lambda_u.powi(n as i32);
            if alpha * beta1 >= 1.0 || lambda_s_new * lambda_u_new >= 1.0 {
                return Err(BundleError::Inadmissible(format!(
                    "power constants violate their own admissibility at n = {n}"
                )));
            }
            return Ok(PowerConversion {
                n,
                rho1,
                rho2,
                rho,
                ab: ConvertedAb {
                    alpha,
                    alpha_prime: rho * alpha,
                    beta: beta1,
                    beta_prime: rho * beta1,
                    lambda_s: lambda_s_new,
                    lambda_u: lambda_u_new,
                },
            });
        }
        n += 1;
        if n > 10_000 {
            return Err(BundleError::Inadmissible(
                "no admissible power below 10000 steps".into(),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dinf_plain_form_copies_the_constants() {
        let out = ab_from_dinf_lipschitz(0.3, 0.3, 0.9, 0.9).unwrap();
        // alpha beta = 0.09 >= 0.81 is false, so the refined form applies...
        assert!(out.refined);
        assert!((out.ab.alpha - 0.3 / 0.81).abs() < 1e-15);
        assert!((out.ab.alpha_prime - 0.3).abs() < 1e-15);

        let plain = ab_from_dinf_lipschitz(0.5, 0.5, 0.4, 0.4).unwrap();
        // alpha beta = 0.25 >= lambda_s lambda_u = 0.16: plain form.
        assert!(!plain.refined);
        assert!((plain.ab.alpha - 0.5).abs() < 1e-15);
        assert!((plain.ab.beta_prime - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dinf_rejects_products_at_one() {
        assert!(ab_from_dinf_lipschitz(1.0, 1.0, 0.5, 0.5).is_err());
        assert!(ab_from_dinf_lipschitz(0.1, 0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn d1_conversion_reproduces_the_symmetric_reference_point() {
        let out = ab_from_d1_lipschitz(0.1, 0.1, 0.5, 0.5, 1.0).unwrap();
        // b = 1 - 0.25 + 0.01 = 0.76, disc = 0.5376; the stable form of the
        // smaller root is 2 c alpha / (b + sqrt(disc)).
        let b = 0.76f64;
        let root = (b * b - 4.0 * 0.01f64).sqrt();
        let expect = 2.0 * 0.1 / (b + root);
        assert!((out.ab.alpha - expect).abs() < 1e-12);
        assert!((out.ab.alpha - 0.13393944).abs() < 1e-7);
        assert!((out.ab.beta - out.ab.alpha).abs() < 1e-15);
        assert!((out.ab.lambda_s - 0.50678794).abs() < 1e-7);
        assert!((out.ab.lambda_u - out.ab.lambda_s).abs() < 1e-12);
        assert!((out.ab.alpha_prime - out.ab.alpha).abs() < 1e-15);
        // Cross check quoted downstream: alpha * beta ~ 0.01794.
        assert!((out.ab.alpha * out.ab.beta - 0.01794).abs() < 1e-5);
    }

    #[test]
    fn d1_zero_opening_limits_are_continuous() {
        // beta = 0: alpha limit is c alpha / b.
        let out = ab_from_d1_lipschitz(0.0, 1.0, 0.5, 0.5, 1.0).unwrap();
        let b = 1.0 - 0.25 + 0.0;
        assert!((out.ab.beta - 1.0 / b).abs() < 1e-14);
        assert_eq!(out.ab.alpha, 0.0);
        assert!((out.ab.beta - 4.0 / 3.0).abs() < 1e-14);
        // The nearby small-alpha case agrees to first order. The literal
        // root quotient loses digits near a zero opening, so the match is
        // asked for only well above that noise.
        let near = ab_from_d1_lipschitz(1e-10, 1.0, 0.5, 0.5, 1.0).unwrap();
        assert!((near.ab.beta - out.ab.beta).abs() < 1e-5);
    }

    #[test]
    fn d1_rejects_openings_outside_the_margin() {
        // margin = (1 - sqrt(0.25))^2 = 0.25; alpha beta = 0.25 is rejected.
        assert!(ab_from_d1_lipschitz(0.5, 0.5, 0.5, 0.5, 1.0).is_err());
        assert!(ab_from_d1_lipschitz(0.1, 0.1, 1.0, 1.0, 1.0).is_err());
        assert!(ab_from_d1_lipschitz(0.1, 0.1, 0.5, 0.5, 0.0).is_err());
        assert!(ab_from_d1_lipschitz(0.1, 0.1, 0.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn d1_rho_enforces_the_strict_window() {
        // lambda_s lambda_u = 0.2: rho2 must lie in (0.2, 0.4472).
        assert!(ab_from_d1_rho(0.01, 0.01, 0.5, 0.4, 0.4, 0.45).is_err());
        // rho1 = 0.55 sits just below the strict lower bound 0.5505...
        assert!(ab_from_d1_rho(0.01, 0.01, 0.5, 0.4, 0.55, 0.445).is_err());
        // Nudging rho1 above the bound admits the input.
        let out = ab_from_d1_rho(0.01, 0.01, 0.5, 0.4, 0.551, 0.445).unwrap();
        assert!((out.ab.alpha - 0.01 / 0.551).abs() < 1e-12);
        assert!((out.rho - 0.996).abs() < 1e-12);
        assert!((out.ab.alpha_prime - out.rho * out.ab.alpha).abs() < 1e-15);
        assert!((out.ab.lambda_s - 0.5 / (1.0 - out.ab.alpha * 0.01)).abs() < 1e-12);
    }

    #[test]
    fn chaperon_reference_point_matches_hand_values() {
        let out = ab_from_chaperon(0.5, 0.5, 0.2).unwrap();
        assert!((out.ab.alpha - 0.2639320).abs() < 1e-6);
        assert!((out.ab.beta - 0.2666667).abs() < 1e-6);
        assert!((out.ab.lambda_s - 0.5).abs() < 1e-15);
        assert!((out.ab.lambda_u - 0.5278640).abs() < 1e-6);
        assert!(out.lambda_u_below_one);
        assert!(out.lambda_s_below_one);
    }

    #[test]
    fn chaperon_rejects_coupled_rates_at_one() {
        assert!(ab_from_chaperon(0.5, 0.5, 0.75).is_err());
    }

    #[test]
    fn power_reference_point_lands_on_the_frozen_power() {
        let out = ab_from_power(0.2, 0.2, 0.9, 0.9).unwrap();
        assert_eq!(out.n, 12);
        assert!(out.rho < 0.5);
        assert!((out.ab.beta - 0.5145).abs() < 1e-3);
        assert!((out.ab.lambda_s * out.ab.lambda_u - 0.089).abs() < 1e-3);
        assert!(out.ab.alpha * out.ab.beta < 1.0);
    }

    #[test]
    fn power_rejects_wide_openings() {
        assert!(ab_from_power(0.5, 0.5, 0.9, 0.9).is_err());
        assert!(ab_from_power(0.2, 0.2, 1.0, 1.0).is_err());
    }
}
