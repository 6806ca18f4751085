//! Cone-and-rate condition machinery: empirical spot checks of declared
//! constants against the actual maps, conversions from other common
//! hypothesis formats, Lyapunov-regularized rates, and the spectral gap laws
//! behind every regularity claim.

mod convert;
mod gap;
mod lyapunov;

pub use convert::{
    ab_from_chaperon, ab_from_d1_lipschitz, ab_from_d1_rho, ab_from_dinf_lipschitz, ab_from_power,
    ChaperonConversion, ConvertedAb, D1Conversion, D1RhoConversion, DinfConversion,
    PowerConversion,
};
pub use gap::{gap_audit, gap_exponent, gap_quantity, GapLaw, GapRates};
pub use lyapunov::sup_lyapunov_number;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundle::{sup_dist, AbParams, AbVariant, BundleError, GeneratingPair};

/// One sampled pair on which a declared condition failed.
#[derive(Clone, Debug, Serialize)]
pub struct AbCounterexample {
    pub index: usize,
    /// Which inequality failed, e.g. `"A1"` or `"B' lambda_s"`.
    pub condition: String,
    pub lhs: f64,
    pub rhs: f64,
    pub x1: Vec<f64>,
    pub y2: Vec<f64>,
    pub x1_alt: Vec<f64>,
    pub y2_alt: Vec<f64>,
}

/// Outcome of an empirical cone-condition check.
#[derive(Clone, Debug, Serialize)]
pub struct AbCheckReport {
    pub variant: String,
    pub pairs_tested: usize,
    /// How often the first-row hypothesis held on sampled pairs.
    pub a_hypothesis_hits: usize,
    /// How often the second-row hypothesis held on sampled pairs.
    pub b_hypothesis_hits: usize,
    pub violations: usize,
    /// The first ten violations, for diagnosis.
    pub counterexamples: Vec<AbCounterexample>,
    pub satisfied: bool,
}

/// `lhs <= rhs` up to relative slack `1e-9` and absolute slack `1e-12`;
/// anything beyond counts as a violation.
fn violates(lhs: f64, rhs: f64) -> bool {
    !(lhs <= rhs * (1.0 + 1e-9) + 1e-12)
}

struct SampledStep {
    x1: Vec<f64>,
    y2: Vec<f64>,
    y1: Vec<f64>,
    x2: Vec<f64>,
}

/// Sample pairs of related points and test the declared per-index constants
/// against the actual generating maps.
///
/// The first row is checked in implication form for `Ab` and in Lipschitz
/// form (pairs sharing the horizontal source point) otherwise; the second row
/// is checked in implication form except under `ApBp`, where it too becomes a
/// Lipschitz check on pairs sharing the vertical target point. Implication
/// hypotheses are tested as sampled, never assumed, and the report counts how
/// often they held.
pub fn check_ab_empirical(
    pair: &GeneratingPair,
    params: &AbParams,
    variant: AbVariant,
    samples_per_index: usize,
    seed: u64,
) -> Result<AbCheckReport, BundleError> {
    let base = pair.base();
    if params.len() != base.count() {
        return Err(BundleError::Invalid(
            "parameter length disagrees with the base".into(),
        ));
    }
    let spec = pair.fibers();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AbCheckReport {
        variant: format!("{variant:?}"),
        pairs_tested: 0,
        a_hypothesis_hits: 0,
        b_hypothesis_hits: 0,
        violations: 0,
        counterexamples: Vec::new(),
        satisfied: true,
    };

    let sample_x = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..spec.dim_x)
            .map(|_| rng.random_range(-spec.radius_x..=spec.radius_x))
            .collect()
    };
    let sample_y = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..spec.dim_y)
            .map(|_| rng.random_range(-spec.radius_y..=spec.radius_y))
            .collect()
    };

    for m in 0..base.count() {
        let eval = |x1: Vec<f64>, y2: Vec<f64>| -> SampledStep {
            let y1 = pair.eval_g(m, &x1, &y2);
            let x2 = pair.eval_f(m, &x1, &y2);
            SampledStep { x1, y2, y1, x2 }
        };
        let record = |report: &mut AbCheckReport,
                      condition: &str,
                      lhs: f64,
                      rhs: f64,
                      a: &SampledStep,
                      b: &SampledStep| {
            if violates(lhs, rhs) {
                report.violations += 1;
                report.satisfied = false;
                if report.counterexamples.len() < 10 {
                    report.counterexamples.push(AbCounterexample {
                        index: m,
                        condition: condition.to_string(),
                        lhs,
                        rhs,
                        x1: a.x1.clone(),
                        y2: a.y2.clone(),
                        x1_alt: b.x1.clone(),
                        y2_alt: b.y2.clone(),
                    });
                }
            }
        };

        for s in 0..samples_per_index {
            report.pairs_tested += 1;
            let first = eval(sample_x(&mut rng), sample_y(&mut rng));

            let a_lipschitz = !matches!(variant, AbVariant::Ab);
            let b_lipschitz = matches!(variant, AbVariant::ApBp);

            // Pick the partner so each row's hypothesis gets regular hits:
            // sharing x1 forces the first-row hypothesis, sharing y2 the
            // second-row one.
            let second = match (a_lipschitz, b_lipschitz, s % 3) {
                (true, true, _) | (true, false, 0) => {
                    if s % 2 == 0 {
                        eval(first.x1.clone(), sample_y(&mut rng))
                    } else {
                        eval(sample_x(&mut rng), first.y2.clone())
                    }
                }
                (_, _, 0) => eval(sample_x(&mut rng), sample_y(&mut rng)),
                (_, _, 1) => eval(first.x1.clone(), sample_y(&mut rng)),
                _ => eval(sample_x(&mut rng), first.y2.clone()),
            };

            let dx1 = sup_dist(&first.x1, &second.x1);
            let dy1 = sup_dist(&first.y1, &second.y1);
            let dx2 = sup_dist(&first.x2, &second.x2);
            let dy2 = sup_dist(&first.y2, &second.y2);

            if a_lipschitz {
                if dx1 == 0.0 {
                    report.a_hypothesis_hits += 1;
                    record(
                        &mut report,
                        "A' alpha'",
                        dx2,
                        params.alpha_prime[m] * dy2,
                        &first,
                        &second,
                    );
                    record(
                        &mut report,
                        "A' lambda_u",
                        dy1,
                        params.lambda_u[m] * dy2,
                        &first,
                        &second,
                    );
                }
            } else if dx1 <= params.alpha[m] * dy1 {
                report.a_hypothesis_hits += 1;
                record(
                    &mut report,
                    "A1",
                    dx2,
                    params.alpha_prime[m] * dy2,
                    &first,
                    &second,
                );
                record(
                    &mut report,
                    "A2",
                    dy1,
                    params.lambda_u[m] * dy2,
                    &first,
                    &second,
                );
            }

            if b_lipschitz {
                if dy2 == 0.0 {
                    report.b_hypothesis_hits += 1;
                    record(
                        &mut report,
                        "B' beta'",
                        dy1,
                        params.beta_prime[m] * dx1,
                        &first,
                        &second,
                    );
                    record(
                        &mut report,
                        "B' lambda_s",
                        dx2,
                        params.lambda_s[m] * dx1,
                        &first,
                        &second,
                    );
                }
            } else if dy2 <= params.beta[m] * dx2 {
                report.b_hypothesis_hits += 1;
                record(
                    &mut report,
                    "B1",
                    dy1,
                    params.beta_prime[m] * dx1,
                    &first,
                    &second,
                );
                record(
                    &mut report,
                    "B2",
                    dx2,
                    params.lambda_s[m] * dx1,
                    &first,
                    &second,
                );
            }
        }
    }
    Ok(report)
}
