//! Fixed-point iteration for the implicit equations that define generating
//! pairs and composed correspondences.

use super::error::SolveError;
use super::vect::{all_finite, sup_dist};

/// Tolerance and budget for an inner fixed-point solve.
#[derive(Clone, Copy, Debug)]
pub struct InnerSolve {
    /// Stop once the sup-norm step falls to or below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerSolve {
    fn default() -> Self {
        InnerSolve {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Result of a converged inner solve.
#[derive(Clone, Debug)]
pub struct InnerOutcome {
    /// The computed fixed point (the most recent image under the map).
    pub value: Vec<f64>,
    /// Size of the final step.
    pub residual: f64,
    pub iterations: usize,
}

/// Solve `y = g(y)` by direct iteration from `start`.
///
/// Divergence detection: two consecutive step-size ratios at or above one
/// abort the iteration, so a map that is not a contraction near the orbit
/// fails fast instead of burning the whole budget.
pub fn implicit_solve(
    g: impl Fn(&[f64]) -> Vec<f64>,
    start: &[f64],
    opts: &InnerSolve,
) -> Result<InnerOutcome, SolveError> {
    let mut y = start.to_vec();
    let mut prev_step = f64::INFINITY;
    let mut bad_ratios = 0usize;
    for k in 0..opts.max_iter {
        let next = g(&y);
        if !all_finite(&next) {
            return Err(SolveError::NonFinite(k));
        }
        let step = sup_dist(&next, &y);
        y = next;
        if step <= opts.tol {
            return Ok(InnerOutcome {
                value: y,
                residual: step,
                iterations: k + 1,
            });
        }
        if prev_step.is_finite() && prev_step > 0.0 {
            let ratio = step / prev_step;
            if ratio >= 1.0 {
                bad_ratios += 1;
                if bad_ratios >= 2 {
                    return Err(SolveError::NotContracting { ratio, at: k });
                }
            } else {
                bad_ratios = 0;
            }
        }
        prev_step = step;
    }
    Err(SolveError::MaxIterExceeded {
        last_change: prev_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_to_the_half_cosine_fixed_point() {
        let out = implicit_solve(
            |y| vec![0.5 * y[0].cos()],
            &[0.0],
            &InnerSolve {
                tol: 1e-12,
                max_iter: 200,
            },
        )
        .unwrap();
        assert!((out.value[0] - 0.450184).abs() < 1e-5);
        assert!(out.residual <= 1e-12);
    }

    #[test]
    fn solves_linear_contractions_from_far_starts() {
        // y = 0.25 y + 3 has the fixed point 4.
        let out = implicit_solve(
            |y| vec![0.25 * y[0] + 3.0],
            &[-50.0],
            &InnerSolve::default(),
        )
        .unwrap();
        assert!((out.value[0] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn expanding_maps_abort_as_not_contracting() {
        let err = implicit_solve(
            |y| vec![2.0 * y[0] + 1.0],
            &[1.0],
            &InnerSolve {
                tol: 1e-12,
                max_iter: 1000,
            },
        )
        .unwrap_err();
        match err {
            SolveError::NotContracting { ratio, .. } => assert!(ratio >= 1.0),
            other => panic!("expected NotContracting, got {other}"),
        }
    }

    #[test]
    fn non_finite_images_are_reported_with_the_step() {
        let err = implicit_solve(
            |y| vec![if y[0] > 0.5 { f64::NAN } else { y[0] + 0.3 }],
            &[0.0],
            &InnerSolve::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SolveError::NonFinite(_)));
    }

    #[test]
    fn budget_exhaustion_reports_the_last_step() {
        let err = implicit_solve(
            |y| vec![0.9 * y[0]],
            &[1.0],
            &InnerSolve {
                tol: 1e-30,
                max_iter: 5,
            },
        )
        .unwrap_err();
        match err {
            SolveError::MaxIterExceeded { last_change } => assert!(last_change > 0.0),
            other => panic!("expected MaxIterExceeded, got {other}"),
        }
    }

    #[test]
    fn zero_dimensional_problems_converge_immediately() {
        let out = implicit_solve(|_| vec![], &[], &InnerSolve::default()).unwrap();
        assert!(out.value.is_empty());
        assert_eq!(out.residual, 0.0);
    }
}
