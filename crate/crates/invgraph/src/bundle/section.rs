//! Distinguished section pairs: the almost-invariant reference points in each
//! fiber around which graphs are solved, together with their declared defect
//! bounds.

use super::base::DiscreteBase;
use super::error::BundleError;
use super::fiber::FiberSpec;
use super::vect::{all_finite, sup_norm};

/// A pair of sections `m -> i_X(m)` and `m -> i_Y(m)` with per-index defect
/// bounds.
///
/// `eta(m)` bounds the `Y`-side invariance error and `epsilon(m)` the
/// `X`-side one. A zero `eta` on an index asserts exact invariance there and
/// removes the index from weighted distance measurements.
#[derive(Clone, Debug)]
pub struct SectionPair {
    i_x: Vec<Vec<f64>>,
    i_y: Vec<Vec<f64>>,
    eta: Vec<f64>,
    epsilon: Vec<f64>,
}

impl SectionPair {
    /// Zero sections with zero declared defects.
    pub fn zero(base_count: usize, dim_x: usize, dim_y: usize) -> Self {
        SectionPair {
            i_x: vec![vec![0.0; dim_x]; base_count],
            i_y: vec![vec![0.0; dim_y]; base_count],
            eta: vec![0.0; base_count],
            epsilon: vec![0.0; base_count],
        }
    }

    /// Build from explicit per-index data.
    pub fn new(
        i_x: Vec<Vec<f64>>,
        i_y: Vec<Vec<f64>>,
        eta: Vec<f64>,
        epsilon: Vec<f64>,
    ) -> Result<Self, BundleError> {
        let n = i_x.len();
        if i_y.len() != n || eta.len() != n || epsilon.len() != n {
            return Err(BundleError::Invalid("section data lengths disagree".into()));
        }
        if n == 0 {
            return Err(BundleError::Invalid(
                "section pair needs at least one index".into(),
            ));
        }
        let dx = i_x[0].len();
        let dy = i_y[0].len();
        for m in 0..n {
            if i_x[m].len() != dx || i_y[m].len() != dy {
                return Err(BundleError::Invalid(
                    "section dimensions vary over the base".into(),
                ));
            }
            if !all_finite(&i_x[m]) || !all_finite(&i_y[m]) {
                return Err(BundleError::Invalid(format!(
                    "non-finite section value at index {m}"
                )));
            }
            if !(eta[m] >= 0.0 && eta[m].is_finite())
                || !(epsilon[m] >= 0.0 && epsilon[m].is_finite())
            {
                return Err(BundleError::Invalid(format!(
                    "defect bounds at index {m} must be finite and nonnegative"
                )));
            }
        }
        Ok(SectionPair {
            i_x,
            i_y,
            eta,
            epsilon,
        })
    }

    /// Sample sections from functions of the base index, with constant defect
    /// bounds.
    pub fn from_fn(
        base_count: usize,
        f_x: impl Fn(usize) -> Vec<f64>,
        f_y: impl Fn(usize) -> Vec<f64>,
        eta: f64,
        epsilon: f64,
    ) -> Result<Self, BundleError> {
        SectionPair::new(
            (0..base_count).map(&f_x).collect(),
            (0..base_count).map(&f_y).collect(),
            vec![eta; base_count],
            vec![epsilon; base_count],
        )
    }

    /// Replace the declared defect bounds.
    pub fn with_defects(mut self, eta: Vec<f64>, epsilon: Vec<f64>) -> Result<Self, BundleError> {
        if eta.len() != self.base_count() || epsilon.len() != self.base_count() {
            return Err(BundleError::Invalid(
                "defect bound lengths disagree with the base".into(),
            ));
        }
        self.eta = eta;
        self.epsilon = epsilon;
        SectionPair::new(self.i_x, self.i_y, self.eta, self.epsilon)
    }

    pub fn base_count(&self) -> usize {
        self.i_x.len()
    }

    pub fn dim_x(&self) -> usize {
        self.i_x[0].len()
    }

    pub fn dim_y(&self) -> usize {
        self.i_y[0].len()
    }

    pub fn i_x(&self, m: usize) -> &[f64] {
        &self.i_x[m]
    }

    pub fn i_y(&self, m: usize) -> &[f64] {
        &self.i_y[m]
    }

    pub fn eta(&self, m: usize) -> f64 {
        self.eta[m]
    }

    pub fn epsilon(&self, m: usize) -> f64 {
        self.epsilon[m]
    }

    pub fn eta_slice(&self) -> &[f64] {
        &self.eta
    }

    pub fn epsilon_slice(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    pub fn max_epsilon(&self) -> f64 {
        self.epsilon.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Verify every section value sits inside its fiber ball.
    pub fn check_in_fibers(&self, spec: &FiberSpec) -> Result<(), BundleError> {
        if self.dim_x() != spec.dim_x || self.dim_y() != spec.dim_y {
            return Err(BundleError::Invalid(
                "section dimensions disagree with the fiber spec".into(),
            ));
        }
        for m in 0..self.base_count() {
            if sup_norm(&self.i_x[m]) > spec.radius_x + 1e-12 {
                return Err(BundleError::Invalid(format!(
                    "i_X({m}) lies outside its fiber ball"
                )));
            }
            if sup_norm(&self.i_y[m]) > spec.radius_y + 1e-12 {
                return Err(BundleError::Invalid(format!(
                    "i_Y({m}) lies outside its fiber ball"
                )));
            }
        }
        Ok(())
    }

    /// The section pair of the dual correspondence: fiber roles swap and the
    /// defect bounds transport along the inverse base map.
    pub fn dual(&self, base: &DiscreteBase) -> Result<Self, BundleError> {
        if base.count() != self.base_count() {
            return Err(BundleError::Invalid(
                "base size disagrees with the sections".into(),
            ));
        }
        if !base.invertible() {
            return Err(BundleError::NoInverse);
        }
        let n = self.base_count();
        let pre = |m: usize| base.u_inverse(m).expect("invertible base");
        SectionPair::new(
            self.i_y.clone(),
            self.i_x.clone(),
            (0..n).map(|m| self.epsilon[pre(m)]).collect(),
            (0..n).map(|m| self.eta[pre(m)]).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::base::DiscreteBase;

    #[test]
    fn zero_sections_have_zero_defects() {
        let s = SectionPair::zero(3, 2, 1);
        assert_eq!(s.i_x(2), &[0.0, 0.0]);
        assert_eq!(s.i_y(0), &[0.0]);
        assert_eq!(s.max_eta(), 0.0);
        assert_eq!(s.max_epsilon(), 0.0);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let err = SectionPair::new(
            vec![vec![0.0]; 3],
            vec![vec![0.0]; 2],
            vec![0.0; 3],
            vec![0.0; 3],
        );
        assert!(err.is_err());
    }

    #[test]
    fn fiber_ball_violations_are_reported() {
        let spec = FiberSpec::new(1, 1, 1.0, 1.0).unwrap();
        let s = SectionPair::new(
            vec![vec![0.5], vec![1.5]],
            vec![vec![0.0], vec![0.0]],
            vec![0.0; 2],
            vec![0.0; 2],
        )
        .unwrap();
        assert!(s.check_in_fibers(&spec).is_err());
    }

    #[test]
    fn dual_swaps_roles_and_transports_defects_backwards() {
        let base = DiscreteBase::periodic_orbit(3).unwrap();
        let s = SectionPair::new(
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![vec![-1.0], vec![-2.0], vec![-3.0]],
            vec![0.1, 0.2, 0.3],
            vec![0.4, 0.5, 0.6],
        )
        .unwrap();
        let d = s.dual(&base).unwrap();
        assert_eq!(d.i_x(1), &[-2.0]);
        assert_eq!(d.i_y(1), &[2.0]);
        // eta-dual at m picks up epsilon at the preimage: u^{-1}(1) = 0.
        assert!((d.eta(1) - 0.4).abs() < 1e-15);
        assert!((d.epsilon(1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn dual_requires_an_invertible_base() {
        use crate::bundle::base::TorusMap;
        let base = DiscreteBase::torus_grid(1, 8, TorusMap::Doubling).unwrap();
        let s = SectionPair::zero(8, 1, 1);
        assert!(s.dual(&base).is_err());
    }
}
