//! Per-index cone-and-rate constants for bundle correspondences, with the
//! transport rules for duals and compositions and the derived contraction
//! bounds used by the graph solvers.

use super::base::DiscreteBase;
use super::error::BundleError;

/// Which form of the cone conditions to check empirically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbVariant {
    /// Both rows in implication form on sampled point pairs.
    Ab,
    /// First row in Lipschitz form (pairs sharing the first argument), second
    /// row in implication form.
    ApB,
    /// Both rows in Lipschitz form.
    ApBp,
}

/// Per-index constants `(alpha; alpha', lambda_u)(beta; beta', lambda_s)`,
/// all indexed at the source point of the step `m -> u(m)`.
///
/// `epsilon1` is the optional section-shift constant entering the graph
/// transform contraction rate; `mu` the optional Lipschitz constant of the
/// base map used by base-regularity estimates (absent, audits fall back to
/// the base derivative norm). Neither survives dualization or composition.
#[derive(Clone, Debug)]
pub struct AbParams {
    pub alpha: Vec<f64>,
    pub alpha_prime: Vec<f64>,
    pub beta: Vec<f64>,
    pub beta_prime: Vec<f64>,
    pub lambda_s: Vec<f64>,
    pub lambda_u: Vec<f64>,
    pub epsilon1: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
}

impl AbParams {
    pub fn new(
        alpha: Vec<f64>,
        alpha_prime: Vec<f64>,
        beta: Vec<f64>,
        beta_prime: Vec<f64>,
        lambda_s: Vec<f64>,
        lambda_u: Vec<f64>,
    ) -> Result<Self, BundleError> {
        let n = alpha.len();
        if n == 0 {
            return Err(BundleError::Invalid(
                "parameters need at least one index".into(),
            ));
        }
        let all = [
            &alpha,
            &alpha_prime,
            &beta,
            &beta_prime,
            &lambda_s,
            &lambda_u,
        ];
        if all.iter().any(|v| v.len() != n) {
            return Err(BundleError::Invalid(
                "parameter vector lengths disagree".into(),
            ));
        }
        if all
            .iter()
            .any(|v| v.iter().any(|&x| !(x >= 0.0 && x.is_finite())))
        {
            return Err(BundleError::Invalid(
                "parameters must be finite and nonnegative".into(),
            ));
        }
        Ok(AbParams {
            alpha,
            alpha_prime,
            beta,
            beta_prime,
            lambda_s,
            lambda_u,
            epsilon1: None,
            mu: None,
        })
    }

    /// Constants that do not vary over the base.
    pub fn uniform(
        base_count: usize,
        alpha: f64,
        alpha_prime: f64,
        beta: f64,
        beta_prime: f64,
        lambda_s: f64,
        lambda_u: f64,
    ) -> Result<Self, BundleError> {
        AbParams::new(
            vec![alpha; base_count],
            vec![alpha_prime; base_count],
            vec![beta; base_count],
            vec![beta_prime; base_count],
            vec![lambda_s; base_count],
            vec![lambda_u; base_count],
        )
    }

    pub fn with_epsilon1(mut self, epsilon1: Vec<f64>) -> Result<Self, BundleError> {
        if epsilon1.len() != self.len() {
            return Err(BundleError::Invalid("epsilon1 length disagrees".into()));
        }
        if epsilon1.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(BundleError::Invalid(
                "epsilon1 must be finite and nonnegative".into(),
            ));
        }
        self.epsilon1 = Some(epsilon1);
        Ok(self)
    }

    pub fn with_mu(mut self, mu: Vec<f64>) -> Result<Self, BundleError> {
        if mu.len() != self.len() {
            return Err(BundleError::Invalid("mu length disagrees".into()));
        }
        if mu.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(BundleError::Invalid(
                "mu must be finite and nonnegative".into(),
            ));
        }
        self.mu = Some(mu);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn sup_alpha(&self) -> f64 {
        sup(&self.alpha)
    }

    pub fn sup_beta(&self) -> f64 {
        sup(&self.beta)
    }

    pub fn sup_beta_prime(&self) -> f64 {
        sup(&self.beta_prime)
    }

    pub fn sup_lambda_s(&self) -> f64 {
        sup(&self.lambda_s)
    }

    pub fn sup_lambda_u(&self) -> f64 {
        sup(&self.lambda_u)
    }

    fn check_base(&self, base: &DiscreteBase) -> Result<(), BundleError> {
        if base.count() != self.len() {
            return Err(BundleError::Invalid(
                "base size disagrees with the parameters".into(),
            ));
        }
        Ok(())
    }

    /// `sup_m alpha(m) * beta'(u(m))`: the angle product that must stay below
    /// one for the graph transform to be well posed.
    pub fn angle_sup(&self, base: &DiscreteBase) -> Result<f64, BundleError> {
        self.check_base(base)?;
        Ok((0..self.len())
            .map(|m| self.alpha[m] * self.beta_prime[base.u(m)])
            .fold(0.0f64, f64::max))
    }

    /// Per-index `1 / (1 - alpha(m) beta'(u(m)))`; errors when the angle
    /// product reaches one anywhere.
    pub fn vartheta(&self, base: &DiscreteBase) -> Result<Vec<f64>, BundleError> {
        self.check_base(base)?;
        (0..self.len())
            .map(|m| {
                let p = self.alpha[m] * self.beta_prime[base.u(m)];
                if p < 1.0 {
                    Ok(1.0 / (1.0 - p))
                } else {
                    Err(BundleError::Inadmissible(format!(
                        "angle product {p} at index {m} is not below one"
                    )))
                }
            })
            .collect()
    }

    /// Contraction rate of the graph transform in the weighted sup metric:
    /// `sup_m (lambda_u lambda_s + lambda_u epsilon1)(m) / (1 - alpha(m) beta'(u(m)))`.
    pub fn theta_contraction(&self, base: &DiscreteBase) -> Result<f64, BundleError> {
        let vartheta = self.vartheta(base)?;
        Ok((0..self.len())
            .map(|m| {
                let e1 = self.epsilon1.as_ref().map_or(0.0, |e| e[m]);
                (self.lambda_u[m] * self.lambda_s[m] + self.lambda_u[m] * e1) * vartheta[m]
            })
            .fold(0.0f64, f64::max))
    }

    /// `sup_m lambda_u(m) epsilon1(m) / (1 - alpha(m) beta'(u(m)))`: the rate
    /// at which section defects feed into the solved graph.
    pub fn lambda_bar_1(&self, base: &DiscreteBase) -> Result<f64, BundleError> {
        let vartheta = self.vartheta(base)?;
        Ok((0..self.len())
            .map(|m| {
                let e1 = self.epsilon1.as_ref().map_or(0.0, |e| e[m]);
                self.lambda_u[m] * e1 * vartheta[m]
            })
            .fold(0.0f64, f64::max))
    }

    /// Amplification constant bounding `|f(i_X) - i_Y|` by the defect size.
    pub fn k1(&self, base: &DiscreteBase) -> Result<f64, BundleError> {
        let lb1 = self.lambda_bar_1(base)?;
        if lb1 >= 1.0 {
            return Err(BundleError::Inadmissible(format!(
                "defect feedback rate {lb1} is not below one"
            )));
        }
        Ok((lb1 * self.sup_beta() + 1.0) / (1.0 - lb1))
    }

    /// Amplification constant for the horizontal displacement of tracked
    /// orbits.
    pub fn k2(&self, base: &DiscreteBase) -> Result<f64, BundleError> {
        let k1 = self.k1(base)?;
        let angle = self.angle_sup(base)?;
        if angle >= 1.0 {
            return Err(BundleError::Inadmissible(format!(
                "angle product {angle} is not below one"
            )));
        }
        Ok((self.sup_alpha() * k1 + 1.0) / (1.0 - angle))
    }

    /// Constants of the dual correspondence: rows swap and every constant is
    /// read at the preimage index.
    pub fn dual(&self, base: &DiscreteBase) -> Result<Self, BundleError> {
        self.check_base(base)?;
        if !base.invertible() {
            return Err(BundleError::NoInverse);
        }
        let pre = |m: usize| base.u_inverse(m).expect("invertible base");
        let n = self.len();
        AbParams::new(
            (0..n).map(|m| self.beta[pre(m)]).collect(),
            (0..n).map(|m| self.beta_prime[pre(m)]).collect(),
            (0..n).map(|m| self.alpha[pre(m)]).collect(),
            (0..n).map(|m| self.alpha_prime[pre(m)]).collect(),
            (0..n).map(|m| self.lambda_u[pre(m)]).collect(),
            (0..n).map(|m| self.lambda_s[pre(m)]).collect(),
        )
    }

    /// Constants of the `n`-fold composed correspondence.
    ///
    /// Requires the cone hypotheses to chain along every orbit segment:
    /// `alpha'(u^k m) <= alpha(u^{k+1} m)` and `beta'(u^k m) <= beta(u^{k-1} m)`.
    pub fn compose_n(&self, base: &DiscreteBase, n: usize) -> Result<Self, BundleError> {
        self.check_base(base)?;
        if n == 0 {
            return Err(BundleError::Invalid(
                "composition power must be positive".into(),
            ));
        }
        let count = self.len();
        let slack = 1e-12;
        for m in 0..count {
            let orbit = base.orbit(m, n - 1);
            for k in 0..n.saturating_sub(1) {
                let a_out = self.alpha_prime[orbit[k]];
                let a_in = self.alpha[orbit[k + 1]];
                if a_out > a_in + slack {
                    return Err(BundleError::Inadmissible(format!(
                        "alpha'({}) = {a_out} exceeds alpha({}) = {a_in}; the cone hypotheses do not chain",
                        orbit[k], orbit[k + 1]
                    )));
                }
                let b_out = self.beta_prime[orbit[k + 1]];
                let b_in = self.beta[orbit[k]];
                if b_out > b_in + slack {
                    return Err(BundleError::Inadmissible(format!(
                        "beta'({}) = {b_out} exceeds beta({}) = {b_in}; the cone hypotheses do not chain",
                        orbit[k + 1], orbit[k]
                    )));
                }
            }
        }
        let mut lambda_s = vec![1.0; count];
        let mut lambda_u = vec![1.0; count];
        let mut alpha_prime = vec![0.0; count];
        let mut beta = vec![0.0; count];
        for m in 0..count {
            let orbit = base.orbit(m, n - 1);
            for &i in &orbit {
                lambda_s[m] *= self.lambda_s[i];
                lambda_u[m] *= self.lambda_u[i];
            }
            let last = orbit[n - 1];
            alpha_prime[m] = self.alpha_prime[last];
            beta[m] = self.beta[last];
        }
        AbParams::new(
            self.alpha.clone(),
            alpha_prime,
            beta,
            self.beta_prime.clone(),
            lambda_s,
            lambda_u,
        )
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b))
}
