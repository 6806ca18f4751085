//! Error types: construction/validation failures versus solver runtime
//! failures.

use thiserror::Error;

/// Construction or validation failure for bases, fibers, sections, or
/// parameter tables.
#[derive(Debug, Error)]
pub enum BundleError {
    /// Malformed input data (dimensions, signs, finiteness).
    #[error("invalid construction: {0}")]
    Invalid(String),
    /// The base map has no inverse but one is required.
    #[error("base map has no inverse")]
    NoInverse,
    /// Parameters violate a closed-form admissibility constraint.
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    /// A named parameter required by the requested audit is absent.
    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),
    /// A regression-style estimate was asked for with too few usable samples.
    #[error("insufficient pairs: have {have}, need {need}")]
    InsufficientPairs { have: usize, need: usize },
}

/// Runtime failure of an iteration, audit, or orbit computation.
#[derive(Debug, Error)]
pub enum SolveError {
    /// Two successive step ratios of a fixed-point iteration reached 1.
    #[error("iteration is not contracting (step ratio {ratio:.4} at iteration {at})")]
    NotContracting { ratio: f64, at: usize },
    /// The iteration budget ran out before the tolerance was met.
    #[error("maximum iterations exceeded (last sup-change {last_change:.3e})")]
    MaxIterExceeded { last_change: f64 },
    /// A non-finite coordinate appeared.
    #[error("non-finite value produced at iteration {0}")]
    NonFinite(usize),
    /// The product `sup alpha(m) * betaPrime(u(m))` (or a composite Lipschitz
    /// product) reached its admissible limit.
    #[error("angle condition violated: product {product:.6} >= limit {limit}")]
    AngleConditionViolated { product: f64, limit: f64 },
    /// A spectral-gap audit failed and `force` was not set.
    #[error("spectral gap violated: {0}")]
    SpectralGapViolated(String),
    /// The Y-boundedness audit of the weighted solver failed.
    #[error("boundedness audit failed: {0}")]
    BoundednessViolated(String),
    /// The supplied section fails its defect or pseudo-stability audit.
    #[error("section audit failed: {0}")]
    InvalidSection(String),
    /// An orbit left the safety box around the fibers.
    #[error("fiber escape at step {step} (sup norm {norm:.3e})")]
    FiberEscape { step: usize, norm: f64 },
    /// A leaf-intersection solve failed to contract.
    #[error("leaf intersection did not contract: {0}")]
    NonIntersecting(String),
    /// A post-hoc certificate (contraction ratio, Lipschitz bound,
    /// displacement bound, or invariance residual) failed on a converged
    /// solution and `force` was not set.
    #[error("certificate violated: {0}")]
    CertificateViolated(String),
    /// No admissible choice exists for a derived constant (for example the
    /// local-solver radius chain).
    #[error("inadmissible: {0}")]
    Inadmissible(String),
    /// A base-direction derivative was requested over a base that carries no
    /// coordinate lattice or base-map derivative.
    #[error("base is not grid compatible: {0}")]
    BaseNotGridCompatible(String),
    /// Construction-level failure surfaced during a solve.
    #[error(transparent)]
    Construction(#[from] BundleError),
}
