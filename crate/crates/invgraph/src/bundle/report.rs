//! Structured outcomes of solves and admissibility audits.

use serde::Serialize;

/// One scalar admissibility condition with its measured value and limit.
#[derive(Clone, Debug, Serialize)]
pub struct GapCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub satisfied: bool,
}

/// The collection of conditions audited before and during a solve.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GapAudit {
    pub checks: Vec<GapCheck>,
}

impl GapAudit {
    pub fn new() -> Self {
        GapAudit::default()
    }

    /// Record a strict-inequality condition `value < limit`.
    pub fn require_below(&mut self, name: &str, value: f64, limit: f64) -> bool {
        let satisfied = value < limit && value.is_finite();
        self.checks.push(GapCheck {
            name: name.to_string(),
            value,
            limit,
            satisfied,
        });
        satisfied
    }

    /// Record a non-strict condition `value <= limit`.
    pub fn require_at_most(&mut self, name: &str, value: f64, limit: f64) -> bool {
        let satisfied = value <= limit && value.is_finite();
        self.checks.push(GapCheck {
            name: name.to_string(),
            value,
            limit,
            satisfied,
        });
        satisfied
    }

    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn first_failure(&self) -> Option<&GapCheck> {
        self.checks.iter().find(|c| !c.satisfied)
    }
}

/// Aggregate statistics over the inner fixed-point solves of one outer run.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct InnerStats {
    pub calls: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
}

impl InnerStats {
    pub fn record(&mut self, iterations: usize, residual: f64) {
        self.calls += 1;
        self.total_iterations += iterations;
        self.max_iterations = self.max_iterations.max(iterations);
        self.max_residual = self.max_residual.max(residual);
    }

    pub fn merge(&mut self, other: &InnerStats) {
        self.calls += other.calls;
        self.total_iterations += other.total_iterations;
        self.max_iterations = self.max_iterations.max(other.max_iterations);
        self.max_residual = self.max_residual.max(other.max_residual);
    }
}

/// Outcome of an outer graph-transform solve.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub outer_iterations: usize,
    /// Sup-norm size of the final outer step.
    pub final_change: f64,
    /// Median ratio of consecutive outer step sizes; 0 when fewer than two
    /// steps were taken.
    pub contraction_estimate: f64,
    /// The certified contraction rate the steps are measured against.
    pub theta_bound: f64,
    pub gap: GapAudit,
    pub inner: InnerStats,
    /// Largest node value magnitude of the solved graph.
    pub sup_graph_norm: f64,
    /// Largest per-fiber Lipschitz estimate of the solved graph.
    pub max_lipschitz: f64,
}

/// Median of consecutive step-size ratios, skipping steps below the floor;
/// the robust empirical contraction rate of an iteration.
pub fn median_step_ratio(steps: &[f64], floor: f64) -> f64 {
    let mut ratios: Vec<f64> = steps
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor && w[1].is_finite())
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.is_empty() {
        return 0.0;
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let n = ratios.len();
    if n % 2 == 1 {
        ratios[n / 2]
    } else {
        0.5 * (ratios[n / 2 - 1] + ratios[n / 2])
    }
}
