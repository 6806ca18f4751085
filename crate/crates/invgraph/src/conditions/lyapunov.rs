//! Per-orbit averaged rate estimation.

use crate::bundle::DiscreteBase;

/// Supremum of the `k`-step averaged rate of `theta` along the forward orbit
/// of `m`, minimized over window lengths `1..=depth`.
///
/// For each `k` the quantity is
/// `sup over the first horizon+1 orbit points i of (theta(i) theta(u i) ... theta(u^{k-1} i))^{1/k}`;
/// longer windows smooth out alternation in the rates, so the minimum over
/// `k` is the sharpest uniform bound on the asymptotic growth the orbit
/// exhibits.
pub fn sup_lyapunov_number(
    base: &DiscreteBase,
    theta: &[f64],
    m: usize,
    horizon: usize,
    depth: usize,
) -> f64 {
    assert_eq!(theta.len(), base.count(), "one rate per base point");
    let depth = depth.max(1);
    let mut best = f64::INFINITY;
    for k in 1..=depth {
        let mut sup = 0.0f64;
        for start in 0..=horizon {
            let mut i = base.u_pow(m, start);
            let mut product = 1.0f64;
            for _ in 0..k {
                product *= theta[i];
                i = base.u(i);
            }
            sup = sup.max(product);
        }
        best = best.min(sup.powf(1.0 / k as f64));
    }
    best
}
