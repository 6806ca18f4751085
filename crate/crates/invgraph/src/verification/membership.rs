//! Orbit-growth membership and on-graph orbit tracking.

use crate::bundle::{sup_dist, sup_norm, BundleMap, DiscreteBase, GridGraph, SectionPair};

use super::GrowthSpec;

pub(crate) enum GrowthOutcome {
    /// Orbit stayed in the safety box; carries the worst envelope ratio.
    Within(f64),
    /// Orbit left the tenfold fiber box; carries the worst ratio seen.
    Escaped(f64),
}

pub(crate) fn growth_envelope(
    map: &BundleMap,
    m: usize,
    x0: &[f64],
    y0: &[f64],
    spec: &GrowthSpec,
    i: &SectionPair,
) -> GrowthOutcome {
    let base = map.base();
    let fibers = map.fibers();
    let box_x = 10.0 * fibers.radius_x;
    let box_y = 10.0 * fibers.radius_y;
    let mut mk = m;
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut envelope = 1.0;
    let mut worst = 0.0f64;
    for k in 0..=spec.horizon() {
        let dist = sup_dist(&x, i.i_x(mk)).max(sup_dist(&y, i.i_y(mk)));
        if !dist.is_finite() {
            return GrowthOutcome::Escaped(f64::INFINITY);
        }
        worst = worst.max(dist / envelope);
        if (fibers.dim_x > 0 && sup_norm(&x) > box_x) || (fibers.dim_y > 0 && sup_norm(&y) > box_y)
        {
            return GrowthOutcome::Escaped(worst);
        }
        if k < spec.horizon() {
            let (x2, y2) = map.eval(mk, &x, &y);
            envelope *= spec.epsilon_hat()[mk];
            mk = base.u(mk);
            x = x2;
            y = y2;
        }
    }
    GrowthOutcome::Within(worst)
}

/// Signed membership margin: positive iff the orbit stays within the
/// envelope. An escape is forced negative even when the ratio was still
/// small, since leaving the tenfold fiber box settles non-membership.
pub(crate) fn growth_margin(
    map: &BundleMap,
    m: usize,
    x0: &[f64],
    y0: &[f64],
    spec: &GrowthSpec,
    i: &SectionPair,
) -> f64 {
    let margin = match growth_envelope(map, m, x0, y0, spec, i) {
        GrowthOutcome::Within(worst) => spec.c() - worst,
        GrowthOutcome::Escaped(worst) => (spec.c() - worst).min(-1e-3 * spec.c()),
    };
    margin.clamp(-1e308, 1e308)
}

/// Does the forward orbit of `(x0, y0)` over `m` stay within
/// `c * prod epsilon_hat` of the section for the whole horizon?
pub fn orbit_growth_membership(
    map: &BundleMap,
    m: usize,
    x0: &[f64],
    y0: &[f64],
    spec: &GrowthSpec,
    i: &SectionPair,
) -> bool {
    growth_margin(map, m, x0, y0, spec, i) >= 0.0
}

/// A forward orbit ridden along a solved graph pair.
#[derive(Clone, Debug)]
pub struct TrackedOrbit {
    /// Base indices `m_k`.
    pub indices: Vec<usize>,
    /// Horizontal points `x_k`, advanced by the solved horizontal map.
    pub xs: Vec<Vec<f64>>,
    /// Graph values `y_k = f_{m_k}(x_k)`.
    pub ys: Vec<Vec<f64>>,
    /// Horizontal distances `|x_k - i_X(m_k)|` to the reference section.
    pub section_gaps: Vec<f64>,
    /// Consecutive gap ratios, skipping steps below resolution.
    pub ratios: Vec<f64>,
}

/// Ride the solved pair `(f, x_map)` forward from `x0` over `m` for `steps`
/// steps, recording the graph orbit and its horizontal decay.
pub fn track_orbit_on_graph(
    base: &DiscreteBase,
    f: &GridGraph,
    x_map: &GridGraph,
    i: &SectionPair,
    m: usize,
    x0: &[f64],
    steps: usize,
) -> TrackedOrbit {
    let mut indices = Vec::with_capacity(steps + 1);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut section_gaps = Vec::with_capacity(steps + 1);
    let mut mk = m;
    let mut x = x0.to_vec();
    for k in 0..=steps {
        indices.push(mk);
        ys.push(f.eval(mk, &x));
        section_gaps.push(sup_dist(&x, i.i_x(mk)));
        xs.push(x.clone());
        if k < steps {
            x = x_map.eval(mk, &x);
            mk = base.u(mk);
        }
    }
    let ratios = section_gaps
        .windows(2)
        .filter(|w| w[0] > 1e-14 && w[1].is_finite())
        .map(|w| w[1] / w[0])
        .collect();
    TrackedOrbit {
        indices,
        xs,
        ys,
        section_gaps,
        ratios,
    }
}
