//! Sampled agreement between a solved graph and the orbit-growth oracle.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{BundleMap, GridGraph, SectionPair};

use super::membership::growth_margin;
use super::GrowthSpec;

/// One sample whose orbit verdict contradicted the graph.
#[derive(Clone, Debug, Serialize)]
pub struct Disagreement {
    /// Base index of the sample.
    pub index: usize,
    /// Horizontal sample point.
    pub x: Vec<f64>,
    /// Vertical offset applied to the graph value (zero for on-graph samples).
    pub offset: f64,
    /// Whether the sample was expected to be a member.
    pub expected_member: bool,
    /// Signed membership margin the oracle actually returned.
    pub margin: f64,
}

/// Aggregate result of [`verify_graph_by_orbits`].
#[derive(Clone, Debug, Serialize)]
pub struct OrbitVerification {
    pub samples: usize,
    pub disagreements: usize,
    pub agreement_rate: f64,
    /// The most severe disagreement, if any.
    pub worst: Option<Disagreement>,
}

struct Sample {
    m: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    offset: f64,
    expected: bool,
}

/// Check a solved graph against the forward-orbit characterization: sampled
/// on-graph points must be members, and points displaced vertically beyond
/// the numerical resolution (ten grid spacings plus tolerances, up to half
/// the fiber radius) must not be.
pub fn verify_graph_by_orbits(
    map: &BundleMap,
    f: &GridGraph,
    spec: &GrowthSpec,
    i: &SectionPair,
    sample_count: usize,
    seed: u64,
    tol: f64,
) -> OrbitVerification {
    let n = i.base_count();
    let dim_x = f.grid().dim();
    let dim_y = map.fibers().dim_y;
    let r = f.grid().radius();
    let lo = 10.0 * (f.grid().spacing() + tol);
    let hi = map.fibers().radius_y / 2.0;
    let off_possible = dim_y > 0 && lo < hi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Sample> = (0..sample_count)
        .map(|s| {
            let m = rng.random_range(0..n);
            let x: Vec<f64> = (0..dim_x).map(|_| rng.random_range(-r..r)).collect();
            let mut y = f.eval(m, &x);
            let expected = !(off_possible && s % 2 == 1);
            let mut offset = 0.0;
            if !expected {
                let j = rng.random_range(0..dim_y);
                let magnitude = rng.random_range(lo..hi);
                let sign = if rng.random_range(0..2) == 0 {
                    1.0
                } else {
                    -1.0
                };
                offset = sign * magnitude;
                y[j] += offset;
            }
            Sample {
                m,
                x,
                y,
                offset,
                expected,
            }
        })
        .collect();

    let margins: Vec<f64> = samples
        .par_iter()
        .map(|s| growth_margin(map, s.m, &s.x, &s.y, spec, i))
        .collect();

    let mut disagreements = 0;
    let mut worst: Option<Disagreement> = None;
    let mut worst_score = f64::NEG_INFINITY;
    for (s, &margin) in samples.iter().zip(&margins) {
        let member = margin >= 0.0;
        if member == s.expected {
            continue;
        }
        disagreements += 1;
        let score = if s.expected { -margin } else { margin };
        if score > worst_score {
            worst_score = score;
            worst = Some(Disagreement {
                index: s.m,
                x: s.x.clone(),
                offset: s.offset,
                expected_member: s.expected,
                margin,
            });
        }
    }
    let agreement_rate = if sample_count == 0 {
        1.0
    } else {
        (sample_count - disagreements) as f64 / sample_count as f64
    };
    OrbitVerification {
        samples: sample_count,
        disagreements,
        agreement_rate,
        worst,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::bundle::{
        bundle_map_from_diagonal_split, AbParams, DiscreteBase, FiberFn, FiberSpec, GeneratingPair,
        Grid, Interp, SplitNonlinearity,
    };
    use crate::transform::{solve_invariant_graph, GraphSolution, SolverOptions};

    fn saddle_params() -> AbParams {
        AbParams::uniform(1, 0.0, 0.0, 4.0 / 3.0, 4.0 / 3.0, 0.5, 0.5).unwrap()
    }

    fn saddle_map() -> BundleMap {
        let base = Arc::new(DiscreteBase::single_point());
        let p: SplitNonlinearity = Arc::new(|_, x, _| (vec![0.0], vec![x[0] * x[0]]));
        bundle_map_from_diagonal_split(
            base,
            FiberSpec::new(1, 1, 1.0, 2.0).unwrap(),
            vec![0.5],
            vec![2.0],
            p,
        )
        .unwrap()
    }

    fn solved_saddle() -> GraphSolution {
        let base = Arc::new(DiscreteBase::single_point());
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, x, y| vec![0.5 * y[0] - 0.5 * x[0] * x[0]]);
        let pair = GeneratingPair::new(base, FiberSpec::new(1, 1, 1.0, 2.0).unwrap(), f, g);
        let grid = Grid::new(1, 201, 1.0).unwrap();
        solve_invariant_graph(
            &pair,
            &SectionPair::zero(1, 1, 1),
            &saddle_params(),
            &grid,
            Interp::CubicAxis,
            &SolverOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn the_solved_saddle_graph_agrees_with_its_orbit_oracle() {
        let sol = solved_saddle();
        let map = saddle_map();
        let spec = GrowthSpec::new(vec![1.0], 4.0, 30, 0.1, &saddle_params(), map.base()).unwrap();
        let zero = SectionPair::zero(1, 1, 1);
        let report = verify_graph_by_orbits(&map, &sol.graph, &spec, &zero, 400, 7, 1e-10);
        assert_eq!(report.samples, 400);
        assert_eq!(report.disagreements, 0);
        assert!((report.agreement_rate - 1.0).abs() < 1e-15);
        assert!(report.worst.is_none());
    }

    #[test]
    fn the_linear_diagonal_graph_agrees_with_its_orbit_oracle() {
        let base = Arc::new(DiscreteBase::single_point());
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, _, y| vec![0.5 * y[0]]);
        let pair = GeneratingPair::new(base, FiberSpec::new(1, 1, 1.0, 1.0).unwrap(), f, g);
        let grid = Grid::new(1, 201, 1.0).unwrap();
        let params = AbParams::uniform(1, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5).unwrap();
        let zero = SectionPair::zero(1, 1, 1);
        let sol = solve_invariant_graph(
            &pair,
            &zero,
            &params,
            &grid,
            Interp::Multilinear,
            &SolverOptions::default(),
        )
        .unwrap();
        let p: SplitNonlinearity = Arc::new(|_, _, _| (vec![0.0], vec![0.0]));
        let map = bundle_map_from_diagonal_split(
            pair.base().clone(),
            FiberSpec::new(1, 1, 1.0, 1.0).unwrap(),
            vec![0.5],
            vec![2.0],
            p,
        )
        .unwrap();
        let c = GrowthSpec::default_constant(&params, map.base()).unwrap();
        let spec = GrowthSpec::new(vec![1.0], c, 30, 0.1, &params, map.base()).unwrap();
        let report = verify_graph_by_orbits(&map, &sol.graph, &spec, &zero, 200, 11, 1e-10);
        assert_eq!(report.disagreements, 0);
        assert!((report.agreement_rate - 1.0).abs() < 1e-15);
    }

    #[test]
    fn a_corrupted_graph_is_flagged_where_the_bump_sits() {
        let sol = solved_saddle();
        let mut graph = sol.graph.clone();
        let grid = graph.grid().clone();
        let bumped: Vec<f64> = (0..grid.node_count())
            .map(|node| {
                let v = graph.node_value(0, node)[0];
                if (grid.node(node)[0] - 0.5).abs() <= 0.1 {
                    v + 0.05
                } else {
                    v
                }
            })
            .collect();
        graph.set_fiber(0, &bumped);
        let map = saddle_map();
        let spec = GrowthSpec::new(vec![1.0], 4.0, 30, 0.1, &saddle_params(), map.base()).unwrap();
        let zero = SectionPair::zero(1, 1, 1);
        let report = verify_graph_by_orbits(&map, &graph, &spec, &zero, 600, 13, 1e-10);
        assert!(report.agreement_rate < 1.0);
        assert!(report.agreement_rate > 0.7);
        let worst = report.worst.expect("the bump must surface");
        assert!(worst.expected_member);
        assert_eq!(worst.offset, 0.0);
        // The cubic stencil widens the footprint by at most two spacings.
        assert!(
            worst.x[0] > 0.35 && worst.x[0] < 0.65,
            "disagreement at {} is outside the bump",
            worst.x[0]
        );
    }
}
