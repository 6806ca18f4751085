//! Fiber geometry and discretized graphs: sup-norm balls, tensor-product
//! grids, and interpolated fiber-valued functions over a discrete base.

use super::error::BundleError;
use super::vect::{sup_dist, sup_norm};

/// Dimensions and radii of the two fiber families.
///
/// Every `X` fiber is the closed sup-norm ball of radius `radius_x` in
/// `R^{dim_x}` and every `Y` fiber the ball of radius `radius_y` in
/// `R^{dim_y}`. Either dimension may be zero (a fiber that is a single
/// point).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberSpec {
    pub dim_x: usize,
    pub dim_y: usize,
    pub radius_x: f64,
    pub radius_y: f64,
}

impl FiberSpec {
    pub fn new(
        dim_x: usize,
        dim_y: usize,
        radius_x: f64,
        radius_y: f64,
    ) -> Result<Self, BundleError> {
        if dim_x > 0 && !(radius_x > 0.0 && radius_x.is_finite()) {
            return Err(BundleError::Invalid(
                "radius_x must be positive and finite".into(),
            ));
        }
        if dim_y > 0 && !(radius_y > 0.0 && radius_y.is_finite()) {
            return Err(BundleError::Invalid(
                "radius_y must be positive and finite".into(),
            ));
        }
        Ok(FiberSpec {
            dim_x,
            dim_y,
            radius_x,
            radius_y,
        })
    }

    /// The dual spec swaps the roles of the two fiber families.
    pub fn dual(&self) -> Self {
        FiberSpec {
            dim_x: self.dim_y,
            dim_y: self.dim_x,
            radius_x: self.radius_y,
            radius_y: self.radius_x,
        }
    }
}

/// Interpolation scheme used between grid nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    /// Tensor-product linear interpolation; always available.
    Multilinear,
    /// Tensor-product 4-point Lagrange interpolation per axis, exact on
    /// polynomials of per-axis degree up to three; falls back to multilinear
    /// when an axis has fewer than four nodes.
    CubicAxis,
}

/// Uniform tensor-product grid on the sup-norm ball `[-R, R]^dim`.
///
/// Node indices are row-major with axis 0 most significant. A zero-dimensional
/// grid has exactly one node with empty coordinates.
#[derive(Clone, Debug)]
pub struct Grid {
    dim: usize,
    nodes_per_axis: usize,
    radius: f64,
    axis: Vec<f64>,
}

impl Grid {
    pub fn new(dim: usize, nodes_per_axis: usize, radius: f64) -> Result<Self, BundleError> {
        if dim == 0 {
            return Ok(Grid {
                dim: 0,
                nodes_per_axis: 1,
                radius: 0.0,
                axis: vec![],
            });
        }
        if nodes_per_axis < 2 {
            return Err(BundleError::Invalid(
                "grid needs at least two nodes per axis".into(),
            ));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(BundleError::Invalid(
                "grid radius must be positive and finite".into(),
            ));
        }
        let h = 2.0 * radius / (nodes_per_axis - 1) as f64;
        let axis = (0..nodes_per_axis)
            .map(|i| -radius + i as f64 * h)
            .collect();
        Ok(Grid {
            dim,
            nodes_per_axis,
            radius,
            axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    /// Distance between adjacent nodes along one axis (0 for a point grid).
    pub fn spacing(&self) -> f64 {
        if self.dim == 0 || self.nodes_per_axis < 2 {
            0.0
        } else {
            2.0 * self.radius / (self.nodes_per_axis - 1) as f64
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    /// Coordinates of a node by row-major index.
    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut rem = idx;
        let mut out = vec![0.0; self.dim];
        for axis in (0..self.dim).rev() {
            out[axis] = self.axis[rem % self.nodes_per_axis];
            rem /= self.nodes_per_axis;
        }
        out
    }

    /// Per-axis clamp of a point into the ball; identity on interior points
    /// and 1-Lipschitz in the sup norm.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|&v| v.clamp(-self.radius, self.radius))
            .collect()
    }

    /// Interpolation stencil along one axis: start node and weights.
    fn axis_stencil(&self, x: f64, interp: Interp) -> (usize, Vec<f64>) {
        let h = self.spacing();
        let cell = (((x + self.radius) / h).floor() as isize)
            .clamp(0, self.nodes_per_axis as isize - 2) as usize;
        match interp {
            Interp::CubicAxis if self.nodes_per_axis >= 4 => {
                let start = cell.saturating_sub(1).min(self.nodes_per_axis - 4);
                let xi = (x - self.axis[start]) / h;
                let w0 = -(xi - 1.0) * (xi - 2.0) * (xi - 3.0) / 6.0;
                let w1 = xi * (xi - 2.0) * (xi - 3.0) / 2.0;
                let w2 = -xi * (xi - 1.0) * (xi - 3.0) / 2.0;
                let w3 = xi * (xi - 1.0) * (xi - 2.0) / 6.0;
                (start, vec![w0, w1, w2, w3])
            }
            _ => {
                let xi = (x - self.axis[cell]) / h;
                (cell, vec![1.0 - xi, xi])
            }
        }
    }
}

/// A fiber-valued function over a discrete base, stored by its values at the
/// grid nodes and evaluated by interpolation.
///
/// Values are stored flat as `(m * node_count + node) * dim_out + k`.
#[derive(Clone, Debug)]
pub struct GridGraph {
    grid: Grid,
    base_count: usize,
    dim_out: usize,
    interp: Interp,
    values: Vec<f64>,
}

impl GridGraph {
    /// The graph with the same value at every node.
    pub fn constant(grid: Grid, base_count: usize, interp: Interp, value: &[f64]) -> Self {
        let dim_out = value.len();
        let node_count = grid.node_count();
        let mut values = Vec::with_capacity(base_count * node_count * dim_out);
        for _ in 0..base_count * node_count {
            values.extend_from_slice(value);
        }
        GridGraph {
            grid,
            base_count,
            dim_out,
            interp,
            values,
        }
    }

    /// Build a graph by sampling a function at every node of every fiber.
    pub fn from_fn(
        grid: Grid,
        base_count: usize,
        dim_out: usize,
        interp: Interp,
        f: impl Fn(usize, &[f64]) -> Vec<f64>,
    ) -> Self {
        let node_count = grid.node_count();
        let mut values = Vec::with_capacity(base_count * node_count * dim_out);
        for m in 0..base_count {
            for node in 0..node_count {
                let v = f(m, &grid.node(node));
                debug_assert_eq!(v.len(), dim_out);
                values.extend_from_slice(&v);
            }
        }
        GridGraph {
            grid,
            base_count,
            dim_out,
            interp,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn base_count(&self) -> usize {
        self.base_count
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    /// Flat node values, for serialization.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_value(&self, m: usize, node: usize) -> &[f64] {
        let start = (m * self.grid.node_count() + node) * self.dim_out;
        &self.values[start..start + self.dim_out]
    }

    pub fn set_node_value(&mut self, m: usize, node: usize, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim_out);
        let start = (m * self.grid.node_count() + node) * self.dim_out;
        self.values[start..start + self.dim_out].copy_from_slice(v);
    }

    /// Replace all values of one fiber at once (node-major layout).
    pub fn set_fiber(&mut self, m: usize, vals: &[f64]) {
        let len = self.grid.node_count() * self.dim_out;
        debug_assert_eq!(vals.len(), len);
        self.values[m * len..(m + 1) * len].copy_from_slice(vals);
    }

    /// Evaluate the fiber function at an arbitrary point; the query is first
    /// clamped into the grid ball axis by axis.
    pub fn eval(&self, m: usize, x: &[f64]) -> Vec<f64> {
        let d = self.grid.dim();
        if d == 0 {
            return self.node_value(m, 0).to_vec();
        }
        debug_assert_eq!(x.len(), d);
        let stencils: Vec<(usize, Vec<f64>)> = x
            .iter()
            .map(|&v| {
                self.grid
                    .axis_stencil(v.clamp(-self.grid.radius, self.grid.radius), self.interp)
            })
            .collect();
        let mut out = vec![0.0; self.dim_out];
        let mut counter = vec![0usize; d];
        loop {
            let mut w = 1.0;
            let mut node = 0usize;
            for axis in 0..d {
                let (start, ref weights) = stencils[axis];
                w *= weights[counter[axis]];
                node = node * self.grid.nodes_per_axis + start + counter[axis];
            }
            if w != 0.0 {
                let v = self.node_value(m, node);
                for k in 0..self.dim_out {
                    out[k] += w * v[k];
                }
            }
            // Mixed-radix increment over the stencil lattice.
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                counter[axis] += 1;
                if counter[axis] < stencils[axis].1.len() {
                    break;
                }
                counter[axis] = 0;
            }
        }
    }

    /// Sup distance to another graph over all fibers and nodes.
    pub fn sup_distance(&self, other: &GridGraph) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// Weighted sup distance `sup_m sup_node |f - g| / eta(m)`, skipping
    /// fibers with zero weight.
    pub fn weighted_sup_distance(&self, other: &GridGraph, eta: &[f64]) -> f64 {
        debug_assert_eq!(eta.len(), self.base_count);
        let mut worst = 0.0f64;
        for (m, &weight) in eta.iter().enumerate() {
            if weight <= 0.0 {
                continue;
            }
            let mut local = 0.0f64;
            for node in 0..self.grid.node_count() {
                local = local.max(sup_dist(
                    self.node_value(m, node),
                    other.node_value(m, node),
                ));
            }
            worst = worst.max(local / weight);
        }
        worst
    }

    /// Largest node value magnitude over all fibers.
    pub fn sup_norm_values(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Largest node value magnitude within one fiber.
    pub fn fiber_sup_norm(&self, m: usize) -> f64 {
        let len = self.grid.node_count() * self.dim_out;
        sup_norm(&self.values[m * len..(m + 1) * len])
    }

    /// Finite-difference Lipschitz estimate of one fiber function: largest
    /// value change between axis-adjacent nodes divided by the spacing.
    pub fn lipschitz_estimate(&self, m: usize) -> f64 {
        let d = self.grid.dim();
        if d == 0 {
            return 0.0;
        }
        let n = self.grid.nodes_per_axis;
        let h = self.grid.spacing();
        let mut worst = 0.0f64;
        let mut stride = 1usize;
        for _ in 0..d {
            for node in 0..self.grid.node_count() {
                if node / stride % n + 1 < n {
                    let a = self.node_value(m, node);
                    let b = self.node_value(m, node + stride);
                    worst = worst.max(sup_dist(a, b) / h);
                }
            }
            stride *= n;
        }
        worst
    }

    /// Largest per-fiber Lipschitz estimate over the base.
    pub fn max_lipschitz(&self) -> f64 {
        (0..self.base_count)
            .map(|m| self.lipschitz_estimate(m))
            .fold(0.0f64, f64::max)
    }

    /// Axis-aligned second-difference bound of one fiber function: largest
    /// `|v(x-h) - 2 v(x) + v(x+h)| / h^2` over interior nodes, a discrete
    /// curvature estimate.
    pub fn second_difference_bound(&self, m: usize) -> f64 {
        let d = self.grid.dim();
        if d == 0 || self.grid.nodes_per_axis < 3 {
            return 0.0;
        }
        let n = self.grid.nodes_per_axis;
        let h2 = self.grid.spacing() * self.grid.spacing();
        let mut worst = 0.0f64;
        let mut stride = 1usize;
        for _ in 0..d {
            for node in 0..self.grid.node_count() {
                let pos = node / stride % n;
                if pos >= 1 && pos + 1 < n {
                    let a = self.node_value(m, node - stride);
                    let b = self.node_value(m, node);
                    let c = self.node_value(m, node + stride);
                    for k in 0..self.dim_out {
                        worst = worst.max((a[k] - 2.0 * b[k] + c[k]).abs() / h2);
                    }
                }
            }
            stride *= n;
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_1d(n: usize, interp: Interp, f: impl Fn(f64) -> f64) -> GridGraph {
        let grid = Grid::new(1, n, 1.0).unwrap();
        GridGraph::from_fn(grid, 1, 1, interp, |_, x| vec![f(x[0])])
    }

    #[test]
    fn zero_dimensional_grid_is_a_single_point() {
        let grid = Grid::new(0, 7, 3.0).unwrap();
        assert_eq!(grid.node_count(), 1);
        assert_eq!(grid.node(0), Vec::<f64>::new());
        let g = GridGraph::constant(grid, 2, Interp::Multilinear, &[1.5, -0.5]);
        assert_eq!(g.eval(1, &[]), vec![1.5, -0.5]);
    }

    #[test]
    fn multilinear_reproduces_linear_functions_exactly() {
        let g = graph_1d(5, Interp::Multilinear, |x| 2.0 * x - 0.3);
        for &x in &[-1.0, -0.77, -0.25, 0.0, 0.1, 0.63, 1.0] {
            assert!((g.eval(0, &[x])[0] - (2.0 * x - 0.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_axis_reproduces_cubics_exactly() {
        let f = |x: f64| x * x * x - 2.0 * x * x + 0.5 * x + 1.0;
        let g = graph_1d(9, Interp::CubicAxis, f);
        for &x in &[-1.0, -0.93, -0.5, -0.11, 0.0, 0.27, 0.77, 1.0] {
            assert!((g.eval(0, &[x])[0] - f(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cubic_axis_reproduces_tensor_polynomials_in_two_dims() {
        let f = |x: f64, y: f64| x * x - x * y + 0.5 * y * y + 0.25 * x * x * y;
        let grid = Grid::new(2, 7, 1.0).unwrap();
        let g = GridGraph::from_fn(grid, 1, 1, Interp::CubicAxis, |_, p| vec![f(p[0], p[1])]);
        for &(x, y) in &[
            (-0.91, 0.33),
            (0.12, -0.77),
            (0.5, 0.5),
            (-1.0, 1.0),
            (0.0, 0.0),
        ] {
            assert!(
                (g.eval(0, &[x, y])[0] - f(x, y)).abs() < 1e-12,
                "({x}, {y})"
            );
        }
    }

    #[test]
    fn cubic_falls_back_to_multilinear_on_small_grids() {
        let g = graph_1d(3, Interp::CubicAxis, |x| x.abs());
        // Three nodes at -1, 0, 1: interpolation must be piecewise linear.
        assert!((g.eval(0, &[0.5])[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn evaluation_at_nodes_returns_node_values() {
        let f = |x: f64| (3.0 * x).sin();
        let g = graph_1d(11, Interp::CubicAxis, f);
        let grid = g.grid().clone();
        for node in 0..grid.node_count() {
            let x = grid.node(node);
            assert!((g.eval(0, &x)[0] - f(x[0])).abs() < 1e-14);
        }
    }

    #[test]
    fn queries_outside_the_ball_are_clamped() {
        let g = graph_1d(5, Interp::Multilinear, |x| x);
        assert!((g.eval(0, &[2.5])[0] - 1.0).abs() < 1e-14);
        assert!((g.eval(0, &[-7.0])[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_distance_skips_zero_weight_fibers() {
        let grid = Grid::new(1, 3, 1.0).unwrap();
        let a = GridGraph::constant(grid.clone(), 2, Interp::Multilinear, &[0.0]);
        let mut b = GridGraph::constant(grid, 2, Interp::Multilinear, &[0.0]);
        b.set_node_value(0, 1, &[5.0]);
        b.set_node_value(1, 1, &[0.5]);
        let d = a.weighted_sup_distance(&b, &[0.0, 0.25]);
        // Fiber 0 carries weight 0 and is excluded; fiber 1 gives 0.5/0.25.
        assert!((d - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_estimate_recovers_linear_slope() {
        let grid = Grid::new(2, 5, 1.0).unwrap();
        let g = GridGraph::from_fn(grid, 1, 1, Interp::Multilinear, |_, p| {
            vec![3.0 * p[0] - 1.0 * p[1]]
        });
        assert!((g.lipschitz_estimate(0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn second_differences_recover_quadratic_curvature() {
        let g = graph_1d(21, Interp::Multilinear, |x| 0.7 * x * x);
        assert!((g.second_difference_bound(0) - 1.4).abs() < 1e-10);
        let lin = graph_1d(21, Interp::Multilinear, |x| 3.0 * x - 1.0);
        assert!(lin.second_difference_bound(0) < 1e-10);
        let point = GridGraph::constant(
            Grid::new(0, 3, 1.0).unwrap(),
            2,
            Interp::Multilinear,
            &[1.0],
        );
        assert_eq!(point.second_difference_bound(1), 0.0);
    }

    #[test]
    fn sup_distance_finds_the_largest_node_gap() {
        let grid = Grid::new(1, 3, 1.0).unwrap();
        let a = GridGraph::constant(grid.clone(), 2, Interp::Multilinear, &[1.0]);
        let mut b = a.clone();
        b.set_node_value(1, 2, &[1.75]);
        assert!((a.sup_distance(&b) - 0.75).abs() < 1e-14);
    }
}
