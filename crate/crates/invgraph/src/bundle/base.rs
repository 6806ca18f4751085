//! Finite discrete bases: an index set with a metric, an exact base map, and
//! an optional exact inverse.
//!
//! Base families are restricted to maps that send sample points to sample
//! points with integer arithmetic (toral integer matrices, doubling, rational
//! rotations, finite periodic orbits), so no base-discretization error exists
//! anywhere: Hölder measurements in the base direction are exact-distance
//! measurements.

use super::error::BundleError;

type LatticeStep = Box<dyn Fn(&[i64]) -> Vec<i64>>;

/// The base map of a torus grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TorusMap {
    /// `j -> A j mod N` for an integer matrix `A` (row-major, dim x dim).
    IntegerMatrix(Vec<Vec<i64>>),
    /// `j -> 2 j mod N` on a 1-dimensional grid; invertible iff `N` is odd.
    Doubling,
    /// Rotation by `num/den` of a full turn; requires `den | N` so the shift
    /// is a whole number of grid steps. Always invertible.
    RationalRotation { num: i64, den: i64 },
}

/// What kind of base an instance models.
#[derive(Clone, Debug)]
pub enum BaseKind {
    /// A single fixed point of the base dynamics.
    SinglePoint,
    /// A periodic orbit `0 -> 1 -> ... -> L-1 -> 0` with the circle metric on
    /// `{0, 1/L, ..., (L-1)/L}`.
    PeriodicOrbit { length: usize },
    /// The uniform `N^dim` grid on the torus `[0,1)^dim` with the sup circle
    /// metric and an exactly grid-preserving map.
    TorusGrid {
        dim: usize,
        resolution: usize,
        map: TorusMap,
    },
    /// A base obtained from another one (composition powers and similar); the
    /// label records the provenance for reports.
    Derived { label: String },
}

/// Finite indexed base set with metric, base map `u`, and optional inverse.
#[derive(Clone, Debug)]
pub struct DiscreteBase {
    kind: BaseKind,
    /// Torus coordinates of each index in `[0,1)^dim`; empty for a point.
    coords: Vec<Vec<f64>>,
    forward: Vec<usize>,
    backward: Option<Vec<usize>>,
    /// Derivative of the base map in torus coordinates; constant over the
    /// base for every family shipped here. `None` when the base has no
    /// coordinates to differentiate along.
    du: Option<Vec<Vec<f64>>>,
    diameter: f64,
}

impl DiscreteBase {
    /// The trivial base: one point, identity map.
    pub fn single_point() -> Self {
        DiscreteBase {
            kind: BaseKind::SinglePoint,
            coords: vec![vec![]],
            forward: vec![0],
            backward: Some(vec![0]),
            du: None,
            diameter: 0.0,
        }
    }

    /// A periodic orbit of the given length with the circle metric.
    pub fn periodic_orbit(length: usize) -> Result<Self, BundleError> {
        if length == 0 {
            return Err(BundleError::Invalid(
                "periodic orbit length must be positive".into(),
            ));
        }
        let coords = (0..length)
            .map(|i| vec![i as f64 / length as f64])
            .collect();
        let forward = (0..length).map(|i| (i + 1) % length).collect();
        let backward = (0..length).map(|i| (i + length - 1) % length).collect();
        Ok(DiscreteBase {
            kind: BaseKind::PeriodicOrbit { length },
            coords,
            forward,
            backward: Some(backward),
            du: Some(vec![vec![1.0]]),
            diameter: (length / 2) as f64 / length as f64,
        })
    }

    /// The uniform `N^dim` torus grid with an exactly grid-preserving map.
    ///
    /// The inverse is constructed whenever the map is invertible on the grid
    /// (integer matrix with determinant coprime to `N`, doubling with odd
    /// `N`, any rational rotation).
    pub fn torus_grid(dim: usize, resolution: usize, map: TorusMap) -> Result<Self, BundleError> {
        if dim == 0 || resolution == 0 {
            return Err(BundleError::Invalid(
                "torus grid needs dim >= 1 and N >= 1".into(),
            ));
        }
        let n = resolution;
        let count = n
            .checked_pow(dim as u32)
            .ok_or_else(|| BundleError::Invalid("torus grid size overflows".into()))?;
        let ni = n as i64;

        let lattice_of = |idx: usize| -> Vec<i64> {
            let mut rem = idx;
            let mut out = vec![0i64; dim];
            for axis in (0..dim).rev() {
                out[axis] = (rem % n) as i64;
                rem /= n;
            }
            out
        };
        let index_of = |lat: &[i64]| -> usize {
            let mut idx = 0usize;
            for &j in lat {
                idx = idx * n + j.rem_euclid(ni) as usize;
            }
            idx
        };

        let step: LatticeStep = match &map {
            TorusMap::IntegerMatrix(a) => {
                if a.len() != dim || a.iter().any(|row| row.len() != dim) {
                    return Err(BundleError::Invalid(format!(
                        "integer matrix must be {dim}x{dim}"
                    )));
                }
                let a = a.clone();
                Box::new(move |lat: &[i64]| {
                    (0..dim)
                        .map(|r| {
                            let s: i64 = (0..dim).map(|c| a[r][c] * lat[c]).sum();
                            s.rem_euclid(ni)
                        })
                        .collect()
                })
            }
            TorusMap::Doubling => {
                if dim != 1 {
                    return Err(BundleError::Invalid("doubling map needs dim = 1".into()));
                }
                Box::new(move |lat: &[i64]| vec![(2 * lat[0]).rem_euclid(ni)])
            }
            TorusMap::RationalRotation { num, den } => {
                if dim != 1 {
                    return Err(BundleError::Invalid(
                        "rational rotation needs dim = 1".into(),
                    ));
                }
                if *den <= 0 || ni % *den != 0 {
                    return Err(BundleError::Invalid(
                        "rotation denominator must divide the resolution".into(),
                    ));
                }
                let shift = (num * (ni / den)).rem_euclid(ni);
                Box::new(move |lat: &[i64]| vec![(lat[0] + shift).rem_euclid(ni)])
            }
        };

        let inverse_step: Option<LatticeStep> = match &map {
            TorusMap::IntegerMatrix(a) => invert_matrix_mod(a, ni).map(|inv| {
                let b: LatticeStep = Box::new(move |lat: &[i64]| {
                    (0..dim)
                        .map(|r| {
                            let s: i64 = (0..dim).map(|c| inv[r][c] * lat[c]).sum();
                            s.rem_euclid(ni)
                        })
                        .collect()
                });
                b
            }),
            TorusMap::Doubling => modular_inverse(2, ni).map(|h| {
                let b: LatticeStep = Box::new(move |lat: &[i64]| vec![(h * lat[0]).rem_euclid(ni)]);
                b
            }),
            TorusMap::RationalRotation { num, den } => {
                let shift = (num * (ni / den)).rem_euclid(ni);
                let back = (ni - shift).rem_euclid(ni);
                let b: LatticeStep =
                    Box::new(move |lat: &[i64]| vec![(lat[0] + back).rem_euclid(ni)]);
                Some(b)
            }
        };

        let du = match &map {
            TorusMap::IntegerMatrix(a) => Some(
                a.iter()
                    .map(|row| row.iter().map(|&v| v as f64).collect())
                    .collect(),
            ),
            TorusMap::Doubling => Some(vec![vec![2.0]]),
            TorusMap::RationalRotation { .. } => Some(vec![vec![1.0]]),
        };

        let mut coords = Vec::with_capacity(count);
        let mut forward = Vec::with_capacity(count);
        for idx in 0..count {
            let lat = lattice_of(idx);
            coords.push(lat.iter().map(|&j| j as f64 / n as f64).collect());
            forward.push(index_of(&step(&lat)));
        }
        let backward = inverse_step.map(|inv| {
            (0..count)
                .map(|idx| index_of(&inv(&lattice_of(idx))))
                .collect::<Vec<_>>()
        });
        if let Some(bw) = &backward {
            for idx in 0..count {
                if bw[forward[idx]] != idx || forward[bw[idx]] != idx {
                    return Err(BundleError::Invalid(
                        "constructed inverse does not invert the base map".into(),
                    ));
                }
            }
        }
        Ok(DiscreteBase {
            kind: BaseKind::TorusGrid {
                dim,
                resolution,
                map,
            },
            coords,
            forward,
            backward,
            du,
            diameter: (n / 2) as f64 / n as f64,
        })
    }

    /// The base with the same points but map `u o u`; used for composed
    /// correspondences and parameter powers.
    pub fn compose_self(&self, n: usize) -> Self {
        let count = self.count();
        let mut forward = (0..count).collect::<Vec<_>>();
        for _ in 0..n {
            forward = forward.iter().map(|&i| self.forward[i]).collect();
        }
        let backward = self.backward.as_ref().map(|bw| {
            let mut b = (0..count).collect::<Vec<_>>();
            for _ in 0..n {
                b = b.iter().map(|&i| bw[i]).collect();
            }
            b
        });
        let du = self.du.as_ref().map(|a| {
            let d = a.len();
            let mut p: Vec<Vec<f64>> = (0..d)
                .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            for _ in 0..n {
                p = matmul(a, &p);
            }
            p
        });
        DiscreteBase {
            kind: BaseKind::Derived {
                label: format!("{}-fold composition", n),
            },
            coords: self.coords.clone(),
            forward,
            backward,
            du,
            diameter: self.diameter,
        }
    }

    /// The base carrying `self` first and then `outer`: the map is
    /// `m -> outer.u(self.u(m))`. Both bases must index the same point set.
    pub fn compose_with(&self, outer: &DiscreteBase) -> Result<Self, BundleError> {
        if outer.count() != self.count() {
            return Err(BundleError::Invalid(
                "bases to compose have different sizes".into(),
            ));
        }
        let count = self.count();
        let forward: Vec<usize> = (0..count).map(|m| outer.forward[self.forward[m]]).collect();
        let backward = match (&self.backward, &outer.backward) {
            (Some(sb), Some(ob)) => Some((0..count).map(|m| sb[ob[m]]).collect()),
            _ => None,
        };
        let du = match (&self.du, &outer.du) {
            (Some(a), Some(b)) if a.len() == b.len() => Some(matmul(b, a)),
            _ => None,
        };
        Ok(DiscreteBase {
            kind: BaseKind::Derived {
                label: "composition".into(),
            },
            coords: self.coords.clone(),
            forward,
            backward,
            du,
            diameter: self.diameter,
        })
    }

    /// The same base points driven by the inverse map; requires invertibility.
    pub fn inverted(&self) -> Result<Self, BundleError> {
        let backward = self.backward.clone().ok_or(BundleError::NoInverse)?;
        Ok(DiscreteBase {
            kind: BaseKind::Derived {
                label: "inverted".into(),
            },
            coords: self.coords.clone(),
            forward: backward,
            backward: Some(self.forward.clone()),
            du: self.du.as_ref().and_then(|a| mat_inverse(a)),
            diameter: self.diameter,
        })
    }

    /// What kind of base this is.
    pub fn kind(&self) -> &BaseKind {
        &self.kind
    }

    /// Number of base points.
    pub fn count(&self) -> usize {
        self.forward.len()
    }

    /// Dimension of the torus coordinates (0 for a single point).
    pub fn coord_dim(&self) -> usize {
        self.coords[0].len()
    }

    /// The base map.
    pub fn u(&self, m: usize) -> usize {
        self.forward[m]
    }

    /// The inverse base map, when it exists.
    pub fn u_inverse(&self, m: usize) -> Option<usize> {
        self.backward.as_ref().map(|b| b[m])
    }

    /// True when the base map has an exact inverse on the grid.
    pub fn invertible(&self) -> bool {
        self.backward.is_some()
    }

    /// `u^k(m)`.
    pub fn u_pow(&self, m: usize, k: usize) -> usize {
        let mut i = m;
        for _ in 0..k {
            i = self.forward[i];
        }
        i
    }

    /// The forward orbit `[m, u(m), ..., u^n(m)]` (length `n + 1`).
    pub fn orbit(&self, m: usize, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n + 1);
        let mut i = m;
        out.push(i);
        for _ in 0..n {
            i = self.forward[i];
            out.push(i);
        }
        out
    }

    /// Torus coordinates of an index in `[0,1)^dim` (empty for a point).
    pub fn coords(&self, m: usize) -> &[f64] {
        &self.coords[m]
    }

    /// Sup circle distance between two base points.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        circle_sup_distance(&self.coords[a], &self.coords[b])
    }

    /// Largest distance realized between base points.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Lattice shape `(dim, nodes per axis)` when the base is a coordinate
    /// grid: a torus grid, or a periodic orbit seen as a one-dimensional
    /// ring. `None` for a point or a derived base.
    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        match &self.kind {
            BaseKind::TorusGrid {
                dim, resolution, ..
            } => Some((*dim, *resolution)),
            BaseKind::PeriodicOrbit { length } => Some((1, *length)),
            _ => None,
        }
    }

    /// Coordinate step between adjacent grid nodes along one axis.
    pub fn grid_spacing(&self) -> Option<f64> {
        self.grid_shape().map(|(_, n)| 1.0 / n as f64)
    }

    /// Index of the node `delta` grid steps from `m` along `axis`, wrapping
    /// around the torus.
    pub fn grid_neighbor(&self, m: usize, axis: usize, delta: i64) -> Option<usize> {
        let (dim, n) = self.grid_shape()?;
        if axis >= dim || m >= self.count() {
            return None;
        }
        let mut rem = m;
        let mut lat = vec![0i64; dim];
        for a in (0..dim).rev() {
            lat[a] = (rem % n) as i64;
            rem /= n;
        }
        lat[axis] = (lat[axis] + delta).rem_euclid(n as i64);
        let mut idx = 0usize;
        for &j in &lat {
            idx = idx * n + j as usize;
        }
        Some(idx)
    }

    /// Derivative of the base map in torus coordinates, when available.
    pub fn du_matrix(&self) -> Option<Vec<Vec<f64>>> {
        self.du.clone()
    }

    /// Inverse of the base-map derivative, when it exists.
    pub fn du_inverse(&self) -> Option<Vec<Vec<f64>>> {
        self.du.as_ref().and_then(|a| mat_inverse(a))
    }

    /// Sup-operator norm (max absolute row sum) of the base-map derivative.
    pub fn du_norm(&self) -> Option<f64> {
        self.du.as_ref().map(|a| max_row_sum(a))
    }

    /// Sup-operator norm of the inverse base-map derivative; the expansion
    /// rate that enters base-regularity gap conditions.
    pub fn du_inverse_norm(&self) -> Option<f64> {
        self.du_inverse().map(|a| max_row_sum(&a))
    }
}

/// Sup over axes of the circle distance `min(|da|, 1 - |da|)` between
/// coordinate vectors in `[0,1)^d`.
pub fn circle_sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (&x, &y)| {
        let d = (x - y).abs();
        acc.max(d.min(1.0 - d))
    })
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn max_row_sum(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum())
        .fold(0.0f64, f64::max)
}

/// Real inverse via the adjugate for dimensions 1..=3.
fn mat_inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = a.len();
    let det: f64 = match d {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => return None,
    };
    if det.abs() < 1e-300 {
        return None;
    }
    let adj: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0]],
        2 => vec![vec![a[1][1], -a[0][1]], vec![-a[1][0], a[0][0]]],
        3 => {
            let c = |r: usize, cidx: usize| -> f64 {
                let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
                let cols: Vec<usize> = (0..3).filter(|&j| j != cidx).collect();
                let minor = a[rows[0]][cols[0]] * a[rows[1]][cols[1]]
                    - a[rows[0]][cols[1]] * a[rows[1]][cols[0]];
                if (r + cidx).is_multiple_of(2) {
                    minor
                } else {
                    -minor
                }
            };
            (0..3)
                .map(|r| (0..3).map(|cidx| c(cidx, r)).collect())
                .collect()
        }
        _ => unreachable!(),
    };
    Some(
        adj.iter()
            .map(|row| row.iter().map(|&v| v / det).collect())
            .collect(),
    )
}

/// Extended gcd: returns `(g, x)` with `a*x = g (mod n)` and `g = gcd(a, n)`.
fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Inverse of `a` modulo `n`, when `gcd(a, n) = 1`.
fn modular_inverse(a: i64, n: i64) -> Option<i64> {
    let (g, x, _) = egcd(a.rem_euclid(n), n);
    if g == 1 {
        Some(x.rem_euclid(n))
    } else {
        None
    }
}

/// Inverse of an integer matrix modulo `n` via the adjugate; supports
/// dimensions 1..=3, which covers every base family shipped here.
fn invert_matrix_mod(a: &[Vec<i64>], n: i64) -> Option<Vec<Vec<i64>>> {
    let d = a.len();
    let det: i64 = match d {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => return None,
    };
    let det_inv = modular_inverse(det.rem_euclid(n), n)?;
    let adj: Vec<Vec<i64>> = match d {
        1 => vec![vec![1]],
        2 => vec![vec![a[1][1], -a[0][1]], vec![-a[1][0], a[0][0]]],
        3 => {
            let c = |r: usize, cidx: usize| -> i64 {
                let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
                let cols: Vec<usize> = (0..3).filter(|&j| j != cidx).collect();
                let minor = a[rows[0]][cols[0]] * a[rows[1]][cols[1]]
                    - a[rows[0]][cols[1]] * a[rows[1]][cols[0]];
                if (r + cidx).is_multiple_of(2) {
                    minor
                } else {
                    -minor
                }
            };
            // Adjugate = transpose of the cofactor matrix.
            (0..3)
                .map(|r| (0..3).map(|cidx| c(cidx, r)).collect())
                .collect()
        }
        _ => unreachable!(),
    };
    Some(
        adj.iter()
            .map(|row| {
                row.iter()
                    .map(|&v| (v.rem_euclid(n) * det_inv).rem_euclid(n))
                    .collect()
            })
            .collect(),
    )
}
