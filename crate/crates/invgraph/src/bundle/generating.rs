//! Generating pairs of bundle correspondences, plain bundle maps, and the
//! constructions that produce new correspondences from old: dualization and
//! composition.
//!
//! A correspondence over the base step `m -> u(m)` is described by two maps
//!
//! ```text
//! (x2, y2) related to (x1, y1)  iff  y1 = G_m(x1, y2) and x2 = F_m(x1, y2),
//! ```
//!
//! with `x1 in X_m`, `y1 in Y_m`, `x2 in X_{u(m)}`, `y2 in Y_{u(m)}`: both
//! maps read their second argument in the target `Y` fiber.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::base::DiscreteBase;
use super::error::{BundleError, SolveError};
use super::fiber::FiberSpec;
use super::fixed_point::{implicit_solve, InnerSolve};
use super::section::SectionPair;
use super::vect::sup_dist;

/// A fiber map `(m, x1, y2) -> value`.
pub type FiberFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// A plain forward point map `(m, x1, y1) -> (x2, y2)`.
pub type PointMapFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// Fiber derivatives `(m, x1, y2) -> (d/dx1, d/dy2)` of one generating map.
pub type JetFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> (DMatrix<f64>, DMatrix<f64>) + Send + Sync>;

/// Derivative of a generating map along the base coordinates,
/// `(m, x1, y2) -> d/dm`.
pub type BaseJetFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;

/// Analytic derivatives of a generating pair, when available.
#[derive(Clone)]
pub struct AnalyticDerivs {
    pub df: JetFn,
    pub dg: JetFn,
    pub dm_f: Option<BaseJetFn>,
    pub dm_g: Option<BaseJetFn>,
}

/// A bundle correspondence given by its generating maps.
#[derive(Clone)]
pub struct GeneratingPair {
    base: Arc<DiscreteBase>,
    fibers: FiberSpec,
    f: FiberFn,
    g: FiberFn,
    derivs: Option<AnalyticDerivs>,
}

impl std::fmt::Debug for GeneratingPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratingPair")
            .field("base_count", &self.base.count())
            .field("fibers", &self.fibers)
            .field("has_derivs", &self.derivs.is_some())
            .finish()
    }
}

impl GeneratingPair {
    pub fn new(base: Arc<DiscreteBase>, fibers: FiberSpec, f: FiberFn, g: FiberFn) -> Self {
        GeneratingPair {
            base,
            fibers,
            f,
            g,
            derivs: None,
        }
    }

    pub fn with_derivs(mut self, derivs: AnalyticDerivs) -> Self {
        self.derivs = Some(derivs);
        self
    }

    pub fn base(&self) -> &Arc<DiscreteBase> {
        &self.base
    }

    pub fn fibers(&self) -> &FiberSpec {
        &self.fibers
    }

    pub fn derivs(&self) -> Option<&AnalyticDerivs> {
        self.derivs.as_ref()
    }

    /// `F_m(x1, y2)`, a point of `X_{u(m)}`.
    pub fn eval_f(&self, m: usize, x1: &[f64], y2: &[f64]) -> Vec<f64> {
        (self.f)(m, x1, y2)
    }

    /// `G_m(x1, y2)`, a point of `Y_m`.
    pub fn eval_g(&self, m: usize, x1: &[f64], y2: &[f64]) -> Vec<f64> {
        (self.g)(m, x1, y2)
    }

    pub fn f_fn(&self) -> FiberFn {
        self.f.clone()
    }

    pub fn g_fn(&self) -> FiberFn {
        self.g.clone()
    }

    /// Pointwise invariance defects of a section pair: per index,
    /// `|G_m(i_X(m), i_Y(u m)) - i_Y(m)|` and `|F_m(i_X(m), i_Y(u m)) - i_X(u m)|`.
    pub fn section_defects(&self, sections: &SectionPair) -> (Vec<f64>, Vec<f64>) {
        let n = self.base.count();
        let mut eta = vec![0.0; n];
        let mut epsilon = vec![0.0; n];
        for m in 0..n {
            let up = self.base.u(m);
            let gy = self.eval_g(m, sections.i_x(m), sections.i_y(up));
            let fx = self.eval_f(m, sections.i_x(m), sections.i_y(up));
            eta[m] = sup_dist(&gy, sections.i_y(m));
            epsilon[m] = sup_dist(&fx, sections.i_x(up));
        }
        (eta, epsilon)
    }

    /// Verify the measured defects stay within the declared per-index bounds.
    pub fn check_section_defects(&self, sections: &SectionPair) -> Result<(), SolveError> {
        if sections.base_count() != self.base.count() {
            return Err(SolveError::InvalidSection(
                "section base size disagrees with the correspondence".into(),
            ));
        }
        let (eta, epsilon) = self.section_defects(sections);
        for m in 0..self.base.count() {
            let eta_bound = sections.eta(m) * (1.0 + 1e-9) + 1e-12;
            if eta[m] > eta_bound {
                return Err(SolveError::BoundednessViolated(format!(
                    "vertical section defect {} at index {m} exceeds the declared bound {}",
                    eta[m],
                    sections.eta(m)
                )));
            }
            let eps_bound = sections.epsilon(m) * (1.0 + 1e-9) + 1e-12;
            if epsilon[m] > eps_bound {
                return Err(SolveError::BoundednessViolated(format!(
                    "horizontal section defect {} at index {m} exceeds the declared bound {}",
                    epsilon[m],
                    sections.epsilon(m)
                )));
            }
        }
        Ok(())
    }

    /// Central-difference fiber derivatives, for pairs without analytic ones.
    pub fn fd_derivs(&self, step: f64) -> AnalyticDerivs {
        let f = self.f.clone();
        let g = self.g.clone();
        let df: JetFn = Arc::new(move |m, x1, y2| {
            (
                fd_jacobian(|xx| f(m, xx, y2), x1, step),
                fd_jacobian(|yy| f(m, x1, yy), y2, step),
            )
        });
        let dg: JetFn = Arc::new(move |m, x1, y2| {
            (
                fd_jacobian(|xx| g(m, xx, y2), x1, step),
                fd_jacobian(|yy| g(m, x1, yy), y2, step),
            )
        });
        AnalyticDerivs {
            df,
            dg,
            dm_f: None,
            dm_g: None,
        }
    }
}

fn fd_jacobian(h: impl Fn(&[f64]) -> Vec<f64>, at: &[f64], step: f64) -> DMatrix<f64> {
    let n = at.len();
    let out_dim = h(at).len();
    let mut jac = DMatrix::zeros(out_dim, n);
    for j in 0..n {
        let mut plus = at.to_vec();
        plus[j] += step;
        let mut minus = at.to_vec();
        minus[j] -= step;
        let vp = h(&plus);
        let vm = h(&minus);
        for i in 0..out_dim {
            jac[(i, j)] = (vp[i] - vm[i]) / (2.0 * step);
        }
    }
    jac
}

/// A plain bundle map `(m, x1, y1) -> (x2, y2)` over `m -> u(m)`.
#[derive(Clone)]
pub struct BundleMap {
    base: Arc<DiscreteBase>,
    fibers: FiberSpec,
    h: PointMapFn,
}

impl std::fmt::Debug for BundleMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BundleMap")
            .field("base_count", &self.base.count())
            .field("fibers", &self.fibers)
            .finish()
    }
}

impl BundleMap {
    pub fn new(base: Arc<DiscreteBase>, fibers: FiberSpec, h: PointMapFn) -> Self {
        BundleMap { base, fibers, h }
    }

    pub fn base(&self) -> &Arc<DiscreteBase> {
        &self.base
    }

    pub fn fibers(&self) -> &FiberSpec {
        &self.fibers
    }

    pub fn eval(&self, m: usize, x1: &[f64], y1: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.h)(m, x1, y1)
    }

    /// The forward orbit of a bundle point, base indices included.
    pub fn iterate(
        &self,
        m: usize,
        x: &[f64],
        y: &[f64],
        n: usize,
    ) -> Vec<(usize, Vec<f64>, Vec<f64>)> {
        let mut out = Vec::with_capacity(n + 1);
        let mut state = (m, x.to_vec(), y.to_vec());
        out.push(state.clone());
        for _ in 0..n {
            let (xm, ym) = (self.h)(state.0, &state.1, &state.2);
            state = (self.base.u(state.0), xm, ym);
            out.push(state.clone());
        }
        out
    }
}

/// The nonlinear part of a diagonally split bundle map,
/// `(m, x, y) -> (p_x, p_y)`.
pub type SplitNonlinearity =
    Arc<dyn Fn(usize, &[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// The bundle map `(x, y) -> (diag(a_x) x + p_x(x, y), diag(a_y) y + p_y(x, y))`.
pub fn bundle_map_from_diagonal_split(
    base: Arc<DiscreteBase>,
    fibers: FiberSpec,
    a_x: Vec<f64>,
    a_y: Vec<f64>,
    p: SplitNonlinearity,
) -> Result<BundleMap, BundleError> {
    if a_x.len() != fibers.dim_x || a_y.len() != fibers.dim_y {
        return Err(BundleError::Invalid(
            "diagonal lengths disagree with the fiber dimensions".into(),
        ));
    }
    let h = Arc::new(move |m: usize, x: &[f64], y: &[f64]| {
        let (px, py) = p(m, x, y);
        let x2 = (0..a_x.len()).map(|i| a_x[i] * x[i] + px[i]).collect();
        let y2 = (0..a_y.len()).map(|i| a_y[i] * y[i] + py[i]).collect();
        (x2, y2)
    });
    Ok(BundleMap::new(base, fibers, h))
}

/// Generating pair of the diagonally split bundle map
/// `(x, y) -> (diag(a_x) x + p_x(x, y), diag(a_y) y + p_y(x, y))`.
///
/// `G` is obtained by the inner iteration
/// `y1 <- diag(a_y)^{-1} (y2 - p_y(x1, y1))`, a contraction whenever
/// `max |1/a_y| * lip_y(p_y) < 1`; the closure panics if that iteration
/// diverges, so callers must check the split bound before building the pair.
pub fn generating_pair_from_diagonal_split(
    base: Arc<DiscreteBase>,
    fibers: FiberSpec,
    a_x: Vec<f64>,
    a_y: Vec<f64>,
    p: SplitNonlinearity,
    inner: InnerSolve,
) -> Result<GeneratingPair, BundleError> {
    if a_x.len() != fibers.dim_x || a_y.len() != fibers.dim_y {
        return Err(BundleError::Invalid(
            "diagonal lengths disagree with the fiber dimensions".into(),
        ));
    }
    if a_y.iter().any(|&a| a == 0.0 || !a.is_finite()) {
        return Err(BundleError::Invalid(
            "the vertical diagonal must be invertible".into(),
        ));
    }
    let g_fn: FiberFn = {
        let p = p.clone();
        let a_y = a_y.clone();
        Arc::new(move |m, x1, y2| {
            let start: Vec<f64> = (0..a_y.len()).map(|i| y2[i] / a_y[i]).collect();
            implicit_solve(
                |y1| {
                    let (_, py) = p(m, x1, y1);
                    (0..a_y.len()).map(|i| (y2[i] - py[i]) / a_y[i]).collect()
                },
                &start,
                &inner,
            )
            .unwrap_or_else(|e| {
                panic!("inner split solve diverged at index {m}: {e}; the vertical split is not dominant there")
            })
            .value
        })
    };
    let f_fn: FiberFn = {
        let g_fn = g_fn.clone();
        Arc::new(move |m, x1, y2| {
            let y1 = g_fn(m, x1, y2);
            let (px, _) = p(m, x1, &y1);
            (0..a_x.len()).map(|i| a_x[i] * x1[i] + px[i]).collect()
        })
    };
    Ok(GeneratingPair::new(base, fibers, f_fn, g_fn))
}

/// The dual correspondence: fiber roles swap, the base runs backwards, and
/// the generating maps exchange places with their arguments flipped.
pub fn dual_correspondence(pair: &GeneratingPair) -> Result<GeneratingPair, BundleError> {
    if !pair.base.invertible() {
        return Err(BundleError::NoInverse);
    }
    let dual_base = Arc::new(pair.base.inverted()?);
    let fibers = pair.fibers.dual();
    let f_dual: FiberFn = {
        let g = pair.g.clone();
        let ob = pair.base.clone();
        Arc::new(move |m, x1, y2| g(ob.u_inverse(m).expect("invertible base"), y2, x1))
    };
    let g_dual: FiberFn = {
        let f = pair.f.clone();
        let ob = pair.base.clone();
        Arc::new(move |m, x1, y2| f(ob.u_inverse(m).expect("invertible base"), y2, x1))
    };
    let derivs = pair.derivs.as_ref().map(|d| {
        let df_dual: JetFn = {
            let dg = d.dg.clone();
            let ob = pair.base.clone();
            Arc::new(move |m: usize, x1: &[f64], y2: &[f64]| {
                let (d1g, d2g) = dg(ob.u_inverse(m).expect("invertible base"), y2, x1);
                (d2g, d1g)
            })
        };
        let dg_dual: JetFn = {
            let df = d.df.clone();
            let ob = pair.base.clone();
            Arc::new(move |m: usize, x1: &[f64], y2: &[f64]| {
                let (d1f, d2f) = df(ob.u_inverse(m).expect("invertible base"), y2, x1);
                (d2f, d1f)
            })
        };
        AnalyticDerivs {
            df: df_dual,
            dg: dg_dual,
            dm_f: None,
            dm_g: None,
        }
    });
    let mut out = GeneratingPair::new(dual_base, fibers, f_dual, g_dual);
    if let Some(d) = derivs {
        out = out.with_derivs(d);
    }
    Ok(out)
}

/// Compose two correspondences: `first` is traversed before `second`, which
/// acts at the image index `u(m)` of the first base map.
///
/// `lip_product` must be a bound on
/// `sup lip_x(G of second) * sup lip_y(F of first)` strictly below one; it
/// makes the inner matching equation a contraction. The composed maps panic
/// if that iteration nevertheless diverges.
pub fn compose_correspondences(
    first: &GeneratingPair,
    second: &GeneratingPair,
    lip_product: f64,
    inner: &InnerSolve,
) -> Result<GeneratingPair, SolveError> {
    if !(lip_product < 1.0) {
        return Err(SolveError::AngleConditionViolated {
            product: lip_product,
            limit: 1.0,
        });
    }
    if first.base.count() != second.base.count() {
        return Err(BundleError::Invalid("bases to compose have different sizes".into()).into());
    }
    if first.fibers.dim_x != second.fibers.dim_x || first.fibers.dim_y != second.fibers.dim_y {
        return Err(BundleError::Invalid("fiber dimensions of the factors disagree".into()).into());
    }
    let base = Arc::new(first.base.compose_with(&second.base)?);
    let fibers = FiberSpec {
        dim_x: first.fibers.dim_x,
        dim_y: second.fibers.dim_y,
        radius_x: first.fibers.radius_x,
        radius_y: second.fibers.radius_y,
    };
    let solve_mid: FiberFn = {
        let f1 = first.f.clone();
        let g2 = second.g.clone();
        let mid_base = first.base.clone();
        let inner = *inner;
        Arc::new(move |m, x1, y3| {
            let mid = mid_base.u(m);
            implicit_solve(|y2| g2(mid, &f1(m, x1, y2), y3), y3, &inner)
                .unwrap_or_else(|e| {
                    panic!(
                        "inner composition solve diverged at index {m}: {e}; the declared Lipschitz product bound does not hold"
                    )
                })
                .value
        })
    };
    let f_c: FiberFn = {
        let solve_mid = solve_mid.clone();
        let f1 = first.f.clone();
        let f2 = second.f.clone();
        let mid_base = first.base.clone();
        Arc::new(move |m, x1, y3| {
            let y2 = solve_mid(m, x1, y3);
            f2(mid_base.u(m), &f1(m, x1, &y2), y3)
        })
    };
    let g_c: FiberFn = {
        let solve_mid = solve_mid.clone();
        let g1 = first.g.clone();
        Arc::new(move |m, x1, y3| {
            let y2 = solve_mid(m, x1, y3);
            g1(m, x1, &y2)
        })
    };
    Ok(GeneratingPair::new(base, fibers, f_c, g_c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::fixed_point::InnerSolve;

    fn single_point() -> Arc<DiscreteBase> {
        Arc::new(DiscreteBase::single_point())
    }

    fn spec11() -> FiberSpec {
        FiberSpec::new(1, 1, 10.0, 10.0).unwrap()
    }

    #[test]
    fn diagonal_split_pair_satisfies_the_defining_equations() {
        let base = single_point();
        let p: SplitNonlinearity =
            Arc::new(|_, x, y| (vec![0.1 * (y[0]).sin()], vec![0.1 * (x[0]).cos()]));
        let map =
            bundle_map_from_diagonal_split(base.clone(), spec11(), vec![0.3], vec![3.0], p.clone())
                .unwrap();
        let pair = generating_pair_from_diagonal_split(
            base,
            spec11(),
            vec![0.3],
            vec![3.0],
            p,
            InnerSolve {
                tol: 1e-14,
                max_iter: 200,
            },
        )
        .unwrap();
        for &(x1, y2) in &[(0.2, 0.7), (-0.5, 0.1), (1.0, -1.0)] {
            let y1 = pair.eval_g(0, &[x1], &[y2]);
            let x2 = pair.eval_f(0, &[x1], &[y2]);
            let (hx, hy) = map.eval(0, &[x1], &y1);
            assert!((hx[0] - x2[0]).abs() < 1e-12);
            assert!((hy[0] - y2).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_of_dual_restores_the_maps() {
        let base = Arc::new(DiscreteBase::periodic_orbit(3).unwrap());
        let f: FiberFn = Arc::new(|m, x, y| vec![0.5 * x[0] + 0.1 * m as f64 + 0.2 * y[0].sin()]);
        let g: FiberFn = Arc::new(|m, x, y| vec![0.5 * y[0] + 0.1 * (x[0] + m as f64).cos()]);
        let pair = GeneratingPair::new(base, spec11(), f, g);
        let dd = dual_correspondence(&dual_correspondence(&pair).unwrap()).unwrap();
        for m in 0..3 {
            for &(x, y) in &[(0.3, -0.4), (0.0, 1.0)] {
                let a = pair.eval_f(m, &[x], &[y]);
                let b = dd.eval_f(m, &[x], &[y]);
                assert!((a[0] - b[0]).abs() < 1e-15);
                let a = pair.eval_g(m, &[x], &[y]);
                let b = dd.eval_g(m, &[x], &[y]);
                assert!((a[0] - b[0]).abs() < 1e-15);
            }
            assert_eq!(dd.base().u(m), pair.base().u(m));
        }
    }

    #[test]
    fn dual_swaps_expansion_and_contraction() {
        // F = x/2, G = y/2 describes the map (x, y) -> (x/2, 2y].
        let base = single_point();
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, _, y| vec![0.5 * y[0]]);
        let pair = GeneratingPair::new(base, spec11(), f, g);
        let dual = dual_correspondence(&pair).unwrap();
        // Dual F at (x1, y2) is G(y2, x1) = x1/2: the dual contracts in its
        // own horizontal direction, which was the expanding vertical one.
        assert!((dual.eval_f(0, &[0.8], &[0.0])[0] - 0.4).abs() < 1e-15);
        assert!((dual.eval_g(0, &[0.0], &[0.8])[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn dual_derivative_transport_matches_finite_differences() {
        let base = Arc::new(DiscreteBase::periodic_orbit(2).unwrap());
        let f: FiberFn = Arc::new(|m, x, y| vec![0.4 * x[0] + 0.2 * y[0] * y[0] + 0.05 * m as f64]);
        let g: FiberFn =
            Arc::new(|m, x, y| vec![0.3 * y[0] + 0.1 * (x[0] * (1.0 + m as f64)).sin()]);
        let df: JetFn = Arc::new(|_, _, y| {
            (
                DMatrix::from_element(1, 1, 0.4),
                DMatrix::from_element(1, 1, 0.4 * y[0]),
            )
        });
        let dg: JetFn = Arc::new(|m, x, _| {
            (
                DMatrix::from_element(
                    1,
                    1,
                    0.1 * (1.0 + m as f64) * (x[0] * (1.0 + m as f64)).cos(),
                ),
                DMatrix::from_element(1, 1, 0.3),
            )
        });
        let pair = GeneratingPair::new(base, spec11(), f, g).with_derivs(AnalyticDerivs {
            df,
            dg,
            dm_f: None,
            dm_g: None,
        });
        let dual = dual_correspondence(&pair).unwrap();
        let fd = dual.fd_derivs(1e-6);
        for m in 0..2 {
            let (x1, y2) = ([0.3], [0.7]);
            let (a1, a2) = (dual.derivs().unwrap().df)(m, &x1, &y2);
            let (n1, n2) = (fd.df)(m, &x1, &y2);
            assert!((a1[(0, 0)] - n1[(0, 0)]).abs() < 1e-6);
            assert!((a2[(0, 0)] - n2[(0, 0)]).abs() < 1e-6);
            let (b1, b2) = (dual.derivs().unwrap().dg)(m, &x1, &y2);
            let (m1, m2) = (fd.dg)(m, &x1, &y2);
            assert!((b1[(0, 0)] - m1[(0, 0)]).abs() < 1e-6);
            assert!((b2[(0, 0)] - m2[(0, 0)]).abs() < 1e-6);
        }
    }

    #[test]
    fn composition_of_a_linear_pair_with_itself_squares_the_map() {
        // H = [[0.5, 0.2], [0.3, 2.0]] acting on (x, y).
        let base = single_point();
        let p: SplitNonlinearity = Arc::new(|_, x, y| (vec![0.2 * y[0]], vec![0.3 * x[0]]));
        let inner = InnerSolve {
            tol: 1e-14,
            max_iter: 500,
        };
        let pair = generating_pair_from_diagonal_split(
            base.clone(),
            spec11(),
            vec![0.5],
            vec![2.0],
            p,
            inner,
        )
        .unwrap();
        // H^2 = [[0.31, 0.5], [0.75, 4.06]].
        let p2: SplitNonlinearity = Arc::new(|_, x, y| (vec![0.5 * y[0]], vec![0.75 * x[0]]));
        let squared =
            generating_pair_from_diagonal_split(base, spec11(), vec![0.31], vec![4.06], p2, inner)
                .unwrap();
        let composed = compose_correspondences(&pair, &pair, 0.15 * 0.1, &inner).unwrap();
        for &(x1, y3) in &[(0.4, 0.9), (-0.2, 0.3), (1.0, -1.0)] {
            let a = composed.eval_f(0, &[x1], &[y3]);
            let b = squared.eval_f(0, &[x1], &[y3]);
            assert!((a[0] - b[0]).abs() < 1e-9, "F: {} vs {}", a[0], b[0]);
            let a = composed.eval_g(0, &[x1], &[y3]);
            let b = squared.eval_g(0, &[x1], &[y3]);
            assert!((a[0] - b[0]).abs() < 1e-9, "G: {} vs {}", a[0], b[0]);
        }
    }

    #[test]
    fn composition_rejects_lipschitz_products_at_one() {
        let base = single_point();
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(|_, _, y| vec![0.5 * y[0]]);
        let pair = GeneratingPair::new(base, spec11(), f, g);
        let err = compose_correspondences(&pair, &pair, 1.0, &InnerSolve::default()).unwrap_err();
        assert!(matches!(err, SolveError::AngleConditionViolated { .. }));
    }

    #[test]
    fn section_defects_vanish_on_invariant_sections_and_are_bounded_otherwise() {
        let base = Arc::new(DiscreteBase::periodic_orbit(2).unwrap());
        // G pins y1 = y2/2 + c(m); the section i_Y = 2c(m)... solved: the
        // invariant section of y -> y/2 + c(m) over a 2-orbit.
        let c = [0.3, -0.1];
        let f: FiberFn = Arc::new(|_, x, _| vec![0.5 * x[0]]);
        let g: FiberFn = Arc::new(move |m, _, y| vec![0.5 * y[0] + c[m]]);
        let pair = GeneratingPair::new(base, spec11(), f, g);
        // i_Y(m) = c(m) + 0.5 c(u(m)) + 0.25 c(m) + ... = (c(m) + 0.5 c(u(m))) / 0.75.
        let iy = |m: usize| vec![(c[m] + 0.5 * c[(m + 1) % 2]) / 0.75];
        let sections = SectionPair::from_fn(2, |_| vec![0.0], iy, 0.0, 0.0).unwrap();
        let (eta, eps) = pair.section_defects(&sections);
        assert!(eta.iter().all(|&e| e < 1e-14));
        assert!(eps.iter().all(|&e| e < 1e-14));
        assert!(pair.check_section_defects(&sections).is_ok());

        let shifted =
            SectionPair::from_fn(2, |_| vec![0.0], |m| vec![iy(m)[0] + 0.1], 0.01, 0.0).unwrap();
        assert!(matches!(
            pair.check_section_defects(&shifted),
            Err(SolveError::BoundednessViolated(_))
        ));
    }

    #[test]
    fn bundle_map_orbits_carry_base_indices() {
        let base = Arc::new(DiscreteBase::periodic_orbit(3).unwrap());
        let h = Arc::new(|_m: usize, x: &[f64], y: &[f64]| (vec![0.5 * x[0]], vec![0.5 * y[0]]));
        let map = BundleMap::new(base, spec11(), h);
        let orbit = map.iterate(1, &[1.0], &[2.0], 3);
        assert_eq!(orbit.len(), 4);
        assert_eq!(orbit[3].0, 1);
        assert!((orbit[3].1[0] - 0.125).abs() < 1e-15);
        assert!((orbit[3].2[0] - 0.25).abs() < 1e-15);
    }
}
