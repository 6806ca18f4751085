//! Small vector helpers for points in boxed fibers.
//!
//! Fibers are boxes `[-R, R]^d` carrying the sup norm, so distances, norms,
//! and the radial retraction all work coordinate-wise against the max.

/// Sup norm `max_i |v_i|`; zero for the empty vector (0-dimensional fibers).
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Sup distance between two points of the same fiber.
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len(), "sup_dist: dimension mismatch");
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// True when every coordinate is finite.
pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Radial retraction onto the sup-norm ball of the given radius: the identity
/// inside the ball, `radius * x / |x|` outside. Idempotent, Lipschitz with
/// constant at most 2, and maps every point into the box exactly.
pub fn radial_retraction(x: &[f64], radius: f64) -> Vec<f64> {
    debug_assert!(radius > 0.0, "radial_retraction: radius must be positive");
    let n = sup_norm(x);
    if n <= radius {
        x.to_vec()
    } else {
        let s = radius / n;
        x.iter().map(|&c| c * s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_norm_of_empty_vector_is_zero() {
        assert_eq!(sup_norm(&[]), 0.0);
    }

    #[test]
    fn sup_dist_picks_largest_coordinate_gap() {
        assert_eq!(sup_dist(&[1.0, -2.0], &[0.5, 1.0]), 3.0);
    }

    #[test]
    fn retraction_fixes_interior_points() {
        assert_eq!(radial_retraction(&[0.3, 0.0], 1.0), vec![0.3, 0.0]);
        assert_eq!(radial_retraction(&[0.0, 0.0], 0.5), vec![0.0, 0.0]);
    }

    #[test]
    fn retraction_projects_exterior_points_to_the_box_boundary() {
        // Sup norm 4 retracts by the factor 1/4.
        let r = radial_retraction(&[3.0, 4.0], 1.0);
        assert_eq!(r, vec![0.75, 1.0]);
        assert_eq!(sup_norm(&r), 1.0);
    }

    #[test]
    fn retraction_is_idempotent() {
        let once = radial_retraction(&[5.0, -2.0, 0.1], 0.7);
        let twice = radial_retraction(&once, 0.7);
        assert_eq!(once, twice);
    }

    #[test]
    fn retraction_lipschitz_constant_stays_below_two() {
        // Pairs straddling the boundary realize ratios above 1 but never 2.
        let r = 1.0;
        let mut worst = 0.0f64;
        for i in 0..50 {
            let a = [0.5 + 0.05 * i as f64, 0.4];
            let b = [0.9, -0.3 + 0.04 * i as f64];
            let d0 = sup_dist(&a, &b);
            if d0 == 0.0 {
                continue;
            }
            let d1 = sup_dist(&radial_retraction(&a, r), &radial_retraction(&b, r));
            worst = worst.max(d1 / d0);
        }
        assert!(worst <= 2.0 + 1e-12, "ratio {worst} exceeds 2");
    }
}
