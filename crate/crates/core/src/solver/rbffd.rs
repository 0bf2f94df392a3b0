use faer::prelude::*;
use faer::Mat;

use super::SolverError;
use crate::geometry::Point;

/// Number of monomials of total degree at most 2 in the plane.
pub const MONOMIALS: usize = 6;

/// Largest monomial residual a stencil may have before it counts as singular.
const SINGULAR_RESIDUAL: f64 = 1e-6;

/// `phi(r) = r^3`.
#[inline]
pub fn phs3(r: f64) -> f64 {
    r * r * r
}

/// Planar Laplacian of `r^3` as a function of `r`, i.e. `9 r`.
#[inline]
pub fn phs3_laplacian(r: f64) -> f64 {
    9.0 * r
}

/// `1, x, y, x^2, xy, y^2` at a point in local coordinates.
#[inline]
pub fn monomials(p: &[f64; 2]) -> [f64; MONOMIALS] {
    let [x, y] = *p;
    [1.0, x, y, x * x, x * y, y * y]
}

/// Laplacians of [`monomials`]; constant, so independent of the point.
pub const MONOMIAL_LAPLACIANS: [f64; MONOMIALS] = [0.0, 0.0, 0.0, 2.0, 0.0, 2.0];

/// Laplacian weights at `center` for the stencil `points`, from cubic
/// polyharmonic splines augmented with all monomials up to degree 2.
///
/// Coordinates are translated to `center` before the local saddle-point
/// system is assembled and solved by LU with partial pivoting.
pub fn laplacian_weights(points: &[Point<2>], center: &Point<2>) -> Result<Vec<f64>, SolverError> {
    let n = points.len();
    if n < MONOMIALS {
        return Err(SolverError::StencilTooSmall(n));
    }
    let local: Vec<[f64; 2]> = points.iter().map(|p| (*p - *center).0).collect();
    let size = n + MONOMIALS;
    let mut a = Mat::<f64>::zeros(size, size);
    let mut rhs = Mat::<f64>::zeros(size, 1);
    for i in 0..n {
        for j in 0..i {
            let r = Point(local[i]).dist(&Point(local[j]));
            a[(i, j)] = phs3(r);
            a[(j, i)] = a[(i, j)];
        }
        for (k, m) in monomials(&local[i]).into_iter().enumerate() {
            a[(i, n + k)] = m;
            a[(n + k, i)] = m;
        }
        rhs[(i, 0)] = phs3_laplacian(Point(local[i]).norm());
    }
    for (k, l) in MONOMIAL_LAPLACIANS.into_iter().enumerate() {
        rhs[(n + k, 0)] = l;
    }

    let sol = a.partial_piv_lu().solve(&rhs);
    let w: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let res = exactness_residual(points, center, &w);
    if !res.is_finite() || res > SINGULAR_RESIDUAL {
        return Err(SolverError::SingularStencil { center: center.0, residual: res });
    }
    Ok(w)
}

/// `max_m |sum_i w_i m(x_i - center) - (Lap m)(0)|` over the degree-2
/// monomials.
pub fn exactness_residual(points: &[Point<2>], center: &Point<2>, w: &[f64]) -> f64 {
    let mut acc = [0.0; MONOMIALS];
    for (p, wi) in points.iter().zip(w) {
        for (a, m) in acc.iter_mut().zip(monomials(&(*p - *center).0)) {
            *a += wi * m;
        }
    }
    acc.iter()
        .zip(MONOMIAL_LAPLACIANS)
        .map(|(a, l)| (a - l).abs())
        .fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scattered(n: usize, scale: f64, seed: u64) -> Vec<Point<2>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = vec![Point([0.3, -0.2])];
        pts.extend((1..n).map(|_| Point([0.3 + scale * rng.random_range(-1.0..1.0), -0.2 + scale * rng.random_range(-1.0..1.0)])));
        pts
    }

    #[test]
    fn weights_are_exact_on_quadratics() {
        for (scale, seed) in [(1.0, 1), (0.1, 2), (0.01, 3), (0.003, 4)] {
            let pts = scattered(15, scale, seed);
            let w = laplacian_weights(&pts, &pts[0]).unwrap();
            assert!(exactness_residual(&pts, &pts[0], &w) < 1e-10, "scale {scale}");
            // Lap(x^2 + y^2) = 4 in global coordinates
            let lap: f64 = pts.iter().zip(&w).map(|(p, wi)| wi * (p.0[0] * p.0[0] + p.0[1] * p.0[1])).sum();
            assert!((lap - 4.0).abs() < 1e-8, "scale {scale}: {lap}");
        }
    }

    #[test]
    fn radial_laplacian_of_cubic() {
        // Lap r^k = k (k + d - 2) r^(k-2) with k = 3, d = 2, checked by central differences
        let f = |x: f64, y: f64| phs3((x * x + y * y).sqrt());
        let e = 1e-4;
        for (x, y) in [(0.7, 0.2), (-0.3, 1.1), (2.0, -1.5)] {
            let fd = (f(x + e, y) + f(x - e, y) + f(x, y + e) + f(x, y - e) - 4.0 * f(x, y)) / (e * e);
            let r = (x * x + y * y).sqrt();
            assert!((fd - phs3_laplacian(r)).abs() < 1e-5 * r.max(1.0));
        }
    }

    #[test]
    fn collinear_stencil_is_singular() {
        let pts: Vec<Point<2>> = (0..8).map(|i| Point([i as f64 * 0.1, 2.0 * i as f64 * 0.1])).collect();
        assert!(matches!(laplacian_weights(&pts, &pts[0]), Err(SolverError::SingularStencil { .. })));
        assert!(matches!(laplacian_weights(&pts[..5], &pts[0]), Err(SolverError::StencilTooSmall(5))));
    }
}
