use std::f64::consts::{FRAC_PI_6, PI, TAU};
use std::fmt;
use std::sync::Arc;

use super::{arg, Aabb, Domain, Point};

type Radius2 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Radius3 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

// Relative padding on the sampled maximal radius.
const BBOX_PAD: f64 = 1e-3;

/// Planar domain star-shaped with respect to the origin: `|p| < r(arg p)`.
#[derive(Clone)]
pub struct StarPolar2D {
    name: String,
    radius: Radius2,
}

impl StarPolar2D {
    pub fn new(name: impl Into<String>, radius: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        StarPolar2D { name: name.into(), radius: Arc::new(radius) }
    }

    /// The clover test shape, `r(t) = 3/2 - cos^3(3(t - pi/6))`.
    pub fn clover() -> Self {
        Self::new("clover2d", |t: f64| 1.5 - (3.0 * (t - FRAC_PI_6)).cos().powi(3))
    }

    /// Disc of the given radius centred at the origin.
    pub fn disc(r: f64) -> Self {
        Self::new("disc", move |_| r)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn radius(&self, theta: f64) -> f64 {
        (self.radius)(theta)
    }

    /// Point on the boundary curve at polar angle `theta`.
    pub fn boundary_point(&self, theta: f64) -> Point<2> {
        let r = self.radius(theta);
        Point([r * theta.cos(), r * theta.sin()])
    }
}

impl fmt::Debug for StarPolar2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StarPolar2D").field("name", &self.name).finish()
    }
}

impl Domain<2> for StarPolar2D {
    #[inline]
    fn contains(&self, p: &Point<2>) -> bool {
        let [x, y] = p.0;
        let r = self.radius(arg(x, y));
        x * x + y * y < r * r
    }

    fn bounding_box(&self) -> Aabb<2> {
        const SAMPLES: usize = 20_000;
        let rmax = (0..SAMPLES)
            .map(|i| self.radius(TAU * i as f64 / SAMPLES as f64))
            .fold(0.0, f64::max);
        let r = rmax * (1.0 + BBOX_PAD);
        Aabb { lo: Point([-r, -r]), hi: Point([r, r]) }
    }
}

/// Spatial domain star-shaped with respect to the origin: `|p| < r(phi, theta)`
/// with azimuth `phi = arg(x, y)` and polar angle `theta` measured from +z.
#[derive(Clone)]
pub struct StarSpherical3D {
    name: String,
    radius: Radius3,
}

impl StarSpherical3D {
    pub fn new(
        name: impl Into<String>,
        radius: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        StarSpherical3D { name: name.into(), radius: Arc::new(radius) }
    }

    /// Three-dimensional clover,
    /// `r(phi, theta) = 3/2 - cos(3(phi - pi/6))^3 (pi - theta)^2 theta^2 / 8`.
    pub fn clover() -> Self {
        Self::new("clover3d", |phi: f64, theta: f64| {
            let c = (3.0 * (phi - FRAC_PI_6)).cos();
            1.5 - c * c * c * (PI - theta).powi(2) * theta * theta / 8.0
        })
    }

    pub fn ball(r: f64) -> Self {
        Self::new("ball", move |_, _| r)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn radius(&self, phi: f64, theta: f64) -> f64 {
        (self.radius)(phi, theta)
    }
}

impl fmt::Debug for StarSpherical3D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StarSpherical3D").field("name", &self.name).finish()
    }
}

impl Domain<3> for StarSpherical3D {
    #[inline]
    fn contains(&self, p: &Point<3>) -> bool {
        let [x, y, z] = p.0;
        let n2 = x * x + y * y + z * z;
        if n2 == 0.0 {
            return self.radius(0.0, 0.0) > 0.0;
        }
        let theta = (z / n2.sqrt()).clamp(-1.0, 1.0).acos();
        let r = self.radius(arg(x, y), theta);
        n2 < r * r
    }

    fn bounding_box(&self) -> Aabb<3> {
        const N_PHI: usize = 256;
        const N_THETA: usize = 128;
        let mut rmax: f64 = 0.0;
        for i in 0..N_PHI {
            let phi = TAU * i as f64 / N_PHI as f64;
            for j in 0..=N_THETA {
                let theta = PI * j as f64 / N_THETA as f64;
                rmax = rmax.max(self.radius(phi, theta));
            }
        }
        let r = rmax * (1.0 + BBOX_PAD);
        Aabb { lo: Point([-r; 3]), hi: Point([r; 3]) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn clover_examples() {
        let c = StarPolar2D::clover();
        assert!(c.contains(&Point([0.0, 0.0])));
        assert!(!c.contains(&Point([2.5, 0.0])));
        assert!(c.contains(&Point([0.0, 1.0])));
        assert!((c.radius(0.0) - 1.5).abs() < 1e-12);
        assert!((c.radius(PI / 2.0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn clover_box_contains_circle_of_max_radius() {
        let b = StarPolar2D::clover().bounding_box();
        for k in 0..2 {
            assert!(b.lo.0[k] <= -2.5 && b.hi.0[k] >= 2.5);
        }
    }

    #[test]
    fn star_containment_matches_radius_oracle() {
        let c = StarPolar2D::clover();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let p = Point([rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
            let theta = p.0[1].atan2(p.0[0]);
            let r = 1.5 - (3.0 * (theta - PI / 6.0)).cos().powi(3);
            assert_eq!(c.contains(&p), p.norm() < r);
        }
    }

    #[test]
    fn clover3d_radius_range() {
        let c = StarSpherical3D::clover();
        assert!((c.radius(1.0, 0.0) - 1.5).abs() < 1e-15);
        assert!(c.contains(&Point([0.0, 0.0, 0.0])));
        assert!(c.contains(&Point([0.0, 0.0, 1.4])));
        assert!(!c.contains(&Point([0.0, 0.0, 1.6])));
        let b = c.bounding_box();
        let bump = (PI / 2.0).powi(4) / 8.0;
        assert!(b.hi.0[0] >= 1.5 + bump);
    }

    #[test]
    fn bounding_boxes_hold_all_inside_samples() {
        let c2 = StarPolar2D::clover();
        let b2 = c2.bounding_box();
        let c3 = StarSpherical3D::clover();
        let b3 = c3.bounding_box();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let p = Point([rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]);
            if c2.contains(&p) {
                assert!(b2.contains(&p));
            }
            let q = Point([
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
            ]);
            if c3.contains(&q) {
                assert!(b3.contains(&q));
            }
        }
    }
}
