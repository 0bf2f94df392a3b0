//! Bounded domains described by their characteristic function.
//!
//! Every domain answers two questions: is a point inside, and what axis-aligned
//! box encloses it. Closed-form star-shaped domains, polygons, watertight
//! triangle meshes and boxes are provided.

mod boundary;
mod mesh;
mod polygon;
mod star;

use std::ops::{Add, Mul, Sub};

pub use boundary::{boundary_sample_2d, BoundaryCurve};
pub use mesh::TriMesh3D;
pub use polygon::Polygon2D;
pub use star::{StarPolar2D, StarSpherical3D};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("mesh is not watertight: edge ({0}, {1}) is shared by {2} triangles")]
    NotWatertight(usize, usize, usize),
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("invalid box: lo must be <= hi componentwise")]
    InvalidBox,
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A point in `D`-dimensional Euclidean space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<const D: usize>(pub [f64; D]);

impl<const D: usize> Point<D> {
    pub const ORIGIN: Self = Point([0.0; D]);

    pub fn new(coords: [f64; D]) -> Self {
        Point(coords)
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self, GeometryError> {
        let arr: [f64; D] = coords.try_into().map_err(|_| GeometryError::DimensionMismatch {
            expected: D,
            got: coords.len(),
        })?;
        Ok(Point(arr))
    }

    #[inline]
    pub fn coords(&self) -> &[f64; D] {
        &self.0
    }

    #[inline]
    pub fn dist2(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for k in 0..D {
            let d = self.0[k] - other.0[k];
            s += d * d;
        }
        s
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> f64 {
        self.dist2(other).sqrt()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl<const D: usize> Add for Point<D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for k in 0..D {
            self.0[k] += rhs.0[k];
        }
        self
    }
}

impl<const D: usize> Sub for Point<D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for k in 0..D {
            self.0[k] -= rhs.0[k];
        }
        self
    }
}

impl<const D: usize> Mul<f64> for Point<D> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for c in self.0.iter_mut() {
            *c *= rhs;
        }
        self
    }
}

impl<const D: usize> From<[f64; D]> for Point<D> {
    fn from(c: [f64; D]) -> Self {
        Point(c)
    }
}

/// Axis-aligned bounding box, `lo <= hi` componentwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<const D: usize> {
    pub lo: Point<D>,
    pub hi: Point<D>,
}

impl<const D: usize> Aabb<D> {
    pub fn new(lo: Point<D>, hi: Point<D>) -> Result<Self, GeometryError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if (0..D).any(|k| lo.0[k] > hi.0[k]) {
            return Err(GeometryError::InvalidBox);
        }
        Ok(Aabb { lo, hi })
    }

    /// Smallest box holding all `points`; `None` when empty.
    pub fn enclosing<'a, I: IntoIterator<Item = &'a Point<D>>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            for k in 0..D {
                lo.0[k] = lo.0[k].min(p.0[k]);
                hi.0[k] = hi.0[k].max(p.0[k]);
            }
        }
        Some(Aabb { lo, hi })
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|k| self.lo.0[k] <= p.0[k] && p.0[k] <= self.hi.0[k])
    }

    pub fn volume(&self) -> f64 {
        (0..D).map(|k| self.hi.0[k] - self.lo.0[k]).product()
    }

    pub fn center(&self) -> Point<D> {
        (self.lo + self.hi) * 0.5
    }

    pub fn extent(&self, k: usize) -> f64 {
        self.hi.0[k] - self.lo.0[k]
    }
}

/// A bounded region of `D`-dimensional space.
///
/// Implementations are immutable and may be queried from many threads at once.
pub trait Domain<const D: usize>: Send + Sync {
    /// Characteristic function of the domain.
    fn contains(&self, p: &Point<D>) -> bool;

    /// A box enclosing the whole domain.
    fn bounding_box(&self) -> Aabb<D>;

    /// `contains` for a point given as a coordinate slice.
    fn contains_coords(&self, coords: &[f64]) -> Result<bool, GeometryError> {
        Ok(self.contains(&Point::from_slice(coords)?))
    }
}

impl<const D: usize, T: Domain<D> + ?Sized> Domain<D> for Box<T> {
    fn contains(&self, p: &Point<D>) -> bool {
        (**self).contains(p)
    }
    fn bounding_box(&self) -> Aabb<D> {
        (**self).bounding_box()
    }
}

impl<const D: usize, T: Domain<D> + ?Sized> Domain<D> for std::sync::Arc<T> {
    fn contains(&self, p: &Point<D>) -> bool {
        (**self).contains(p)
    }
    fn bounding_box(&self) -> Aabb<D> {
        (**self).bounding_box()
    }
}

/// Axis-aligned box domain. Contains its closure.
#[derive(Clone, Copy, Debug)]
pub struct BoxDomain<const D: usize> {
    pub aabb: Aabb<D>,
}

impl<const D: usize> BoxDomain<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Result<Self, GeometryError> {
        Ok(BoxDomain { aabb: Aabb::new(Point(lo), Point(hi))? })
    }

    pub fn unit() -> Self {
        BoxDomain { aabb: Aabb { lo: Point([0.0; D]), hi: Point([1.0; D]) } }
    }
}

impl<const D: usize> Domain<D> for BoxDomain<D> {
    fn contains(&self, p: &Point<D>) -> bool {
        self.aabb.contains(p)
    }
    fn bounding_box(&self) -> Aabb<D> {
        self.aabb
    }
}

/// Polar angle of `(x, y)` in `(-pi, pi]`, with `arg(0, 0) = 0`.
#[inline]
pub fn arg(x: f64, y: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        0.0
    } else {
        y.atan2(x)
    }
}

/// Golden-angle direction sequence used to pick ray directions for parity tests.
/// Deterministic so containment stays a pure function.
pub(crate) fn ray_angle(attempt: usize) -> f64 {
    const GOLDEN: f64 = 2.399_963_229_728_653;
    0.318_309_886_183_790_7 + attempt as f64 * GOLDEN
}

pub(crate) const RAY_RETRIES: usize = 8;
pub(crate) const DEGENERATE_EPS: f64 = 1e-12;
