use std::path::Path;

use super::{ray_angle, Aabb, Domain, GeometryError, Point, DEGENERATE_EPS, RAY_RETRIES};

/// Simple closed polygon. The closing edge from the last vertex back to the
/// first is implicit.
#[derive(Clone, Debug)]
pub struct Polygon2D {
    vertices: Vec<Point<2>>,
    bbox: Aabb<2>,
}

impl Polygon2D {
    pub fn new(mut vertices: Vec<Point<2>>) -> Result<Self, GeometryError> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    if collinear_overlap(a, b, c, d) {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        let bbox = Aabb::enclosing(&vertices).expect("nonempty");
        Ok(Polygon2D { vertices, bbox })
    }

    /// Reads "x,y" rows. Blank lines, `#` comments and a non-numeric header
    /// line are skipped.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut vertices = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 2 => vertices.push(Point([v[0], v[1]])),
                Ok(v) => {
                    return Err(GeometryError::Parse {
                        path: path.display().to_string(),
                        line: i + 1,
                        msg: format!("expected 2 columns, found {}", v.len()),
                    })
                }
                Err(_) if vertices.is_empty() && i == 0 => continue,
                Err(e) => {
                    return Err(GeometryError::Parse {
                        path: path.display().to_string(),
                        line: i + 1,
                        msg: e.to_string(),
                    })
                }
            }
        }
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point<2>] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point<2>, Point<2>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(&b)).sum()
    }

    /// Counts ray crossings in direction `(dx, dy)`; `None` when the ray grazes
    /// a vertex or runs parallel to an edge.
    fn crossings(&self, p: &Point<2>, dx: f64, dy: f64) -> Option<usize> {
        let [px, py] = p.0;
        let mut count = 0;
        for (a, b) in self.edges() {
            let (ex, ey) = (b.0[0] - a.0[0], b.0[1] - a.0[1]);
            let len = (ex * ex + ey * ey).sqrt();
            // d . n with n the unit edge normal
            let denom = dx * ey - dy * ex;
            if (denom / len).abs() < DEGENERATE_EPS {
                // parallel: harmless unless the ray line runs along the edge
                let off = ((a.0[0] - px) * dy - (a.0[1] - py) * dx).abs();
                if off < DEGENERATE_EPS * len.max(1.0) {
                    return None;
                }
                continue;
            }
            let (wx, wy) = (a.0[0] - px, a.0[1] - py);
            let t = (wx * ey - wy * ex) / denom;
            let s = (wx * dy - wy * dx) / denom;
            if t <= 0.0 {
                continue;
            }
            if s.abs() < DEGENERATE_EPS || (s - 1.0).abs() < DEGENERATE_EPS {
                return None;
            }
            if (0.0..1.0).contains(&s) {
                count += 1;
            }
        }
        Some(count)
    }
}

impl Domain<2> for Polygon2D {
    fn contains(&self, p: &Point<2>) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        let mut last = 0;
        for attempt in 0..RAY_RETRIES {
            let a = ray_angle(attempt);
            match self.crossings(p, a.cos(), a.sin()) {
                Some(c) => return c % 2 == 1,
                None => {
                    last = attempt;
                }
            }
        }
        // every direction was degenerate; p sits on the boundary for all
        // practical purposes
        let a = ray_angle(last);
        let (dx, dy) = (a.cos(), a.sin());
        let mut count = 0;
        for (a, b) in self.edges() {
            let (ex, ey) = (b.0[0] - a.0[0], b.0[1] - a.0[1]);
            let denom = dx * ey - dy * ex;
            if denom == 0.0 {
                continue;
            }
            let (wx, wy) = (a.0[0] - p.0[0], a.0[1] - p.0[1]);
            let t = (wx * ey - wy * ex) / denom;
            let s = (wx * dy - wy * dx) / denom;
            if t > 0.0 && (0.0..1.0).contains(&s) {
                count += 1;
            }
        }
        count % 2 == 1
    }

    fn bounding_box(&self) -> Aabb<2> {
        self.bbox
    }
}

fn orient(a: Point<2>, b: Point<2>, c: Point<2>) -> f64 {
    (b.0[0] - a.0[0]) * (c.0[1] - a.0[1]) - (b.0[1] - a.0[1]) * (c.0[0] - a.0[0])
}

fn on_segment(a: Point<2>, b: Point<2>, c: Point<2>) -> bool {
    c.0[0] >= a.0[0].min(b.0[0])
        && c.0[0] <= a.0[0].max(b.0[0])
        && c.0[1] >= a.0[1].min(b.0[1])
        && c.0[1] <= a.0[1].max(b.0[1])
}

fn segments_intersect(a: Point<2>, b: Point<2>, c: Point<2>, d: Point<2>) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Adjacent edges overlapping along a common line (a spike folding back).
fn collinear_overlap(a: Point<2>, b: Point<2>, c: Point<2>, d: Point<2>) -> bool {
    if orient(a, b, c) != 0.0 || orient(a, b, d) != 0.0 {
        return false;
    }
    let (ab, cd) = ((b - a), (d - c));
    ab.0[0] * cd.0[0] + ab.0[1] * cd.0[1] < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn square() -> Polygon2D {
        Polygon2D::new(vec![Point([0.0, 0.0]), Point([1.0, 0.0]), Point([1.0, 1.0]), Point([0.0, 1.0])])
            .unwrap()
    }

    fn l_shape() -> Polygon2D {
        Polygon2D::new(vec![
            Point([0.0, 0.0]),
            Point([2.0, 0.0]),
            Point([2.0, 1.0]),
            Point([1.0, 1.0]),
            Point([1.0, 2.0]),
            Point([0.0, 2.0]),
        ])
        .unwrap()
    }

    /// Winding-number oracle, independent of the ray casting path.
    fn winding(poly: &Polygon2D, p: &Point<2>) -> bool {
        let mut wn = 0i32;
        for (a, b) in poly.edges() {
            if a.0[1] <= p.0[1] {
                if b.0[1] > p.0[1] && orient(a, b, *p) > 0.0 {
                    wn += 1;
                }
            } else if b.0[1] <= p.0[1] && orient(a, b, *p) < 0.0 {
                wn -= 1;
            }
        }
        wn != 0
    }

    #[test]
    fn rejects_degenerate_polygons() {
        assert!(matches!(
            Polygon2D::new(vec![Point([0.0, 0.0]), Point([1.0, 0.0])]),
            Err(GeometryError::TooFewVertices(2))
        ));
        let bowtie = vec![Point([0.0, 0.0]), Point([1.0, 1.0]), Point([1.0, 0.0]), Point([0.0, 1.0])];
        assert!(matches!(Polygon2D::new(bowtie), Err(GeometryError::SelfIntersecting(..))));
    }

    #[test]
    fn closing_duplicate_vertex_dropped() {
        let p = Polygon2D::new(vec![
            Point([0.0, 0.0]),
            Point([1.0, 0.0]),
            Point([0.0, 1.0]),
            Point([0.0, 0.0]),
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 3);
    }

    #[test]
    fn bounding_box_is_vertex_extent() {
        let b = l_shape().bounding_box();
        assert_eq!(b.lo, Point([0.0, 0.0]));
        assert_eq!(b.hi, Point([2.0, 2.0]));
    }

    #[test]
    fn agrees_with_winding_number() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let star: Vec<Point<2>> = (0..17)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 17.0;
                let r = if i % 2 == 0 { 1.0 } else { 0.4 };
                Point([r * t.cos(), r * t.sin()])
            })
            .collect();
        for poly in [square(), l_shape(), Polygon2D::new(star).unwrap()] {
            for _ in 0..10_000 {
                let p = Point([rng.random_range(-1.2..2.2), rng.random_range(-1.2..2.2)]);
                assert_eq!(poly.contains(&p), winding(&poly, &p), "{p:?}");
            }
        }
    }

    #[test]
    fn vertex_aligned_queries() {
        let l = l_shape();
        // horizontal rays from these points pass through vertices
        assert!(l.contains(&Point([0.5, 1.0])));
        assert!(l.contains(&Point([0.5, 0.5])));
        assert!(!l.contains(&Point([1.5, 1.5])));
        assert!(!l.contains(&Point([-0.5, 1.0])));
    }

    #[test]
    fn csv_loader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sq.csv");
        std::fs::write(&path, "x,y\n0,0\n1,0\n1,1\n0,1\n").unwrap();
        let p = Polygon2D::from_csv(&path).unwrap();
        assert_eq!(p.vertices().len(), 4);
        std::fs::write(&path, "0,0\n1,0,3\n").unwrap();
        match Polygon2D::from_csv(&path) {
            Err(GeometryError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
