use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::{ray_angle, Aabb, Domain, GeometryError, Point, DEGENERATE_EPS, RAY_RETRIES};

/// Closed triangle surface. Containment is decided by ray parity, so the
/// surface must be watertight; this is checked on construction.
#[derive(Clone, Debug)]
pub struct TriMesh3D {
    triangles: Vec<[Point<3>; 3]>,
    bbox: Aabb<3>,
}

impl TriMesh3D {
    pub fn new(triangles: Vec<[Point<3>; 3]>) -> Result<Self, GeometryError> {
        if triangles.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        if triangles.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        check_watertight(&triangles)?;
        let bbox = Aabb::enclosing(triangles.iter().flatten()).expect("nonempty");
        Ok(TriMesh3D { triangles, bbox })
    }

    pub fn triangles(&self) -> &[[Point<3>; 3]] {
        &self.triangles
    }

    /// Loads an STL (ASCII or binary) or OBJ file, chosen by extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let path = path.as_ref();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Self::new(read_obj(path)?),
            _ => Self::new(read_stl(path)?),
        }
    }

    fn crossings(&self, p: &Point<3>, dir: [f64; 3]) -> Option<usize> {
        let mut count = 0;
        for tri in &self.triangles {
            let e1 = tri[1] - tri[0];
            let e2 = tri[2] - tri[0];
            let pv = cross(dir, e2.0);
            let det = dot(e1.0, pv);
            let scale = (dot(e1.0, e1.0) * dot(e2.0, e2.0)).sqrt();
            let tv = (*p - tri[0]).0;
            if (det / scale.max(f64::MIN_POSITIVE)).abs() < DEGENERATE_EPS {
                // ray parallel to the triangle plane; only a problem if it lies in it
                let n = cross(e1.0, e2.0);
                if (dot(tv, n) / scale.max(f64::MIN_POSITIVE)).abs() < DEGENERATE_EPS {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / det;
            let u = dot(tv, pv) * inv;
            if !(-DEGENERATE_EPS..=1.0 + DEGENERATE_EPS).contains(&u) {
                continue;
            }
            let qv = cross(tv, e1.0);
            let v = dot(dir, qv) * inv;
            if v < -DEGENERATE_EPS || u + v > 1.0 + DEGENERATE_EPS {
                continue;
            }
            let t = dot(e2.0, qv) * inv;
            if t <= 0.0 {
                continue;
            }
            if u < DEGENERATE_EPS || v < DEGENERATE_EPS || u + v > 1.0 - DEGENERATE_EPS {
                // edge or vertex hit
                return None;
            }
            count += 1;
        }
        Some(count)
    }
}

impl Domain<3> for TriMesh3D {
    fn contains(&self, p: &Point<3>) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        let mut fallback = false;
        for attempt in 0..RAY_RETRIES {
            let a = ray_angle(attempt);
            let b = ray_angle(attempt + RAY_RETRIES) * 0.5;
            let dir = [a.cos() * b.sin(), a.sin() * b.sin(), b.cos()];
            match self.crossings(p, dir) {
                Some(c) => return c % 2 == 1,
                None => fallback = true,
            }
        }
        // persistent degeneracy: p lies on the surface
        !fallback
    }

    fn bounding_box(&self) -> Aabb<3> {
        self.bbox
    }
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_watertight(triangles: &[[Point<3>; 3]]) -> Result<(), GeometryError> {
    let mut ids: HashMap<[u64; 3], usize> = HashMap::new();
    let mut key = |p: &Point<3>| {
        let k = p.0.map(|c| (c + 0.0).to_bits());
        let next = ids.len();
        *ids.entry(k).or_insert(next)
    };
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in triangles {
        let v = [key(&tri[0]), key(&tri[1]), key(&tri[2])];
        for i in 0..3 {
            let (a, b) = (v[i], v[(i + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut bad: Vec<_> = edges.into_iter().filter(|&(_, c)| c != 2).collect();
    bad.sort();
    match bad.first() {
        Some(&((a, b), c)) => Err(GeometryError::NotWatertight(a, b, c)),
        None => Ok(()),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> GeometryError {
    GeometryError::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn read_stl(path: &Path) -> Result<Vec<[Point<3>; 3]>, GeometryError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let binary_len = |b: &[u8]| {
        (b.len() >= 84).then(|| 84 + 50 * u32::from_le_bytes([b[80], b[81], b[82], b[83]]) as usize)
    };
    let looks_ascii = bytes.starts_with(b"solid") && binary_len(&bytes) != Some(bytes.len());
    if looks_ascii {
        let text = String::from_utf8_lossy(&bytes);
        let mut tris = Vec::new();
        let mut cur: Vec<Point<3>> = Vec::with_capacity(3);
        for (i, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("vertex") => {
                    let c: Result<Vec<f64>, _> = it.map(str::parse::<f64>).collect();
                    let c = c.map_err(|e| parse_err(path, i + 1, e.to_string()))?;
                    if c.len() != 3 {
                        return Err(parse_err(path, i + 1, "vertex needs 3 coordinates"));
                    }
                    cur.push(Point([c[0], c[1], c[2]]));
                }
                Some("endloop") => {
                    if cur.len() != 3 {
                        return Err(parse_err(path, i + 1, "facet is not a triangle"));
                    }
                    tris.push([cur[0], cur[1], cur[2]]);
                    cur.clear();
                }
                _ => {}
            }
        }
        Ok(tris)
    } else {
        let n = match binary_len(&bytes) {
            Some(len) if len == bytes.len() => (len - 84) / 50,
            _ => return Err(parse_err(path, 0, "truncated binary STL")),
        };
        let f = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
        Ok((0..n)
            .map(|t| {
                let base = 84 + 50 * t + 12;
                let v = |k: usize| {
                    let o = base + 12 * k;
                    Point([f(o), f(o + 4), f(o + 8)])
                };
                [v(0), v(1), v(2)]
            })
            .collect())
    }
}

fn read_obj(path: &Path) -> Result<Vec<[Point<3>; 3]>, GeometryError> {
    let text = std::fs::read_to_string(path)?;
    let mut verts: Vec<Point<3>> = Vec::new();
    let mut tris = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Result<Vec<f64>, _> = it.take(3).map(str::parse::<f64>).collect();
                let c = c.map_err(|e| parse_err(path, i + 1, e.to_string()))?;
                if c.len() != 3 {
                    return Err(parse_err(path, i + 1, "vertex needs 3 coordinates"));
                }
                verts.push(Point([c[0], c[1], c[2]]));
            }
            Some("f") => {
                let idx: Result<Vec<usize>, GeometryError> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let k: i64 = first.parse().map_err(|_| parse_err(path, i + 1, "bad face index"))?;
                        let resolved = if k < 0 { verts.len() as i64 + k } else { k - 1 };
                        if resolved < 0 || resolved as usize >= verts.len() {
                            return Err(parse_err(path, i + 1, "face index out of range"));
                        }
                        Ok(resolved as usize)
                    })
                    .collect();
                let idx = idx?;
                if idx.len() != 3 {
                    return Err(parse_err(path, i + 1, "only triangular faces are supported"));
                }
                tris.push([verts[idx[0]], verts[idx[1]], verts[idx[2]]]);
            }
            _ => {}
        }
    }
    Ok(tris)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    pub(crate) fn cube_triangles() -> Vec<[Point<3>; 3]> {
        let v = |x: f64, y: f64, z: f64| Point([x, y, z]);
        let c = [
            v(0., 0., 0.),
            v(1., 0., 0.),
            v(1., 1., 0.),
            v(0., 1., 0.),
            v(0., 0., 1.),
            v(1., 0., 1.),
            v(1., 1., 1.),
            v(0., 1., 1.),
        ];
        let faces = [
            [0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7], [0, 1, 5], [0, 5, 4],
            [2, 3, 7], [2, 7, 6], [1, 2, 6], [1, 6, 5], [0, 4, 7], [0, 7, 3],
        ];
        faces.iter().map(|f| [c[f[0]], c[f[1]], c[f[2]]]).collect()
    }

    #[test]
    fn cube_containment() {
        let m = TriMesh3D::new(cube_triangles()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let p = Point([
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
            ]);
            let inside = p.0.iter().all(|c| (0.0..=1.0).contains(c));
            assert_eq!(m.contains(&p), inside, "{p:?}");
        }
        // axis-aligned queries hit edges/diagonals of the faces
        assert!(m.contains(&Point([0.5, 0.5, 0.5])));
        assert!(m.contains(&Point([0.25, 0.25, 0.5])));
        assert!(!m.contains(&Point([1.5, 0.5, 0.5])));
    }

    #[test]
    fn open_mesh_rejected() {
        let mut t = cube_triangles();
        t.pop();
        assert!(matches!(TriMesh3D::new(t), Err(GeometryError::NotWatertight(..))));
        assert!(matches!(TriMesh3D::new(vec![]), Err(GeometryError::EmptyMesh)));
    }

    #[test]
    fn stl_and_obj_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tris = cube_triangles();

        let mut ascii = String::from("solid cube\n");
        for t in &tris {
            ascii += "facet normal 0 0 0\nouter loop\n";
            for v in t {
                ascii += &format!("vertex {} {} {}\n", v.0[0], v.0[1], v.0[2]);
            }
            ascii += "endloop\nendfacet\n";
        }
        ascii += "endsolid cube\n";
        let p = dir.path().join("a.stl");
        std::fs::write(&p, ascii).unwrap();
        assert_eq!(TriMesh3D::load(&p).unwrap().triangles().len(), 12);

        let mut bin = vec![0u8; 80];
        bin.extend_from_slice(&(tris.len() as u32).to_le_bytes());
        for t in &tris {
            bin.extend_from_slice(&[0u8; 12]);
            for v in t {
                for c in v.0 {
                    bin.extend_from_slice(&(c as f32).to_le_bytes());
                }
            }
            bin.extend_from_slice(&[0u8; 2]);
        }
        let p = dir.path().join("b.stl");
        std::fs::write(&p, bin).unwrap();
        assert!(TriMesh3D::load(&p).unwrap().contains(&Point([0.5, 0.5, 0.5])));

        let mut obj = String::new();
        let mut idx = Vec::new();
        for t in &tris {
            for v in t {
                obj += &format!("v {} {} {}\n", v.0[0], v.0[1], v.0[2]);
                idx.push(idx.len() + 1);
            }
        }
        for f in idx.chunks(3) {
            obj += &format!("f {}/1 {} {}\n", f[0], f[1], f[2]);
        }
        let p = dir.path().join("c.obj");
        std::fs::write(&p, obj).unwrap();
        assert!(TriMesh3D::load(&p).unwrap().contains(&Point([0.5, 0.5, 0.5])));

        std::fs::write(&p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3 4\n").unwrap();
        assert!(matches!(TriMesh3D::load(&p), Err(GeometryError::Parse { line: 5, .. })));
    }
}
