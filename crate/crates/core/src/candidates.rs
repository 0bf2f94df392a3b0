//! Candidate directions on the unit sphere and their expansion around a point.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PatternError {
    #[error("unsupported dimension {0}; expected 1, 2 or 3")]
    Dimension(usize),
    #[error("n_c must be at least 3, got {0}")]
    TooFewCandidates(usize),
}

/// Unit directions used to generate candidates around an expanded point.
#[derive(Debug, Clone)]
pub struct SpherePattern<const D: usize> {
    n_c: usize,
    dirs: Vec<Point<D>>,
}

impl<const D: usize> SpherePattern<D> {
    /// Builds the pattern with `n_c` directions on a great circle.
    ///
    /// In 3-D the sphere is cut into `ceil(n_c / 2)` latitude bands; each pole
    /// holds one direction and band `j` holds `round(n_c sin(theta_j))`
    /// (at least one) equally spaced azimuths.
    pub fn new(n_c: usize) -> Result<Self, PatternError> {
        let dirs = match D {
            1 => vec![Point::from_slice(&[-1.0]).unwrap(), Point::from_slice(&[1.0]).unwrap()],
            2 | 3 if n_c < 3 => return Err(PatternError::TooFewCandidates(n_c)),
            2 => (0..n_c)
                .map(|k| {
                    let a = TAU * k as f64 / n_c as f64;
                    Point::from_slice(&[a.cos(), a.sin()]).unwrap()
                })
                .collect(),
            3 => {
                let bands = n_c.div_ceil(2);
                let mut dirs = Vec::new();
                for j in 0..=bands {
                    let theta = PI * j as f64 / bands as f64;
                    let count = if j == 0 || j == bands {
                        1
                    } else {
                        ((n_c as f64 * theta.sin()).round() as usize).max(1)
                    };
                    for k in 0..count {
                        let phi = TAU * k as f64 / count as f64;
                        let (st, ct) = if j == bands { (0.0, -1.0) } else { theta.sin_cos() };
                        dirs.push(Point::from_slice(&[st * phi.cos(), st * phi.sin(), ct]).unwrap());
                    }
                }
                dirs
            }
            d => return Err(PatternError::Dimension(d)),
        };
        Ok(SpherePattern { n_c, dirs })
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn dirs(&self) -> &[Point<D>] {
        &self.dirs
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

/// Orthonormal `D x D` matrix applied to pattern directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<const D: usize>(pub [[f64; D]; D]);

impl<const D: usize> Rotation<D> {
    pub fn identity() -> Self {
        let mut m = [[0.0; D]; D];
        for (k, row) in m.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        Rotation(m)
    }

    /// Planar rotation by `angle`; identity outside 2-D.
    pub fn planar(angle: f64) -> Self {
        let mut r = Self::identity();
        if D == 2 {
            let (s, c) = angle.sin_cos();
            r.0[0][0] = c;
            r.0[0][1] = -s;
            r.0[1][0] = s;
            r.0[1][1] = c;
        }
        r
    }

    /// Rotation from a unit quaternion `(w, x, y, z)`; identity outside 3-D.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let mut r = Self::identity();
        if D == 3 {
            let [w, x, y, z] = q;
            let m = [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ];
            for i in 0..3 {
                for j in 0..3 {
                    r.0[i][j] = m[i][j];
                }
            }
        }
        r
    }

    /// Uniformly random rotation: random sign in 1-D, random angle in 2-D,
    /// random unit quaternion in 3-D.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        match D {
            1 => {
                let mut r = Self::identity();
                if rng.random::<bool>() {
                    r.0[0][0] = -1.0;
                }
                r
            }
            2 => Self::planar(rng.random_range(0.0..TAU)),
            3 => {
                // Shoemake's subgroup algorithm
                let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
                let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
                let (s2, c2) = (TAU * u2).sin_cos();
                let (s3, c3) = (TAU * u3).sin_cos();
                Self::from_quaternion([b * c3, a * s2, a * c2, b * s3])
            }
            _ => Self::identity(),
        }
    }

    #[inline]
    pub fn apply(&self, v: &Point<D>) -> Point<D> {
        let mut out = [0.0; D];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..D {
                s += self.0[i][j] * v.0[j];
            }
            *o = s;
        }
        Point(out)
    }
}

/// Candidates `p + radius * rot * u` for every pattern direction `u`.
pub fn expand<const D: usize>(
    p: &Point<D>,
    radius: f64,
    pattern: &SpherePattern<D>,
    rot: &Rotation<D>,
) -> Vec<Point<D>> {
    let mut out = Vec::with_capacity(pattern.len());
    expand_into(p, radius, pattern, rot, &mut out);
    out
}

/// Like [`expand`] but reuses `out`.
#[inline]
pub fn expand_into<const D: usize>(
    p: &Point<D>,
    radius: f64,
    pattern: &SpherePattern<D>,
    rot: &Rotation<D>,
    out: &mut Vec<Point<D>>,
) {
    out.clear();
    out.extend(pattern.dirs.iter().map(|u| *p + rot.apply(u) * radius));
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn pattern_counts() {
        assert_eq!(SpherePattern::<2>::new(12).unwrap().len(), 12);
        assert_eq!(SpherePattern::<3>::new(12).unwrap().len(), 46);
        let one = SpherePattern::<1>::new(7).unwrap();
        assert_eq!(one.dirs(), &[Point([-1.0]), Point([1.0])]);
        assert_eq!(SpherePattern::<2>::new(2).unwrap_err(), PatternError::TooFewCandidates(2));
        assert_eq!(SpherePattern::<4>::new(12).unwrap_err(), PatternError::Dimension(4));
    }

    /// Band-by-band enumeration of the latitude rule for n_c = 12.
    #[test]
    fn latitude_rule_enumeration() {
        let pat = SpherePattern::<3>::new(12).unwrap();
        let mut per_band = std::collections::BTreeMap::new();
        for d in pat.dirs() {
            let key = (d.0[2].clamp(-1.0, 1.0).acos() * 6.0 / PI).round() as i32;
            *per_band.entry(key).or_insert(0) += 1;
        }
        assert_eq!(per_band.values().copied().collect::<Vec<_>>(), vec![1, 6, 10, 12, 10, 6, 1]);
    }

    #[test]
    fn directions_unit_and_distinct() {
        for n_c in [3, 5, 12, 30] {
            let p3 = SpherePattern::<3>::new(n_c).unwrap();
            let p2 = SpherePattern::<2>::new(n_c).unwrap();
            for d in p3.dirs() {
                assert!((d.norm() - 1.0).abs() < 1e-12);
            }
            for d in p2.dirs() {
                assert!((d.norm() - 1.0).abs() < 1e-12);
            }
            for (i, a) in p3.dirs().iter().enumerate() {
                for b in &p3.dirs()[i + 1..] {
                    assert!(a.dist(b) > 1e-6);
                }
            }
        }
    }

    #[test]
    fn planar_gap_is_uniform() {
        let pat = SpherePattern::<2>::new(12).unwrap();
        let mut angles: Vec<f64> = pat.dirs().iter().map(|d| d.0[1].atan2(d.0[0]).rem_euclid(TAU)).collect();
        angles.sort_by(f64::total_cmp);
        angles.push(angles[0] + TAU);
        for w in angles.windows(2) {
            assert!((w[1] - w[0] - TAU / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expand_examples() {
        let pat = SpherePattern::<2>::new(4).unwrap();
        let c = expand(&Point([0.0, 0.0]), 1.0, &pat, &Rotation::identity());
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (p, e) in c.iter().zip(expect) {
            assert!(p.dist(&Point(e)) < 1e-15);
        }

        // the 4-point pattern is invariant under a quarter turn
        let a = expand(&Point([1.0, 1.0]), 2.0, &pat, &Rotation::identity());
        let b = expand(&Point([1.0, 1.0]), 2.0, &pat, &Rotation::planar(PI / 2.0));
        for p in &a {
            assert!(b.iter().any(|q| q.dist(p) < 1e-12));
        }
    }

    #[test]
    fn expansion_is_isometric() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let pat = SpherePattern::<3>::new(12).unwrap();
        for _ in 0..200 {
            let rot = Rotation::<3>::random(&mut rng);
            let p = Point([rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 1.0]);
            let r = rng.random_range(0.01..3.0);
            let c = expand(&p, r, &pat, &rot);
            for q in &c {
                assert!((q.dist(&p) - r).abs() <= 1e-9 * r);
            }
            // pairwise angles preserved
            for i in 0..pat.len() {
                let j = (i + 7) % pat.len();
                let before = pat.dirs()[i].dist(&pat.dirs()[j]);
                let after = c[i].dist(&c[j]) / r;
                assert!((before - after).abs() < 1e-9);
            }
        }
    }
}
