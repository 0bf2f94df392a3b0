use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{IndexError, Neighbor};
use crate::geometry::Point;

const LEAF: usize = 8;

/// Balanced k-d tree built once over a fixed point list.
///
/// Indices returned by queries refer to positions in the input list. Ties in
/// distance are broken towards the lower index.
#[derive(Debug, Clone)]
pub struct StaticIndex<const D: usize> {
    points: Vec<Point<D>>,
    // tree order: perm[mid] of every range is the splitting node
    perm: Vec<u32>,
    axes: Vec<u8>,
}

#[derive(Clone, Copy, PartialEq)]
struct Cand {
    d2: f64,
    idx: u32,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const D: usize> StaticIndex<D> {
    pub fn build(points: Vec<Point<D>>) -> Result<Self, IndexError> {
        if points.is_empty() {
            return Err(IndexError::Empty);
        }
        assert!(points.len() < u32::MAX as usize);
        let mut perm: Vec<u32> = (0..points.len() as u32).collect();
        let mut axes = vec![0u8; points.len()];
        build_rec(&points, &mut perm, &mut axes);
        Ok(StaticIndex { points, perm, axes })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point<D>> {
        self.points
    }

    /// Exact nearest neighbour of `q`.
    pub fn nearest(&self, q: &Point<D>) -> Neighbor {
        let mut best = Cand { d2: f64::INFINITY, idx: u32::MAX };
        self.nearest_rec(0, self.perm.len(), q, &mut best);
        Neighbor { index: best.idx as usize, distance: best.d2.sqrt() }
    }

    fn nearest_rec(&self, lo: usize, hi: usize, q: &Point<D>, best: &mut Cand) {
        if hi - lo <= LEAF {
            for &i in &self.perm[lo..hi] {
                let c = Cand { d2: q.dist2(&self.points[i as usize]), idx: i };
                if c < *best {
                    *best = c;
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let i = self.perm[mid];
        let p = &self.points[i as usize];
        let c = Cand { d2: q.dist2(p), idx: i };
        if c < *best {
            *best = c;
        }
        let a = self.axes[mid] as usize;
        let diff = q.0[a] - p.0[a];
        let (first, second) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.nearest_rec(first.0, first.1, q, best);
        if diff * diff <= best.d2 {
            self.nearest_rec(second.0, second.1, q, best);
        }
    }

    /// The `k` nearest points, ascending by distance then index.
    pub fn knn(&self, q: &Point<D>, k: usize) -> Result<Vec<Neighbor>, IndexError> {
        if k > self.len() {
            return Err(IndexError::TooManyNeighbors { k, size: self.len() });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, self.perm.len(), q, k, &mut heap);
        let mut out: Vec<Cand> = heap.into_vec();
        out.sort();
        Ok(out.into_iter().map(|c| Neighbor { index: c.idx as usize, distance: c.d2.sqrt() }).collect())
    }

    fn knn_rec(&self, lo: usize, hi: usize, q: &Point<D>, k: usize, heap: &mut BinaryHeap<Cand>) {
        let offer = |i: u32, heap: &mut BinaryHeap<Cand>| {
            let c = Cand { d2: q.dist2(&self.points[i as usize]), idx: i };
            if heap.len() < k {
                heap.push(c);
            } else if c < *heap.peek().unwrap() {
                heap.pop();
                heap.push(c);
            }
        };
        if hi - lo <= LEAF {
            for &i in &self.perm[lo..hi] {
                offer(i, heap);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let i = self.perm[mid];
        offer(i, heap);
        let p = &self.points[i as usize];
        let a = self.axes[mid] as usize;
        let diff = q.0[a] - p.0[a];
        let (first, second) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.knn_rec(first.0, first.1, q, k, heap);
        if heap.len() < k || diff * diff <= heap.peek().unwrap().d2 {
            self.knn_rec(second.0, second.1, q, k, heap);
        }
    }

    /// All points at distance `<= r` from `q`, in no particular order.
    pub fn within(&self, q: &Point<D>, r: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        self.within_each(q, r, |index, distance| out.push(Neighbor { index, distance }));
        out
    }

    /// Calls `f(index, distance)` for every point within `r` of `q`.
    pub fn within_each(&self, q: &Point<D>, r: f64, mut f: impl FnMut(usize, f64)) {
        self.within_rec(0, self.perm.len(), q, r * r, &mut f);
    }

    fn within_rec(&self, lo: usize, hi: usize, q: &Point<D>, r2: f64, f: &mut impl FnMut(usize, f64)) {
        if hi - lo <= LEAF {
            for &i in &self.perm[lo..hi] {
                let d2 = q.dist2(&self.points[i as usize]);
                if d2 <= r2 {
                    f(i as usize, d2.sqrt());
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let i = self.perm[mid];
        let p = &self.points[i as usize];
        let d2 = q.dist2(p);
        if d2 <= r2 {
            f(i as usize, d2.sqrt());
        }
        let a = self.axes[mid] as usize;
        let diff = q.0[a] - p.0[a];
        if diff <= 0.0 || diff * diff <= r2 {
            self.within_rec(lo, mid, q, r2, f);
        }
        if diff >= 0.0 || diff * diff <= r2 {
            self.within_rec(mid + 1, hi, q, r2, f);
        }
    }
}

fn build_rec<const D: usize>(points: &[Point<D>], perm: &mut [u32], axes: &mut [u8]) {
    let n = perm.len();
    if n <= LEAF {
        return;
    }
    let mut lo = [f64::INFINITY; D];
    let mut hi = [f64::NEG_INFINITY; D];
    for &i in perm.iter() {
        let p = &points[i as usize];
        for k in 0..D {
            lo[k] = lo[k].min(p.0[k]);
            hi[k] = hi[k].max(p.0[k]);
        }
    }
    let axis = (0..D).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap_or(0);
    let mid = n / 2;
    perm.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize].0[axis].total_cmp(&points[b as usize].0[axis]).then(a.cmp(&b))
    });
    axes[mid] = axis as u8;
    let (left, right) = perm.split_at_mut(mid);
    let (laxes, raxes) = axes.split_at_mut(mid);
    build_rec(points, left, laxes);
    build_rec(points, &mut right[1..], &mut raxes[1..]);
}
