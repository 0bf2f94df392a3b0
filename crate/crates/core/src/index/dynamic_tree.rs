use super::{IndexError, Neighbor};
use crate::geometry::Point;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node<const D: usize> {
    point: Point<D>,
    radius: f64,
    left: u32,
    right: u32,
}

/// Insert-only k-d tree. Split axes cycle with depth; no rebalancing, so the
/// shape follows the insertion order.
///
/// Node ids equal insertion order, which is also the tie-break order.
/// Every point may carry an exclusion radius used by [`DynamicIndex::conflict`].
#[derive(Debug, Clone, Default)]
pub struct DynamicIndex<const D: usize> {
    nodes: Vec<Node<D>>,
}

impl<const D: usize> DynamicIndex<D> {
    pub fn new() -> Self {
        DynamicIndex { nodes: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        DynamicIndex { nodes: Vec::with_capacity(n) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn point(&self, id: usize) -> &Point<D> {
        &self.nodes[id].point
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &Point<D>> + '_ {
        self.nodes.iter().map(|n| &n.point)
    }

    pub fn radius(&self, id: usize) -> f64 {
        self.nodes[id].radius
    }

    /// Inserts `p` with an unbounded exclusion radius and returns its id.
    pub fn insert(&mut self, p: Point<D>) -> usize {
        self.insert_with_radius(p, f64::INFINITY)
    }

    /// Inserts `p` with exclusion radius `radius` and returns its id.
    pub fn insert_with_radius(&mut self, p: Point<D>, radius: f64) -> usize {
        let id = self.nodes.len() as u32;
        assert!(id != NIL);
        self.nodes.push(Node { point: p, radius, left: NIL, right: NIL });
        if id == 0 {
            return 0;
        }
        let mut cur = 0u32;
        let mut depth = 0usize;
        loop {
            let axis = depth % D;
            let node = &self.nodes[cur as usize];
            let go_left = p.0[axis] < node.point.0[axis];
            let next = if go_left { node.left } else { node.right };
            if next == NIL {
                let node = &mut self.nodes[cur as usize];
                if go_left {
                    node.left = id;
                } else {
                    node.right = id;
                }
                return id as usize;
            }
            cur = next;
            depth += 1;
        }
    }

    /// Depth of the deepest node; 0 for an empty tree.
    pub fn depth(&self) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        let mut max = 0;
        let mut stack = vec![(0u32, 1usize)];
        while let Some((id, d)) = stack.pop() {
            max = max.max(d);
            let n = &self.nodes[id as usize];
            for c in [n.left, n.right] {
                if c != NIL {
                    stack.push((c, d + 1));
                }
            }
        }
        max
    }

    pub fn nearest(&self, q: &Point<D>) -> Result<Neighbor, IndexError> {
        if self.nodes.is_empty() {
            return Err(IndexError::Empty);
        }
        let (idx, d2) = self.search(q, f64::INFINITY, true);
        Ok(Neighbor { index: idx as usize, distance: d2.sqrt() })
    }

    /// Nearest point strictly closer than `r`, if any.
    #[inline]
    pub fn nearest_within(&self, q: &Point<D>, r: f64) -> Option<Neighbor> {
        if self.nodes.is_empty() {
            return None;
        }
        let (idx, d2) = self.search(q, r * r, false);
        (idx != NIL).then(|| Neighbor { index: idx as usize, distance: d2.sqrt() })
    }

    /// Some stored point `s` with `|q - s| < min(r, radius(s))`, if any.
    pub fn conflict(&self, q: &Point<D>, r: f64) -> Option<Neighbor> {
        if self.nodes.is_empty() {
            return None;
        }
        let r2 = r * r;
        let mut stack: smallvec::SmallVec<[(u32, u32); 64]> = smallvec::SmallVec::new();
        stack.push((0, 0));
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[id as usize];
            let d2 = q.dist2(&node.point);
            if d2 < r2 && d2 < node.radius * node.radius {
                return Some(Neighbor { index: id as usize, distance: d2.sqrt() });
            }
            let axis = depth as usize % D;
            let diff = q.0[axis] - node.point.0[axis];
            let (near, far) = if diff < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
            if far != NIL && diff * diff < r2 {
                stack.push((far, depth + 1));
            }
            if near != NIL {
                stack.push((near, depth + 1));
            }
        }
        None
    }

    /// Branch-and-bound descent. With `inclusive` the bound admits ties so the
    /// lowest id wins; otherwise only points strictly inside `bound2` count.
    fn search(&self, q: &Point<D>, bound2: f64, inclusive: bool) -> (u32, f64) {
        let mut best = (NIL, bound2);
        let mut stack: smallvec::SmallVec<[(u32, u32, f64); 64]> = smallvec::SmallVec::new();
        stack.push((0, 0, 0.0));
        while let Some((id, depth, plane2)) = stack.pop() {
            if plane2 > best.1 || (!inclusive && plane2 >= best.1) {
                continue;
            }
            let node = &self.nodes[id as usize];
            let d2 = q.dist2(&node.point);
            if d2 < best.1 || (d2 == best.1 && (inclusive && id < best.0)) {
                best = (id, d2);
            }
            let axis = depth as usize % D;
            let diff = q.0[axis] - node.point.0[axis];
            let (near, far) = if diff < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
            if far != NIL {
                stack.push((far, depth + 1, plane2.max(diff * diff)));
            }
            if near != NIL {
                stack.push((near, depth + 1, plane2));
            }
        }
        best
    }
}
