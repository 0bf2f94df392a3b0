use super::{Point, Polygon2D, StarPolar2D};
use crate::spacing::{SpacingError, SpacingFn};

/// A closed planar curve parametrized over `t in [0, 1)`.
pub trait BoundaryCurve {
    /// Point on the curve; periodic in `t` with period 1.
    fn curve_point(&self, t: f64) -> Point<2>;

    /// Parameters of corners that the arc-length table must hit exactly.
    fn corners(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Number of parameter steps used to accumulate arc length.
    fn resolution(&self) -> usize {
        1 << 16
    }
}

impl BoundaryCurve for StarPolar2D {
    fn curve_point(&self, t: f64) -> Point<2> {
        self.boundary_point(std::f64::consts::TAU * t)
    }
}

impl BoundaryCurve for Polygon2D {
    fn curve_point(&self, t: f64) -> Point<2> {
        let v = self.vertices();
        let n = v.len();
        let x = t.rem_euclid(1.0) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let u = x - i as f64;
        let (a, b) = (v[i], v[(i + 1) % n]);
        a + (b - a) * u
    }

    fn corners(&self) -> Vec<f64> {
        let n = self.vertices().len();
        (0..n).map(|i| i as f64 / n as f64).collect()
    }

    fn resolution(&self) -> usize {
        // straight edges: corners alone give exact arc length
        self.vertices().len()
    }
}

/// Places points along a closed boundary curve so that the arc length to the
/// next point equals `h` at the current point.
///
/// The closing gap back to the first point stays within `[0.5 h, 1.5 h]`: a
/// last point that would leave less than half a spacing is dropped. When the
/// curve is too short for three spacings, three evenly spaced points are
/// returned instead.
pub fn boundary_sample_2d(
    curve: &dyn BoundaryCurve,
    h: &SpacingFn,
) -> Result<Vec<Point<2>>, SpacingError> {
    let mut ts: Vec<f64> = (0..curve.resolution()).map(|i| i as f64 / curve.resolution() as f64).collect();
    ts.extend(curve.corners());
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts.push(1.0);
    let pts: Vec<Point<2>> = ts.iter().map(|&t| curve.curve_point(t)).collect();
    let mut cum = Vec::with_capacity(ts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + w[0].dist(&w[1]));
    }
    let total = *cum.last().unwrap();

    let at_arc = |s: f64| -> Point<2> {
        let j = cum.partition_point(|&c| c <= s).clamp(1, cum.len() - 1);
        let (c0, c1) = (cum[j - 1], cum[j]);
        let u = if c1 > c0 { (s - c0) / (c1 - c0) } else { 0.0 };
        curve.curve_point(ts[j - 1] + u * (ts[j] - ts[j - 1]))
    };

    let mut out = vec![curve.curve_point(0.0)];
    let mut s = 0.0;
    let mut h_cur = h.at(&out[0])?;
    loop {
        let s_next = s + h_cur;
        if s_next >= total {
            break;
        }
        let p = at_arc(s_next);
        let h_new = h.at(&p)?;
        if total - s_next < 0.5 * h_new {
            break;
        }
        out.push(p);
        s = s_next;
        h_cur = h_new;
    }
    if out.len() < 3 {
        out = (0..3).map(|i| at_arc(total * i as f64 / 3.0)).collect();
    }
    Ok(out)
}
