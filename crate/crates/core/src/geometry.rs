//! Planar segments and simple polygons with exact distance queries.

use crate::{Error, Result};

pub type Point = [f64; 2];

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}
#[inline]
fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
#[inline]
fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        norm(sub(self.b, self.a))
    }

    pub fn direction(&self) -> Point {
        let d = sub(self.b, self.a);
        let l = norm(d);
        [d[0] / l, d[1] / l]
    }

    pub fn distance(&self, p: Point) -> f64 {
        let d = sub(self.b, self.a);
        let l2 = dot(d, d);
        if l2 == 0.0 {
            return norm(sub(p, self.a));
        }
        let t = (dot(sub(p, self.a), d) / l2).clamp(0.0, 1.0);
        norm(sub(p, [self.a[0] + t * d[0], self.a[1] + t * d[1]]))
    }

    /// Distance from `p` to the infinite line through the segment.
    pub fn line_distance(&self, p: Point) -> f64 {
        cross(self.direction(), sub(p, self.a)).abs()
    }

    /// Signed side of `p` relative to the line a→b (positive on the left).
    pub fn side(&self, p: Point) -> f64 {
        cross(sub(self.b, self.a), sub(p, self.a))
    }

    /// Portion of `self` lying on `other` when the two are collinear within
    /// `tol`, as a parameter interval in arc length along `self`.
    pub fn collinear_overlap(&self, other: &Segment, tol: f64) -> Option<(f64, f64)> {
        if self.line_distance(other.a) > tol || self.line_distance(other.b) > tol {
            return None;
        }
        let d = self.direction();
        let ta = dot(sub(other.a, self.a), d);
        let tb = dot(sub(other.b, self.a), d);
        let lo = ta.min(tb).max(0.0);
        let hi = ta.max(tb).min(self.length());
        (hi > lo).then_some((lo, hi))
    }

    /// True if the closed segments share a point.
    pub fn intersects(&self, other: &Segment) -> bool {
        let (p, r) = (self.a, sub(self.b, self.a));
        let (q, s) = (other.a, sub(other.b, other.a));
        let o1 = cross(r, sub(q, p));
        let o2 = cross(r, sub(other.b, p));
        let o3 = cross(s, sub(p, q));
        let o4 = cross(s, sub(self.b, q));
        let scale = (norm(r) * norm(s)).max(f64::MIN_POSITIVE);
        let z = |v: f64| v.abs() <= 1e-14 * scale;
        let on = |a: Point, b: Point, c: Point| {
            c[0] >= a[0].min(b[0]) - 1e-14
                && c[0] <= a[0].max(b[0]) + 1e-14
                && c[1] >= a[1].min(b[1]) - 1e-14
                && c[1] <= a[1].max(b[1]) + 1e-14
        };
        if (o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0) && !z(o1) && !z(o2) && !z(o3) && !z(o4) {
            return true;
        }
        (z(o1) && on(self.a, self.b, other.a))
            || (z(o2) && on(self.a, self.b, other.b))
            || (z(o3) && on(other.a, other.b, self.a))
            || (z(o4) && on(other.a, other.b, self.b))
    }
}

/// Total length of the union of intervals.
pub fn union_length(mut iv: Vec<(f64, f64)>) -> f64 {
    iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (lo, hi) in iv {
        match cur {
            Some((clo, chi)) if lo <= chi => cur = Some((clo, chi.max(hi))),
            Some((clo, chi)) => {
                total += chi - clo;
                cur = Some((lo, hi));
            }
            None => cur = Some((lo, hi)),
        }
    }
    if let Some((lo, hi)) = cur {
        total += hi - lo;
    }
    total
}

/// Simple polygon given by its vertices in order; no vertices means ∅.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn empty() -> Self {
        Self { vertices: vec![] }
    }

    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.is_empty() {
            return Ok(Self::empty());
        }
        if vertices.len() < 3 {
            return Err(Error::Geometry(format!("polygon needs 3 or more vertices, got {}", vertices.len())));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("polygon vertex is not finite".into()));
        }
        let p = Self { vertices };
        p.check_simple()?;
        if p.area() <= 0.0 {
            return Err(Error::Geometry("polygon has zero area".into()));
        }
        Ok(p)
    }

    /// Axis-aligned rectangle [x0,x1]×[y0,y1].
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> Vec<Segment> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
            .collect()
    }

    fn check_simple(&self) -> Result<()> {
        let e = self.edges();
        let n = e.len();
        for i in 0..n {
            if e[i].length() == 0.0 {
                return Err(Error::Geometry(format!("polygon edge {i} has zero length")));
            }
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // neighbors share a vertex; they must not fold back onto each other
                    if e[i].collinear_overlap(&e[j], 1e-14 * e[i].length()).is_some() {
                        return Err(Error::Geometry(format!("polygon edges {i} and {j} overlap")));
                    }
                } else if e[i].intersects(&e[j]) {
                    return Err(Error::Geometry(format!("polygon self-intersection between edges {i} and {j}")));
                }
            }
        }
        Ok(())
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for i in 0..n {
            s += cross(self.vertices[i], self.vertices[(i + 1) % n]);
        }
        0.5 * s
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let a = self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let w = cross(p, q);
            cx += (p[0] + q[0]) * w;
            cy += (p[1] + q[1]) * w;
        }
        [cx / (6.0 * a), cy / (6.0 * a)]
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().iter().map(Segment::length).sum()
    }

    /// Even-odd containment; boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if self.is_empty() {
            return false;
        }
        let mut inside = false;
        for e in self.edges() {
            if e.distance(p) == 0.0 {
                return true;
            }
            let (a, b) = (e.a, e.b);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .iter()
            .map(|e| e.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// 0 on the polygon, distance to its boundary outside, +∞ for ∅.
    pub fn distance(&self, p: Point) -> f64 {
        if self.is_empty() {
            f64::INFINITY
        } else if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }
}

/// Distance from `p` to a union of segments; +∞ when empty.
pub fn segments_distance(segs: &[Segment], p: Point) -> f64 {
    segs.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distances() {
        let s = Segment::new([0.5, 0.0], [0.5, 1.0]);
        assert!((s.distance([0.75, 0.5]) - 0.25).abs() < 1e-15);
        assert!((s.distance([0.5, 1.5]) - 0.5).abs() < 1e-15);
        assert!((s.length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlap_of_collinear_segments() {
        let e = Segment::new([0.5, 0.0], [0.5, 1.0]);
        let m = Segment::new([0.5, 0.75], [0.5, 0.25]);
        let (lo, hi) = e.collinear_overlap(&m, 1e-12).unwrap();
        assert!((hi - lo - 0.5).abs() < 1e-15);
        let off = Segment::new([0.6, 0.25], [0.6, 0.75]);
        assert!(e.collinear_overlap(&off, 1e-12).is_none());
        let cross_seg = Segment::new([0.0, 0.5], [1.0, 0.5]);
        assert!(e.collinear_overlap(&cross_seg, 1e-12).is_none());
    }

    #[test]
    fn union_of_intervals() {
        assert!((union_length(vec![(0.0, 1.0), (0.5, 2.0), (3.0, 4.0)]) - 3.0).abs() < 1e-15);
        assert_eq!(union_length(vec![]), 0.0);
    }

    #[test]
    fn polygon_basics() {
        let p = Polygon::rectangle(0.5, 0.0, 1.0, 1.0).unwrap();
        assert!((p.area() - 0.5).abs() < 1e-15);
        assert!((p.perimeter() - 3.0).abs() < 1e-15);
        assert_eq!(p.distance([0.75, 0.3]), 0.0);
        assert!((p.distance([0.25, 0.9]) - 0.25).abs() < 1e-15);
        let c = p.centroid();
        assert!((c[0] - 0.75).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        assert_eq!(Polygon::empty().distance([0.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn self_intersection_rejected() {
        let bow = Polygon::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(bow, Err(Error::Geometry(_))));
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        let fold = Polygon::new(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        assert!(fold.is_err());
    }

    #[test]
    fn concave_polygon_containment() {
        // L-shape
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 0.5], [0.5, 1.0], [0.0, 1.0]]).unwrap();
        assert!(p.contains([0.25, 0.75]));
        assert!(!p.contains([0.75, 0.75]));
        assert!((p.distance([0.75, 0.75]) - 0.25).abs() < 1e-15);
        assert!((p.area() - 0.75).abs() < 1e-15);
    }
}
