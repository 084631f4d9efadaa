use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point, Vector};

/// Axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Point::new(x0, y0),
            max: Point::new(x1, y1),
        }
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Normal and tangential permeability of one fracture segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentPermeability {
    pub normal: f64,
    pub tangential: f64,
}

/// A fracture: a polyline of straight segments with piecewise constant
/// permeabilities and a constant thickness.
///
/// The fracture normal of segment `s` is the segment tangent rotated
/// clockwise, `n = (t.y, -t.x)`; it points out of the side-1 subdomain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fracture {
    pub points: Vec<Point>,
    pub permeability: Vec<SegmentPermeability>,
    pub thickness: f64,
}

impl Fracture {
    pub fn uniform(points: Vec<Point>, kappa: f64, thickness: f64) -> Self {
        let n = points.len().saturating_sub(1);
        Self {
            points,
            permeability: vec![
                SegmentPermeability {
                    normal: kappa,
                    tangential: kappa,
                };
                n
            ],
            thickness,
        }
    }

    pub fn num_segments(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn segment(&self, s: usize) -> (Point, Point) {
        (self.points[s], self.points[s + 1])
    }

    pub fn tangent(&self, s: usize) -> Vector {
        let (a, b) = self.segment(s);
        (b - a).normalize()
    }

    pub fn normal(&self, s: usize) -> Vector {
        let t = self.tangent(s);
        Vector::new(t.y, -t.x)
    }

    pub fn length(&self) -> f64 {
        (0..self.num_segments())
            .map(|s| {
                let (a, b) = self.segment(s);
                (b - a).norm()
            })
            .sum()
    }
}

/// Geometry of the fractured domain: the bulk outline as a union of
/// rectangles plus a set of pairwise disjoint fractures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub outline: Vec<Rect>,
    pub fractures: Vec<Fracture>,
}

impl DomainSpec {
    pub fn bounding_box(&self) -> Rect {
        let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for o in &self.outline {
            r.min.x = r.min.x.min(o.min.x);
            r.min.y = r.min.y.min(o.min.y);
            r.max.x = r.max.x.max(o.max.x);
            r.max.y = r.max.y.max(o.max.y);
        }
        r
    }

    pub fn diameter(&self) -> f64 {
        let b = self.bounding_box();
        (b.max - b.min).norm()
    }

    /// Point identification tolerance.
    pub fn tolerance(&self) -> f64 {
        1e-10 * self.diameter()
    }

    /// Closed containment in the union of outline rectangles.
    pub fn contains(&self, p: &Point) -> bool {
        self.outline.iter().any(|r| r.contains(p))
    }

    /// True if a small neighbourhood of `p` lies in the outline.
    pub fn is_interior(&self, p: &Point) -> bool {
        let eps = 1e-7 * self.diameter();
        [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .all(|(sx, sy)| self.contains(&Point::new(p.x + sx * eps, p.y + sy * eps)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.outline.is_empty() {
            return Err(Error::EmptyDomain);
        }
        for (i, r) in self.outline.iter().enumerate() {
            if !(r.area() > 0.0) || r.max.x <= r.min.x {
                return Err(Error::InvalidDomain(format!("rectangle {i} has non-positive area")));
            }
        }
        let tol = self.tolerance();
        for (f, fr) in self.fractures.iter().enumerate() {
            if fr.points.len() < 2 {
                return Err(Error::InvalidDomain(format!("fracture {f} needs at least two points")));
            }
            if fr.permeability.len() != fr.num_segments() {
                return Err(Error::InvalidDomain(format!(
                    "fracture {f} has {} segments but {} permeability entries",
                    fr.num_segments(),
                    fr.permeability.len()
                )));
            }
            if !(fr.thickness > 0.0) {
                return Err(Error::InvalidDomain(format!("fracture {f} thickness must be positive")));
            }
            for (s, k) in fr.permeability.iter().enumerate() {
                if !(k.normal > 0.0 && k.tangential > 0.0) {
                    return Err(Error::InvalidDomain(format!(
                        "fracture {f} segment {s} permeabilities must be positive"
                    )));
                }
                let (a, b) = fr.segment(s);
                if (b - a).norm() <= tol {
                    return Err(Error::InvalidDomain(format!("fracture {f} segment {s} is degenerate")));
                }
                let mid = Point::from((a.coords + b.coords) * 0.5);
                if !self.is_interior(&mid) {
                    return Err(Error::InvalidDomain(format!(
                        "fracture {f} segment {s} is not inside the domain"
                    )));
                }
                if !self.contains(&a) || !self.contains(&b) {
                    return Err(Error::InvalidDomain(format!(
                        "fracture {f} segment {s} leaves the domain"
                    )));
                }
            }
            // Non-adjacent segments of one polyline must not touch.
            for s in 0..fr.num_segments() {
                for t in (s + 2)..fr.num_segments() {
                    let (a, b) = fr.segment(s);
                    let (c, d) = fr.segment(t);
                    if segments_touch(a, b, c, d, tol) {
                        return Err(Error::InvalidDomain(format!("fracture {f} self-intersects")));
                    }
                }
            }
        }
        for f in 0..self.fractures.len() {
            for g in (f + 1)..self.fractures.len() {
                let (ff, gg) = (&self.fractures[f], &self.fractures[g]);
                for s in 0..ff.num_segments() {
                    for t in 0..gg.num_segments() {
                        let (a, b) = ff.segment(s);
                        let (c, d) = gg.segment(t);
                        if segments_touch(a, b, c, d, tol) {
                            return Err(Error::InvalidDomain(format!("fractures {f} and {g} intersect")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn cross(u: Vector, v: Vector) -> f64 {
    u.x * v.y - u.y * v.x
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Closed segments `[a, b]` and `[c, d]` intersect or come within `tol`.
pub(crate) fn segments_touch(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    point_segment_distance(a, c, d) <= tol
        || point_segment_distance(b, c, d) <= tol
        || point_segment_distance(c, a, b) <= tol
        || point_segment_distance(d, a, b) <= tol
}

/// Parameter of `p` along segment `[a, b]` (arc length from `a`) when `p`
/// lies on the segment within `tol`.
pub(crate) fn on_segment(p: Point, a: Point, b: Point, tol: f64) -> Option<f64> {
    let ab = b - a;
    let len = ab.norm();
    let t = (p - a).dot(&ab) / len;
    let dist = cross(ab, p - a).abs() / len;
    if dist <= tol && t >= -tol && t <= len + tol {
        Some(t)
    } else {
        None
    }
}
