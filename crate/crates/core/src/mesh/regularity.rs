use serde::{Deserialize, Serialize};

use super::PolygonalMesh;
use crate::Point;

/// Shape-regularity statistics of a subdivided mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Min over elements of (distance from centre to boundary) / diameter.
    pub rho_s: f64,
    /// Min over elements of (shortest edge) / diameter.
    pub rho_e: f64,
    pub h_max: f64,
    pub h_min: f64,
    /// Elements below either floor.
    pub flagged: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityFloors {
    pub rho_s: f64,
    pub rho_e: f64,
}

impl Default for RegularityFloors {
    fn default() -> Self {
        Self { rho_s: 0.1, rho_e: 0.2 }
    }
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

pub fn check_regularity(mesh: &PolygonalMesh) -> RegularityReport {
    check_regularity_with(mesh, RegularityFloors::default())
}

pub fn check_regularity_with(mesh: &PolygonalMesh, floors: RegularityFloors) -> RegularityReport {
    let mut r = RegularityReport {
        rho_s: f64::INFINITY,
        rho_e: f64::INFINITY,
        h_max: 0.0,
        h_min: f64::INFINITY,
        flagged: Vec::new(),
    };
    for (id, el) in mesh.elements.iter().enumerate() {
        let n = el.vertices.len();
        let mut inner = f64::INFINITY;
        let mut shortest = f64::INFINITY;
        for i in 0..n {
            let a = mesh.vertices[el.vertices[i]];
            let b = mesh.vertices[el.vertices[(i + 1) % n]];
            inner = inner.min(distance_to_segment(el.center, a, b));
            shortest = shortest.min((b - a).norm());
        }
        let (rs, re) = (inner / el.diameter, shortest / el.diameter);
        r.rho_s = r.rho_s.min(rs);
        r.rho_e = r.rho_e.min(re);
        r.h_max = r.h_max.max(el.diameter);
        r.h_min = r.h_min.min(el.diameter);
        if rs < floors.rho_s || re < floors.rho_e {
            r.flagged.push(id);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, DomainSpec, Rect};

    #[test]
    fn unit_squares() {
        let d = DomainSpec {
            outline: vec![Rect::new(0.0, 0.0, 2.0, 2.0)],
            fractures: vec![],
        };
        let r = check_regularity(&build_initial_mesh(d, 1.0).unwrap());
        assert!((r.rho_e - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((r.rho_s - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!(r.flagged.is_empty());
    }

    #[test]
    fn sliver_flagged() {
        let d = DomainSpec {
            outline: vec![Rect::new(0.0, 0.0, 1.0, 0.01)],
            fractures: vec![],
        };
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.01),
            Point::new(0.0, 0.01),
        ];
        let m = PolygonalMesh::from_polygons(d, v, vec![vec![0, 1, 2, 3]]).unwrap();
        let r = check_regularity(&m);
        assert!(r.rho_s < RegularityFloors::default().rho_s);
        assert_eq!(r.flagged, vec![0]);
    }
}
