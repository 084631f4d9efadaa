//! Fracture-aligned polygonal meshes and their simplicial sub-meshes.
//!
//! Every primal polygon is split into triangles `(v_i, v_{i+1}, c)` where `c`
//! is the vertex mean of the polygon. The edges of the sub-mesh fall into
//! four families: outer boundary, interior primal, fracture and dual
//! (centre-to-vertex) edges.

mod domain;
mod grid;
mod regularity;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::basis::TriangleGeometry;
use crate::error::{Error, Result};
use crate::{Point, Vector};

pub use domain::{DomainSpec, Fracture, Rect, SegmentPermeability};
pub use grid::{build_initial_mesh, refine, CellKey};
pub use regularity::{check_regularity, check_regularity_with, RegularityFloors, RegularityReport};

pub(crate) use domain::on_segment;
use grid::GridTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// Primal edge on the outer boundary.
    Boundary,
    /// Primal edge shared by two elements, not on a fracture.
    Interior,
    /// Primal edge lying on a fracture.
    Fracture,
    /// Edge joining an element centre to one of its vertices.
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractureEdgeRef {
    pub fracture: usize,
    pub segment: usize,
    /// Position in the fracture's ordered edge list.
    pub index: usize,
}

/// A mesh edge. The unit normal points from side 0 to side 1; on boundary
/// edges it is the outward normal and side 1 is empty. On fracture edges it
/// equals the fracture normal, so side 0 is the side-1 subdomain.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub kind: EdgeKind,
    pub length: f64,
    pub normal: Vector,
    pub elements: [Option<usize>; 2],
    pub triangles: [Option<usize>; 2],
    pub fracture: Option<FractureEdgeRef>,
}

impl Edge {
    pub fn midpoint(&self, mesh: &PolygonalMesh) -> Point {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        Point::from((a.coords + b.coords) * 0.5)
    }

    pub fn is_primal(&self) -> bool {
        self.kind != EdgeKind::Dual
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimalElement {
    /// Counter-clockwise vertex cycle, hanging nodes included.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<usize>,
    pub center: Point,
    pub center_vertex: usize,
    /// `dual_edges[i]` joins the centre and `vertices[i]`.
    pub dual_edges: Vec<usize>,
    /// `triangles[i]` is `(vertices[i], vertices[i + 1], centre)`.
    pub triangles: Vec<usize>,
    pub subdomain: usize,
    pub area: f64,
    pub diameter: f64,
    pub cell: Option<CellKey>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubTriangle {
    pub vertices: [usize; 3],
    pub element: usize,
    pub local: usize,
    pub primal_edge: usize,
    /// Dual edges through `vertices[0]` and `vertices[1]`.
    pub dual_edges: [usize; 2],
    pub geometry: TriangleGeometry,
}

/// One-dimensional mesh of a fracture, ordered along its polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct FractureMesh {
    pub fracture: usize,
    pub edges: Vec<usize>,
    /// `nodes[j]`, `nodes[j + 1]` are the end vertices of `edges[j]`.
    pub nodes: Vec<usize>,
    pub segments: Vec<usize>,
}

impl FractureMesh {
    pub fn interior_nodes(&self) -> &[usize] {
        &self.nodes[1..self.nodes.len() - 1]
    }
}

#[derive(Clone, Debug)]
pub struct PolygonalMesh {
    pub domain: DomainSpec,
    pub vertices: Vec<Point>,
    pub n_primal_vertices: usize,
    pub elements: Vec<PrimalElement>,
    pub edges: Vec<Edge>,
    pub n_primal_edges: usize,
    pub triangles: Vec<SubTriangle>,
    pub fractures: Vec<FractureMesh>,
    pub n_subdomains: usize,
    pub(crate) tree: Option<GridTree>,
}

impl PolygonalMesh {
    /// Builds and subdivides a mesh from polygons given as vertex cycles.
    pub fn from_polygons(domain: DomainSpec, vertices: Vec<Point>, polygons: Vec<Vec<usize>>) -> Result<Self> {
        let mesh = build_primal(domain, vertices, polygons)?;
        subdivide(mesh)
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.kind == kind)
    }

    pub fn is_refinable(&self) -> bool {
        self.tree.is_some()
    }

    pub fn polygons(&self) -> Vec<Vec<usize>> {
        self.elements.iter().map(|e| e.vertices.clone()).collect()
    }

    pub fn h_max(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
    }

    /// Triangle containing `p`; among several candidates the one whose
    /// centroid is closest to `probe` wins.
    pub fn locate(&self, p: &Point, probe: Option<&Point>) -> Option<usize> {
        let tol = 1e-12;
        let mut best: Option<(f64, usize)> = None;
        for (t, tri) in self.triangles.iter().enumerate() {
            let lam = tri.geometry.barycentric(p);
            if lam.iter().all(|&l| l >= -tol) {
                let d = probe.map_or(0.0, |q| (tri.geometry.centroid() - q).norm());
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, t));
                }
            }
        }
        best.map(|(_, t)| t)
    }

    /// Largest number of hanging nodes on any side of a grid cell.
    pub fn max_hanging_per_side(&self) -> Option<usize> {
        self.tree.as_ref().map(|t| t.max_hanging_per_side())
    }

    /// Audits the structural invariants of the subdivided mesh.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMesh(m));
        let tol = self.domain.tolerance();
        for (i, e) in self.edges.iter().enumerate() {
            if !(e.length > 0.0) {
                return bad(format!("edge {i} has zero length"));
            }
            if (e.normal.norm() - 1.0).abs() > 1e-12 {
                return bad(format!("edge {i} normal is not a unit vector"));
            }
            let two_sided = e.kind != EdgeKind::Boundary;
            if e.triangles[0].is_none() || e.triangles[1].is_some() != two_sided {
                return bad(format!("edge {i} has wrong triangle incidence"));
            }
            if let (Some(t0), Some(t1)) = (e.triangles[0], e.triangles[1]) {
                let m = e.midpoint(self);
                let c0 = self.triangles[t0].geometry.centroid();
                let c1 = self.triangles[t1].geometry.centroid();
                if (c0 - m).dot(&e.normal) >= 0.0 || (c1 - m).dot(&e.normal) <= 0.0 {
                    return bad(format!("edge {i} normal is not oriented from side 0 to side 1"));
                }
            }
            if (e.kind == EdgeKind::Fracture) != e.fracture.is_some() {
                return bad(format!("edge {i} fracture reference mismatch"));
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let primal = &self.edges[tri.primal_edge];
            if !primal.is_primal() || tri.dual_edges.iter().any(|&d| self.edges[d].kind != EdgeKind::Dual) {
                return bad(format!("triangle {t} does not have one primal and two dual edges"));
            }
            if !(tri.geometry.area > 0.0) {
                return bad(format!("triangle {t} is degenerate"));
            }
        }
        for (f, fm) in self.fractures.iter().enumerate() {
            let fr = &self.domain.fractures[f];
            let first = self.vertices[fm.nodes[0]];
            let last = self.vertices[*fm.nodes.last().unwrap()];
            if (first - fr.points[0]).norm() > 1e-12 || (last - fr.points[fr.points.len() - 1]).norm() > 1e-12 {
                return bad(format!("fracture {f} endpoints are not covered"));
            }
            for (j, &ei) in fm.edges.iter().enumerate() {
                let e = &self.edges[ei];
                if e.vertices != [fm.nodes[j], fm.nodes[j + 1]] {
                    return bad(format!("fracture {f} edge {j} is not contiguous"));
                }
                let (a, b) = fr.segment(fm.segments[j]);
                for v in e.vertices {
                    if on_segment(self.vertices[v], a, b, tol).is_none() {
                        return bad(format!("fracture {f} edge {j} leaves its segment"));
                    }
                }
                let [t0, t1] = e.triangles;
                if self.triangles[t0.unwrap()].element == self.triangles[t1.unwrap()].element {
                    return bad(format!("fracture {f} edge {j} cuts an element"));
                }
            }
        }
        Ok(())
    }
}

fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

fn diameter(pts: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Classifies the primal edges of a polygon soup; no sub-mesh yet.
pub(crate) fn build_primal(
    domain: DomainSpec,
    vertices: Vec<Point>,
    mut polygons: Vec<Vec<usize>>,
) -> Result<PolygonalMesh> {
    domain.validate()?;
    if polygons.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let tol = domain.tolerance();
    let mut elements = Vec::with_capacity(polygons.len());
    let mut edges: Vec<Edge> = Vec::new();
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    for (ei, poly) in polygons.iter_mut().enumerate() {
        if poly.len() < 3 || poly.iter().any(|&v| v >= vertices.len()) {
            return Err(Error::InvalidMesh(format!("polygon {ei} is malformed")));
        }
        let pts: Vec<Point> = poly.iter().map(|&v| vertices[v]).collect();
        let area = signed_area(&pts);
        if area.abs() <= tol * tol {
            return Err(Error::InvalidMesh(format!("polygon {ei} has zero area")));
        }
        if area < 0.0 {
            poly.reverse();
        }
        let pts: Vec<Point> = poly.iter().map(|&v| vertices[v]).collect();
        let n = poly.len();
        let center = Point::from(pts.iter().map(|p| p.coords).sum::<Vector>() / n as f64);
        let mut local_edges = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let key = (a.min(b), a.max(b));
            let id = match lookup.get(&key) {
                Some(&id) => {
                    let e: &mut Edge = &mut edges[id];
                    if e.elements[1].is_some() || e.vertices != [b, a] {
                        return Err(Error::InvalidMesh(format!("edge ({a}, {b}) is shared inconsistently")));
                    }
                    e.elements[1] = Some(ei);
                    id
                }
                None => {
                    let d = vertices[b] - vertices[a];
                    let length = d.norm();
                    if length <= tol {
                        return Err(Error::InvalidMesh(format!("polygon {ei} has a degenerate edge")));
                    }
                    edges.push(Edge {
                        vertices: [a, b],
                        kind: EdgeKind::Boundary,
                        length,
                        normal: Vector::new(d.y, -d.x) / length,
                        elements: [Some(ei), None],
                        triangles: [None, None],
                        fracture: None,
                    });
                    lookup.insert(key, edges.len() - 1);
                    edges.len() - 1
                }
            };
            local_edges.push(id);
        }
        elements.push(PrimalElement {
            vertices: poly.clone(),
            edges: local_edges,
            center,
            center_vertex: usize::MAX,
            dual_edges: Vec::new(),
            triangles: Vec::new(),
            subdomain: 0,
            area: area.abs(),
            diameter: diameter(&pts),
            cell: None,
        });
    }

    // Fracture classification and per-segment coverage.
    let mut per_segment: HashMap<(usize, usize), Vec<(f64, f64, usize)>> = HashMap::new();
    for (id, e) in edges.iter_mut().enumerate() {
        let (pa, pb) = (vertices[e.vertices[0]], vertices[e.vertices[1]]);
        let mut hit = None;
        'search: for (f, fr) in domain.fractures.iter().enumerate() {
            for s in 0..fr.num_segments() {
                let (a, b) = fr.segment(s);
                let len = (b - a).norm();
                let line = |p: Point| {
                    let ab = (b - a) / len;
                    ((p - a).dot(&ab), (ab.x * (p - a).y - ab.y * (p - a).x).abs())
                };
                let ((ta, da), (tb, db)) = (line(pa), line(pb));
                if da > tol || db > tol {
                    continue;
                }
                let (lo, hi) = (ta.min(tb), ta.max(tb));
                if hi <= tol || lo >= len - tol {
                    continue;
                }
                if lo < -tol || hi > len + tol {
                    return Err(Error::FractureNotAligned {
                        fracture: f,
                        segment: s,
                    });
                }
                hit = Some((f, s, ta, tb));
                break 'search;
            }
        }
        if let Some((f, s, ta, tb)) = hit {
            if e.elements[1].is_none() {
                return Err(Error::InvalidMesh(format!("fracture {f} lies on the outer boundary")));
            }
            per_segment.entry((f, s)).or_default().push((ta, tb, id));
        } else if e.elements[1].is_some() {
            e.kind = EdgeKind::Interior;
        }
    }

    let mut fractures = Vec::with_capacity(domain.fractures.len());
    for (f, fr) in domain.fractures.iter().enumerate() {
        let mut fm = FractureMesh {
            fracture: f,
            edges: Vec::new(),
            nodes: Vec::new(),
            segments: Vec::new(),
        };
        for s in 0..fr.num_segments() {
            let (a, b) = fr.segment(s);
            let len = (b - a).norm();
            let mut list = per_segment.remove(&(f, s)).unwrap_or_default();
            list.sort_by(|x, y| x.0.min(x.1).total_cmp(&y.0.min(y.1)));
            let mut pos = 0.0;
            for &(ta, tb, id) in &list {
                if (ta.min(tb) - pos).abs() > tol {
                    return Err(Error::FractureNotAligned {
                        fracture: f,
                        segment: s,
                    });
                }
                pos = ta.max(tb);
                let e = &mut edges[id];
                if ta > tb {
                    e.vertices.swap(0, 1);
                }
                if fm.nodes.is_empty() {
                    fm.nodes.push(e.vertices[0]);
                } else if *fm.nodes.last().unwrap() != e.vertices[0] {
                    return Err(Error::FractureNotAligned {
                        fracture: f,
                        segment: s,
                    });
                }
                fm.nodes.push(e.vertices[1]);
                e.kind = EdgeKind::Fracture;
                e.normal = fr.normal(s);
                e.fracture = Some(FractureEdgeRef {
                    fracture: f,
                    segment: s,
                    index: fm.edges.len(),
                });
                let mid = Point::from((vertices[e.vertices[0]].coords + vertices[e.vertices[1]].coords) * 0.5);
                let c0 = elements[e.elements[0].unwrap()].center;
                if (c0 - mid).dot(&e.normal) > 0.0 {
                    e.elements.swap(0, 1);
                }
                fm.edges.push(id);
                fm.segments.push(s);
            }
            if list.is_empty() || (pos - len).abs() > tol {
                return Err(Error::FractureNotAligned {
                    fracture: f,
                    segment: s,
                });
            }
        }
        fractures.push(fm);
    }

    // Subdomains: connected components across interior primal edges.
    let mut parent: Vec<usize> = (0..elements.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for e in &edges {
        if e.kind == EdgeKind::Interior {
            let (a, b) = (
                find(&mut parent, e.elements[0].unwrap()),
                find(&mut parent, e.elements[1].unwrap()),
            );
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = HashMap::new();
    for i in 0..elements.len() {
        let r = find(&mut parent, i);
        let next = label.len();
        elements[i].subdomain = *label.entry(r).or_insert(next);
    }

    let n_primal_vertices = vertices.len();
    let n_primal_edges = edges.len();
    Ok(PolygonalMesh {
        domain,
        vertices,
        n_primal_vertices,
        elements,
        edges,
        n_primal_edges,
        triangles: Vec::new(),
        fractures,
        n_subdomains: label.len(),
        tree: None,
    })
}

/// Splits every primal polygon into triangles around its vertex mean and
/// creates the dual edges.
pub fn subdivide(mut mesh: PolygonalMesh) -> Result<PolygonalMesh> {
    mesh.vertices.truncate(mesh.n_primal_vertices);
    mesh.edges.truncate(mesh.n_primal_edges);
    mesh.triangles.clear();
    let scale = mesh.domain.diameter();
    for e in mesh.edges.iter_mut() {
        e.triangles = [None, None];
    }
    for ei in 0..mesh.elements.len() {
        let el = &mesh.elements[ei];
        let n = el.vertices.len();
        let c = el.center;
        let cv = mesh.vertices.len();
        mesh.vertices.push(c);
        let first_dual = mesh.edges.len();
        let first_tri = mesh.triangles.len();
        let mut tris = Vec::with_capacity(n);
        for i in 0..n {
            let a = mesh.vertices[el.vertices[i]];
            let b = mesh.vertices[el.vertices[(i + 1) % n]];
            let geometry = TriangleGeometry::new([a, b, c]);
            let orient = (b - a).x * (c - a).y - (b - a).y * (c - a).x;
            if orient <= 1e-12 * scale * scale {
                return Err(Error::NotStarShaped(ei));
            }
            tris.push(SubTriangle {
                vertices: [el.vertices[i], el.vertices[(i + 1) % n], cv],
                element: ei,
                local: i,
                primal_edge: el.edges[i],
                dual_edges: [first_dual + i, first_dual + (i + 1) % n],
                geometry,
            });
        }
        let mut duals = Vec::with_capacity(n);
        for i in 0..n {
            let v = mesh.vertices[el.vertices[i]];
            let d = v - c;
            let length = d.norm();
            let mut normal = Vector::new(d.y, -d.x) / length;
            let prev = &tris[(i + n - 1) % n];
            if (prev.geometry.centroid() - c).dot(&normal) > 0.0 {
                normal = -normal;
            }
            duals.push(Edge {
                vertices: [cv, el.vertices[i]],
                kind: EdgeKind::Dual,
                length,
                normal,
                elements: [Some(ei), Some(ei)],
                triangles: [Some(first_tri + (i + n - 1) % n), Some(first_tri + i)],
                fracture: None,
            });
        }
        let edges_of_el = el.edges.clone();
        mesh.edges.extend(duals);
        mesh.triangles.extend(tris);
        for (i, &pe) in edges_of_el.iter().enumerate() {
            let e = &mut mesh.edges[pe];
            let side = if e.elements[0] == Some(ei) { 0 } else { 1 };
            e.triangles[side] = Some(first_tri + i);
        }
        let el = &mut mesh.elements[ei];
        el.center_vertex = cv;
        el.dual_edges = (first_dual..first_dual + n).collect();
        el.triangles = (first_tri..first_tri + n).collect();
    }
    Ok(mesh)
}
