#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use sdgfrac_core::basis::TriangleGeometry;
use sdgfrac_core::fields::BulkField;
use sdgfrac_core::mesh::{build_initial_mesh, refine, DomainSpec, Fracture, PolygonalMesh, Rect};
use sdgfrac_core::problem::{
    constant, line_constant, BoundaryCondition, BulkBoundary, ExactSolution, ProblemSpec, TipCondition,
};
use sdgfrac_core::quadrature::{edge_rule, triangle_rule};
use sdgfrac_core::{Point, Vector};
use sprs::CsMat;

pub fn strip(fracture: bool) -> DomainSpec {
    DomainSpec {
        outline: vec![Rect::new(0.0, 0.0, 2.0, 1.0)],
        fractures: if fracture {
            vec![Fracture::uniform(
                vec![Point::new(1.0, 0.0), Point::new(1.0, 1.0)],
                100.0,
                0.01,
            )]
        } else {
            vec![]
        },
    }
}

/// Two unit squares side by side.
pub fn two_squares(fracture: bool) -> PolygonalMesh {
    build_initial_mesh(strip(fracture), 1.0).unwrap()
}

/// Two unit squares with the left one split: the right square becomes a
/// pentagon with a hanging node.
pub fn with_hanging_node(fracture: bool) -> PolygonalMesh {
    let m = two_squares(fracture);
    let left = (0..m.n_elements()).find(|&e| m.elements[e].center.x < 1.0).unwrap();
    refine(&m, &[left]).unwrap()
}

/// Meshes used for property checks.
pub fn test_meshes() -> Vec<PolygonalMesh> {
    let m = with_hanging_node(true);
    let corner = (0..m.n_elements())
        .find(|&e| m.elements[e].center.x < 0.5 && m.elements[e].center.y < 0.5)
        .unwrap();
    let deep = refine(&m, &[corner]).unwrap();
    vec![two_squares(false), two_squares(true), with_hanging_node(false), m, deep]
}

/// Global polynomial fields of degree `k`, identical on both sides.
pub fn polynomial(k: usize) -> ExactSolution {
    let mixed = if k >= 2 { 1.0 } else { 0.0 };
    let k = k as i32;
    ExactSolution {
        pressure: Arc::new(move |x: &Point, _: &Point| 0.3 + x.x.powi(k) - 0.7 * x.y.powi(k) + mixed * x.x * x.y),
        flux: Arc::new(move |x: &Point, _: &Point| Vector::new(1.0 - x.y.powi(k) + 0.5 * x.x, 2.0 * x.x.powi(k) - x.y)),
        fracture_pressure: vec![Arc::new(move |x: &Point| 1.0 + x.y.powi(k))],
        fracture_gradient: vec![Arc::new(move |x: &Point| Vector::new(0.0, k as f64 * x.y.powi(k - 1)))],
    }
}

/// Deterministic pseudo-random numbers in [-1, 1].
pub fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

/// Largest entrywise difference `|a - b|`.
pub fn max_diff(a: &CsMat<f64>, b: &CsMat<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut d: HashMap<(usize, usize), f64> = HashMap::new();
    for (v, (i, j)) in a.iter() {
        *d.entry((i, j)).or_default() += v;
    }
    for (v, (i, j)) in b.iter() {
        *d.entry((i, j)).or_default() -= v;
    }
    d.values().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn transpose(a: &CsMat<f64>) -> CsMat<f64> {
    a.transpose_view().to_csr()
}

pub fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    for (v, (i, j)) in a.iter() {
        y[i] += v * x[j];
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Same problem with homogeneous Neumann data everywhere and no fracture
/// source.
pub fn all_neumann(spec: &ProblemSpec) -> ProblemSpec {
    let mut s = spec.clone();
    s.boundary = BulkBoundary::uniform(BoundaryCondition::Neumann(constant(0.0)));
    s.tips = vec![[TipCondition::Neumann; 2]; s.domain.fractures.len()];
    s.fracture_sources = vec![line_constant(0.0); s.domain.fractures.len()];
    s
}

/// The problem moved onto the domain of `mesh`.
pub fn on_mesh(spec: &ProblemSpec, mesh: &PolygonalMesh) -> ProblemSpec {
    let mut s = spec.clone();
    s.domain = mesh.domain.clone();
    let n = s.domain.fractures.len();
    s.tips.resize(n, [TipCondition::Neumann; 2]);
    s.fracture_sources.resize(n, line_constant(0.0));
    s
}

/// Outward flux through the dual edges bounding the two triangles on `e`.
pub fn dual_volume_balance(m: &PolygonalMesh, field: &BulkField, spec: &ProblemSpec, e: usize, k: usize) -> (f64, f64) {
    let (sp, sw) = edge_rule(2 * k + 2);
    let (tp, tw) = triangle_rule(2 * k + 2);
    let mut flux = 0.0;
    let mut source = 0.0;
    for t in m.edges[e].triangles.iter().flatten().copied() {
        let tri = &m.triangles[t];
        let v = tri.vertices.map(|i| m.vertices[i]);
        for (a, b) in [(v[1], v[2]), (v[2], v[0])] {
            let d = b - a;
            let n = Vector::new(d.y, -d.x) / d.norm();
            for (s, w) in sp.iter().zip(&sw) {
                let x = a + d * *s;
                flux += w * d.norm() * field.flux(t, field.locate_in(t, &x)).dot(&n);
            }
        }
        let probe = tri.geometry.centroid();
        for (r, w) in tp.iter().zip(&tw) {
            let x = tri.geometry.point(TriangleGeometry::reference_to_barycentric(*r));
            source += w * 2.0 * tri.geometry.area * (spec.source)(&x, &probe);
        }
    }
    (flux, source)
}
