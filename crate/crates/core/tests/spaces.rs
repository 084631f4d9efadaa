mod common;

use common::{noise, polynomial, test_meshes, two_squares, with_hanging_node};
use proptest::prelude::*;
use sdgfrac_core::assembly::{interpolate, Spaces};
use sdgfrac_core::benchmarks::constant_solution;
use sdgfrac_core::fields::BulkField;
use sdgfrac_core::mesh::{build_initial_mesh, DomainSpec, EdgeKind, Fracture, PolygonalMesh, Rect};
use sdgfrac_core::problem::TipCondition;
use sdgfrac_core::quadrature::edge_rule;
use sdgfrac_core::spaces::{build_s_h, build_v_h, build_w_h, jump_and_average, SpaceConfig};
use sdgfrac_core::{Error, Point};

fn cfg(k: usize) -> SpaceConfig {
    SpaceConfig::new(k).unwrap()
}

fn fracture_domain(h: f64, length: f64) -> PolygonalMesh {
    let d = DomainSpec {
        outline: vec![Rect::new(0.0, 0.0, 2.0, length)],
        fractures: vec![Fracture::uniform(
            vec![Point::new(1.0, 0.0), Point::new(1.0, length)],
            100.0,
            0.01,
        )],
    };
    build_initial_mesh(d, h).unwrap()
}

/// Points along an edge at Gauss nodes of the given degree.
fn edge_points(mesh: &PolygonalMesh, e: usize, degree: usize) -> Vec<Point> {
    let edge = &mesh.edges[e];
    let (a, b) = (mesh.vertices[edge.vertices[0]], mesh.vertices[edge.vertices[1]]);
    edge_rule(degree).0.iter().map(|&s| a + (b - a) * s).collect()
}

fn max_flux_jump(mesh: &PolygonalMesh, field: &BulkField, k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (e, edge) in mesh.edges_of(EdgeKind::Dual) {
        let [Some(t0), Some(t1)] = edge.triangles else {
            panic!("dual edge without two sides")
        };
        for x in edge_points(mesh, e, 2 * k + 2) {
            let u0 = field.flux(t0, field.locate_in(t0, &x));
            let u1 = field.flux(t1, field.locate_in(t1, &x));
            worst = worst.max(((u0 - u1).dot(&edge.normal)).abs());
        }
    }
    worst
}

fn max_trace_jump(mesh: &PolygonalMesh, field: &BulkField, k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (e, edge) in mesh.edges_of(EdgeKind::Interior) {
        let [Some(t0), Some(t1)] = edge.triangles else {
            panic!("interior edge without two sides")
        };
        for x in edge_points(mesh, e, 2 * k + 2) {
            let p0 = field.pressure(t0, field.locate_in(t0, &x));
            let p1 = field.pressure(t1, field.locate_in(t1, &x));
            worst = worst.max((p0 - p1).abs());
        }
    }
    worst
}

#[test]
fn pressure_space_dimensions() {
    assert_eq!(build_s_h(&two_squares(false), cfg(1), None).n_free(), 22);
    assert_eq!(build_s_h(&two_squares(true), cfg(1), None).n_free(), 24);
}

#[test]
fn flux_space_dimensions() {
    assert_eq!(build_v_h(&two_squares(true), cfg(1)).n_free(), 32);
    let single = DomainSpec {
        outline: vec![Rect::new(0.0, 0.0, 1.0, 1.0)],
        fractures: vec![],
    };
    let m = build_initial_mesh(single, 1.0).unwrap();
    assert_eq!(build_v_h(&m, cfg(1)).n_free(), 16);
    // Dimension formula: 2 sum dim P^k minus (k + 1) per dual edge.
    for k in 1..=3 {
        for m in test_meshes() {
            let nloc = (k + 1) * (k + 2) / 2;
            let expected = 2 * nloc * m.triangles.len() - (k + 1) * m.count(EdgeKind::Dual);
            assert_eq!(build_v_h(&m, cfg(k)).n_free(), expected);
        }
    }
}

#[test]
fn fracture_space_dimensions() {
    let clamped = [[TipCondition::Dirichlet(0.0), TipCondition::Dirichlet(1.0)]];
    let m = fracture_domain(1.0, 2.0);
    assert_eq!(m.fractures[0].edges.len(), 2);
    assert_eq!(build_w_h(&m, cfg(1), &clamped).n_free(), 1);
    let m = fracture_domain(1.0, 1.0);
    assert_eq!(m.fractures[0].edges.len(), 1);
    assert_eq!(build_w_h(&m, cfg(2), &clamped).n_free(), 1);
    let half = [[TipCondition::Neumann, TipCondition::Dirichlet(0.0)]];
    for h in [0.5, 0.25, 0.125] {
        let m = fracture_domain(h, 1.0);
        let n = m.fractures[0].edges.len();
        assert_eq!(build_w_h(&m, cfg(1), &half).n_free(), n);
    }
}

#[test]
fn jump_and_average_examples() {
    let m = two_squares(true);
    let (fe, _) = m.edges_of(EdgeKind::Fracture).next().unwrap();
    assert_eq!(jump_and_average(&m, fe, 3.0, Some(1.0)).unwrap(), (2.0, 2.0));
    assert_eq!(jump_and_average(&m, fe, 1.5, Some(1.5)).unwrap(), (0.0, 1.5));
    let (be, _) = m.edges_of(EdgeKind::Boundary).next().unwrap();
    assert_eq!(jump_and_average(&m, be, 5.0, None).unwrap().0, 5.0);
    assert!(matches!(
        jump_and_average(&m, fe, 1.0, None),
        Err(Error::OrientationUnset(_))
    ));
}

#[test]
fn constants_are_represented() {
    for m in test_meshes() {
        for k in 1..=3 {
            let s = build_s_h(&m, cfg(k), None);
            let ones = s.prolongation.apply(&vec![1.0; s.n_free()]);
            let u = vec![0.0; 2 * ones.len()];
            let field = BulkField {
                mesh: &m,
                basis: &s.basis,
                p: &ones,
                u: &u,
            };
            let (pts, _) = sdgfrac_core::quadrature::triangle_rule(2 * k + 2);
            for t in 0..m.triangles.len() {
                for r in &pts {
                    let lam = sdgfrac_core::basis::TriangleGeometry::reference_to_barycentric(*r);
                    assert!((field.pressure(t, lam) - 1.0).abs() < 1e-13);
                }
            }
        }
    }
}

#[test]
fn polynomials_are_reproduced() {
    let (spec, _) = constant_solution(0.0);
    for k in 1..=3 {
        let exact = polynomial(k);
        for m in [two_squares(true), with_hanging_node(true)] {
            let mut spec = spec.clone();
            spec.domain = m.domain.clone();
            spec.tips = vec![[TipCondition::Neumann; 2]];
            spec.boundary = sdgfrac_core::problem::BulkBoundary::uniform(
                sdgfrac_core::problem::BoundaryCondition::Neumann(sdgfrac_core::problem::constant(0.0)),
            );
            let spaces = Spaces::build(&m, cfg(k), &spec);
            let sol = interpolate(&m, &spaces, &exact).unwrap();
            let field = sol.bulk(&m, &spaces);
            let mut worst: f64 = 0.0;
            for (t, tri) in m.triangles.iter().enumerate() {
                let probe = tri.geometry.centroid();
                for lam in [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [1.0, 0.0, 0.0]] {
                    let x = tri.geometry.point(lam);
                    worst = worst.max((field.pressure(t, lam) - (exact.pressure)(&x, &probe)).abs());
                    worst = worst.max((field.flux(t, lam) - (exact.flux)(&x, &probe)).norm());
                }
            }
            assert!(worst < 1e-12, "k={k} residual {worst:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_members_satisfy_constraints(seed in any::<u64>(), k in 1usize..=3, which in 0usize..5) {
        let m = &test_meshes()[which];
        let s = build_s_h(m, cfg(k), None);
        let v = build_v_h(m, cfg(k));
        let p = s.prolongation.apply(&noise(seed, s.n_free()));
        let u = v.prolongation.apply(&noise(seed ^ 0x5eed, v.n_free()));
        let field = BulkField { mesh: m, basis: &s.basis, p: &p, u: &u };
        let scale = u.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        prop_assert!(max_flux_jump(m, &field, k) <= 1e-12 * scale);
        prop_assert!(max_trace_jump(m, &field, k) <= 1e-12);
    }
}
