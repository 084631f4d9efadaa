mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use sdgfrac_core::assembly::{assemble_system, DiscreteSolution, Spaces};
use sdgfrac_core::basis::TriangleGeometry;
use sdgfrac_core::benchmarks::{case1, constant_solution, linear_patch};
use sdgfrac_core::estimator::{compute_estimator, data_oscillation, localize, true_error, EstimatorBreakdown};
use sdgfrac_core::mesh::{build_initial_mesh, refine, DomainSpec, PolygonalMesh, Rect};
use sdgfrac_core::problem::{constant, BoundaryCondition, BulkBoundary, ProblemSpec};
use sdgfrac_core::quadrature::{edge_rule, triangle_rule};
use sdgfrac_core::solver::solve;
use sdgfrac_core::spaces::SpaceConfig;
use sdgfrac_core::Point;

fn solved(m: &PolygonalMesh, spec: &ProblemSpec, k: usize) -> (Spaces, DiscreteSolution, EstimatorBreakdown) {
    let (sys, spaces) = assemble_system(m, spec, SpaceConfig::new(k).unwrap()).unwrap();
    let (sol, _) = solve(&sys, &spaces).unwrap();
    let est = compute_estimator(m, &spaces, spec, &sol).unwrap();
    (spaces, sol, est)
}

/// Initial mesh refined twice near `(0.5, 0.5)`, leaving hanging nodes.
fn graded(spec: &ProblemSpec) -> PolygonalMesh {
    let mut m = build_initial_mesh(spec.domain.clone(), spec.initial_h).unwrap();
    for _ in 0..2 {
        let near = m.triangles[m.locate(&Point::new(0.4, 0.4), None).unwrap()].element;
        m = refine(&m, &[near]).unwrap_or_else(|e| panic!("{e}"));
    }
    assert!(m.max_hanging_per_side().unwrap() >= 1);
    m
}

fn check_partition(est: &EstimatorBreakdown, m: &PolygonalMesh) {
    let total = est.squared_total();
    let local: f64 = localize(est, m).iter().sum();
    assert!((local - total).abs() <= 1e-12 * total.max(1e-300), "{local} vs {total}");
    assert!((est.eta - est.terms.iter().sum::<f64>()).abs() <= 1e-14 * est.eta.max(1.0));
    assert!(est.terms.iter().all(|t| *t >= 0.0 && t.is_finite()));
}

#[test]
fn representable_solutions_have_zero_estimate() {
    for k in 1..=3 {
        for (spec, exact) in [linear_patch(), constant_solution(-1.25)] {
            for m in [build_initial_mesh(spec.domain.clone(), 1.0).unwrap(), graded(&spec)] {
                let (spaces, sol, est) = solved(&m, &spec, k);
                assert!(est.eta <= 1e-9, "k={k} eta={:e} terms={:?}", est.eta, est.terms);
                let err = true_error(&m, &spaces, &spec, &sol, Some(&exact), est.eta).unwrap();
                assert!(err.sdg <= 1e-9);
                assert_eq!(err.ei, None);
            }
        }
    }
}

#[test]
fn estimate_scales_with_data() {
    let (spec, exact) = case1(0.1);
    let m = build_initial_mesh(spec.domain.clone(), 0.25).unwrap();
    let scaled = spec.scaled(-2.0);
    for k in 1..=2 {
        let (spaces, sol, a) = solved(&m, &spec, k);
        let (spaces2, sol2, b) = solved(&m, &scaled, k);
        for (ta, tb) in a.terms.iter().zip(&b.terms) {
            assert!((tb - 2.0 * ta).abs() <= 1e-9 * ta.max(1e-12), "{ta} {tb}");
        }
        for (pa, pb) in sol.p.iter().zip(&sol2.p) {
            assert!((pb + 2.0 * pa).abs() <= 1e-9 * pa.abs().max(1.0));
        }
        let ea = true_error(&m, &spaces, &spec, &sol, Some(&exact), a.eta).unwrap();
        let eb = true_error(&m, &spaces2, &scaled, &sol2, Some(&exact.scaled(-2.0)), b.eta).unwrap();
        assert!((eb.sdg - 2.0 * ea.sdg).abs() <= 1e-9 * ea.sdg);
    }
}

#[test]
fn error_norm_is_sum_of_parts() {
    let (spec, exact) = case1(0.1);
    let m = graded(&spec);
    let (spaces, sol, est) = solved(&m, &spec, 1);
    let e = true_error(&m, &spaces, &spec, &sol, Some(&exact), est.eta).unwrap();
    let v2: f64 = e.v_parts.iter().map(|p| p * p).sum();
    assert!((v2 - e.err_v * e.err_v).abs() <= 1e-12 * v2);
    let s2 = e.err_q.powi(2) + e.err_v.powi(2) + e.flux_jump.powi(2) + e.flux_average.powi(2);
    assert!((s2 - e.sdg * e.sdg).abs() <= 1e-12 * s2);
    assert_eq!(e.ei, Some(est.eta / e.sdg));
    assert!(true_error(&m, &spaces, &spec, &sol, None, est.eta).is_err());
}

#[test]
fn localization_partitions_the_estimate() {
    let (spec, _) = case1(0.01);
    for m in [build_initial_mesh(spec.domain.clone(), 0.25).unwrap(), graded(&spec)] {
        for k in 1..=2 {
            let (_, _, est) = solved(&m, &spec, k);
            check_partition(&est, &m);
            assert!(est
                .contributions
                .iter()
                .all(|c| c.term < 8 && !c.owners().is_empty() && c.owners().len() <= 4));
        }
    }
    let single = DomainSpec {
        outline: vec![Rect::new(0.0, 0.0, 1.0, 1.0)],
        fractures: vec![],
    };
    let mut s = all_neumann(&spec);
    s.domain = single.clone();
    s.tips.clear();
    s.fracture_sources.clear();
    s.boundary = BulkBoundary::uniform(BoundaryCondition::Dirichlet(constant(0.0)));
    s.source = constant(1.0);
    let m = build_initial_mesh(single, 1.0).unwrap();
    let (_, _, est) = solved(&m, &s, 1);
    assert!(est.eta > 0.0);
    assert!((localize(&est, &m)[0] - est.squared_total()).abs() <= 1e-12 * est.squared_total());
}

#[test]
fn mirrored_problem_has_equal_indicators() {
    let m = two_squares(false);
    let mut spec = all_neumann(&on_mesh(&case1(0.1).0, &m));
    spec.tips.clear();
    spec.fracture_sources.clear();
    spec.boundary = BulkBoundary::uniform(BoundaryCondition::Dirichlet(constant(0.0)));
    spec.source = constant(1.0);
    for k in 1..=2 {
        let (_, _, est) = solved(&m, &spec, k);
        let ind = localize(&est, &m);
        assert_eq!(ind.len(), 2);
        assert!((ind[0] - ind[1]).abs() <= 1e-12 * ind[0], "{ind:?}");
    }
}

#[test]
fn fracture_residual_on_single_edge() {
    let (spec, _) = case1(0.1);
    let m = build_initial_mesh(spec.domain.clone(), 1.0).unwrap();
    assert_eq!(m.fractures[0].edges.len(), 1);
    let (spaces, sol, est) = solved(&m, &spec, 1);
    let e = &m.edges[m.fractures[0].edges[0]];
    let [Some(t0), Some(t1)] = e.triangles else { panic!() };
    let field = sol.bulk(&m, &spaces);
    let (a, b) = (m.vertices[e.vertices[0]], m.vertices[e.vertices[1]]);
    let source = 0.01 * (spec.fracture_sources[0])(&a);
    let (sp, sw) = edge_rule(12);
    let mut t5 = 0.0;
    for (s, w) in sp.iter().zip(&sw) {
        let x = a + (b - a) * *s;
        let u0 = field.flux(t0, field.locate_in(t0, &x));
        let u1 = field.flux(t1, field.locate_in(t1, &x));
        t5 += w * e.length * (source + (u0 - u1).dot(&e.normal)).powi(2);
    }
    t5 *= e.length * e.length;
    let got = est.fracture_edges[0][0];
    assert!((got - t5).abs() <= 1e-12 * t5, "{got} vs {t5}");
    assert!((est.terms[4] - got.sqrt()).abs() <= 1e-12 * got.sqrt());
}

fn sine_spec(m: &PolygonalMesh) -> ProblemSpec {
    let mut s = all_neumann(&on_mesh(&case1(0.1).0, m));
    s.source = std::sync::Arc::new(|x: &Point, _: &Point| (std::f64::consts::PI * x.x).sin());
    s
}

/// `sum h^2 ||f - P1 f||^2` with the projection onto `1, x, y` computed by a
/// high-order rule.
fn reference_oscillation(m: &PolygonalMesh, f: impl Fn(&Point) -> f64) -> f64 {
    let (pts, wts) = triangle_rule(30);
    let mut total = 0.0;
    for tri in &m.triangles {
        let g = &tri.geometry;
        let xs: Vec<Point> = pts
            .iter()
            .map(|r| g.point(TriangleGeometry::reference_to_barycentric(*r)))
            .collect();
        let ws: Vec<f64> = wts.iter().map(|w| w * 2.0 * g.area).collect();
        let phi = |x: &Point| [1.0, x.x, x.y];
        let mut a = DMatrix::<f64>::zeros(3, 3);
        let mut r = DVector::<f64>::zeros(3);
        for (x, w) in xs.iter().zip(&ws) {
            let p = phi(x);
            for i in 0..3 {
                r[i] += w * f(x) * p[i];
                for j in 0..3 {
                    a[(i, j)] += w * p[i] * p[j];
                }
            }
        }
        let c = a.lu().solve(&r).unwrap();
        let err: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(x, w)| {
                let p = phi(x);
                w * (f(x) - (c[0] * p[0] + c[1] * p[1] + c[2] * p[2])).powi(2)
            })
            .sum();
        total += g.diameter * g.diameter * err;
    }
    total.sqrt()
}

#[test]
fn oscillation_examples() {
    let single = DomainSpec {
        outline: vec![Rect::new(0.0, 0.0, 1.0, 1.0)],
        fractures: vec![],
    };
    let m = build_initial_mesh(single, 1.0).unwrap();
    let mut spec = sine_spec(&m);
    spec.tips.clear();
    spec.fracture_sources.clear();
    let reference = reference_oscillation(&m, |x| (std::f64::consts::PI * x.x).sin());
    let osc = data_oscillation(&m, &spec, 1);
    assert!((osc - reference).abs() <= 1e-8, "{osc} vs {reference}");

    let m = two_squares(true);
    let mut spec = all_neumann(&on_mesh(&case1(0.1).0, &m));
    spec.source = std::sync::Arc::new(|x: &Point, _: &Point| 1.0 + x.x - 2.0 * x.y);
    spec.fracture_sources = vec![std::sync::Arc::new(|x: &Point| 3.0 * x.y)];
    assert!(data_oscillation(&m, &spec, 1) <= 1e-12);
    spec.source = std::sync::Arc::new(|x: &Point, _: &Point| x.x * x.y + x.y * x.y);
    assert!(data_oscillation(&m, &spec, 2) <= 1e-12);
    assert!(data_oscillation(&m, &spec, 1) > 1e-3);

    let mut m = two_squares(true);
    let spec = sine_spec(&m);
    let mut last = data_oscillation(&m, &spec, 1);
    for _ in 0..3 {
        let all: Vec<usize> = (0..m.n_elements()).collect();
        m = refine(&m, &all).unwrap();
        let osc = data_oscillation(&m, &spec, 1);
        assert!(osc <= 0.5 * last, "{osc} vs {last}");
        last = osc;
    }
}

#[test]
fn uniform_refinement_keeps_effectivity_bounded() {
    let (spec, exact) = case1(0.1);
    let mut m = build_initial_mesh(spec.domain.clone(), 0.25).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for level in 0..4 {
        let (spaces, sol, est) = solved(&m, &spec, 1);
        let err = true_error(&m, &spaces, &spec, &sol, Some(&exact), est.eta).unwrap();
        let ei = err.ei.unwrap();
        assert!((1.0..=5.0).contains(&ei), "level {level}: EI {ei}");
        if let Some((eta, sdg)) = prev {
            if level >= 2 {
                assert!(est.eta < eta && err.sdg < sdg);
            }
        }
        prev = Some((est.eta, err.sdg));
        let all: Vec<usize> = (0..m.n_elements()).collect();
        m = refine(&m, &all).unwrap();
    }
}
