mod common;

use std::sync::Arc;

use common::*;
use sdgfrac_core::assembly::{
    assemble_bh, assemble_bh_star, assemble_fracture_stiffness, assemble_interface, assemble_mass, assemble_rhs,
    assemble_system, assemble_system_with, interpolate, Block, Spaces,
};
use sdgfrac_core::benchmarks::{case1, constant_solution, linear_patch};
use sdgfrac_core::mesh::{build_initial_mesh, DomainSpec, EdgeKind, Fracture, PolygonalMesh, Rect};
use sdgfrac_core::problem::{constant, isotropic, ExactSolution, ProblemSpec, TipCondition};
use sdgfrac_core::solver::solve;
use sdgfrac_core::spaces::SpaceConfig;
use sdgfrac_core::{Point, Vector};

fn cfg(k: usize) -> SpaceConfig {
    SpaceConfig::new(k).unwrap()
}

fn base() -> ProblemSpec {
    case1(0.1).0
}

/// Pressure and flux given piecewise by closures of `(x, probe)`.
fn fields(
    p: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    u: impl Fn(&Point, &Point) -> Vector + Send + Sync + 'static,
) -> ExactSolution {
    ExactSolution {
        pressure: Arc::new(p),
        flux: Arc::new(u),
        fracture_pressure: vec![Arc::new(|_: &Point| 0.0)],
        fracture_gradient: vec![Arc::new(|_: &Point| Vector::zeros())],
    }
}

fn unit_square() -> PolygonalMesh {
    let d = DomainSpec {
        outline: vec![Rect::new(0.0, 0.0, 1.0, 1.0)],
        fractures: vec![],
    };
    build_initial_mesh(d, 1.0).unwrap()
}

fn vertical_fracture(h: f64, length: f64, kappa: f64) -> (PolygonalMesh, ProblemSpec) {
    let d = DomainSpec {
        outline: vec![Rect::new(0.0, 0.0, 2.0, length)],
        fractures: vec![Fracture::uniform(
            vec![Point::new(1.0, 0.0), Point::new(1.0, length)],
            kappa,
            0.01,
        )],
    };
    let m = build_initial_mesh(d, h).unwrap();
    let mut spec = on_mesh(&base(), &m);
    spec.tips = vec![[TipCondition::Dirichlet(0.0), TipCondition::Dirichlet(0.0)]];
    (m, spec)
}

#[test]
fn mass_scales_with_inverse_permeability() {
    for m in test_meshes() {
        let mut spec = on_mesh(&base(), &m);
        let spaces = Spaces::build(&m, cfg(2), &spec);
        let m1 = assemble_mass(&m, &spaces, &spec).unwrap();
        spec.permeability = isotropic(4.0);
        let m4 = assemble_mass(&m, &spaces, &spec).unwrap();
        assert!(max_diff(&m1.map(|v| v / 4.0), &m4) < 1e-14);
        assert!(max_diff(&m1, &transpose(&m1)) < 1e-14);
        let x = noise(3, spaces.v.n_free());
        assert!(dot(&x, &matvec(&m1, &x)) > 0.0);
    }
}

#[test]
fn divergence_form_on_unit_square() {
    let m = unit_square();
    let spec = all_neumann(&on_mesh(&base(), &m));
    for k in 1..=2 {
        let spaces = Spaces::build(&m, cfg(k), &spec);
        let b = assemble_bh(&m, &spaces);
        let linear = interpolate(&m, &spaces, &fields(|x, _| x.x, |_, _| Vector::new(1.0, 0.0))).unwrap();
        assert!((dot(&linear.p, &matvec(&b, &linear.u)) - 1.0).abs() < 1e-12);
        let flat = interpolate(&m, &spaces, &fields(|_, _| 2.0, |_, _| Vector::new(0.3, -1.0))).unwrap();
        assert!(dot(&flat.p, &matvec(&b, &flat.u)).abs() < 1e-12);
    }
}

#[test]
fn gradient_form_is_adjoint_of_divergence_form() {
    for k in 1..=3 {
        for m in test_meshes() {
            let spec = on_mesh(&base(), &m);
            let spaces = Spaces::build(&m, cfg(k), &spec);
            let b = assemble_bh(&m, &spaces);
            let bs = assemble_bh_star(&m, &spaces);
            assert!(max_diff(&transpose(&b), &bs) < 1e-12, "k={k}");
        }
    }
}

#[test]
fn fracture_jump_pairs_with_normal_average() {
    for h in [1.0, 0.5] {
        let (m, spec) = vertical_fracture(h, 1.0, 100.0);
        let spec = all_neumann(&spec);
        let spaces = Spaces::build(&m, cfg(1), &spec);
        let bs = assemble_bh_star(&m, &spaces);
        // p = x on the left, 0 on the right: [p] = 1 on the fracture, zero
        // on the outer boundary wherever v . n is nonzero.
        let sol = interpolate(
            &m,
            &spaces,
            &fields(
                |x, probe| if probe.x < 1.0 { x.x } else { 0.0 },
                |_, _| Vector::new(1.0, 0.0),
            ),
        )
        .unwrap();
        let total: f64 = m.edges_of(EdgeKind::Fracture).map(|(_, e)| e.length).sum();
        assert!((dot(&sol.u, &matvec(&bs, &sol.p)) - total).abs() < 1e-12);
    }
}

#[test]
fn interface_coefficients_and_blocks() {
    let (m, spec) = vertical_fracture(1.0, 1.0, 100.0);
    let spec = all_neumann(&spec);
    let c = spec.interface(0, 0);
    assert!((c.eta - 1e-4).abs() < 1e-18);
    assert!((c.alpha - 1.25e-5).abs() < 1e-18);
    let spaces = Spaces::build(&m, cfg(1), &spec);
    let blocks = assemble_interface(&m, &spaces, &spec);
    let h = 1.0;
    // [q] = 2, {q} = 0 isolates the jump pairing.
    let odd = interpolate(
        &m,
        &spaces,
        &fields(|_, p| if p.x < 1.0 { 1.0 } else { -1.0 }, |_, _| Vector::zeros()),
    )
    .unwrap();
    assert!((dot(&odd.p, &matvec(&blocks.pp, &odd.p)) / (4.0 * h / c.eta) - 1.0).abs() < 1e-12);
    // [q] = 0, {q} = 1 isolates the average pairing.
    let one = vec![1.0; spaces.s.n_free()];
    assert!((dot(&one, &matvec(&blocks.pp, &one)) / (h / c.alpha) - 1.0).abs() < 1e-12);
    // Equal constant traces leave no interface residual.
    let w = vec![1.0; spaces.w.n_free()];
    let rs: Vec<f64> = matvec(&blocks.pp, &one)
        .iter()
        .zip(matvec(&blocks.p_gamma, &w))
        .map(|(a, b)| a + b)
        .collect();
    let rw: Vec<f64> = matvec(&blocks.gamma_p, &one)
        .iter()
        .zip(matvec(&blocks.gamma_gamma, &w))
        .map(|(a, b)| a + b)
        .collect();
    let scale = 1.0 / c.alpha;
    assert!(rs.iter().chain(&rw).all(|r| r.abs() < 1e-12 * scale));
    assert!(max_diff(&blocks.pp, &transpose(&blocks.pp)) < 1e-12 * scale);
    assert!(max_diff(&blocks.gamma_gamma, &transpose(&blocks.gamma_gamma)) < 1e-12 * scale);
    assert!(max_diff(&blocks.p_gamma, &transpose(&blocks.gamma_p)) < 1e-12 * scale);
}

#[test]
fn fracture_stiffness_values() {
    // K_G = kappa * thickness = 1. Hat function on two edges of length h:
    // 1/h + 1/h.
    for (h, length, expected) in [(1.0, 2.0, 2.0), (0.5, 1.0, 4.0)] {
        let (m, spec) = vertical_fracture(h, length, 100.0);
        assert_eq!(m.fractures[0].edges.len(), 2);
        let spaces = Spaces::build(&m, cfg(1), &spec);
        let a = assemble_fracture_stiffness(&m, &spaces, &spec);
        assert_eq!(a.shape(), (1, 1));
        assert!((a.to_dense()[[0, 0]] - expected).abs() < 1e-12);
        let (_, doubled) = vertical_fracture(h, length, 200.0);
        let a2 = assemble_fracture_stiffness(&m, &spaces, &doubled);
        assert!(max_diff(&a.map(|v| 2.0 * v), &a2) < 1e-12);
    }
    let (m, spec) = vertical_fracture(0.25, 1.0, 100.0);
    let spec = all_neumann(&spec);
    for k in 1..=3 {
        let spaces = Spaces::build(&m, cfg(k), &spec);
        let a = assemble_fracture_stiffness(&m, &spaces, &spec);
        assert!(max_diff(&a, &transpose(&a)) < 1e-12);
        assert!(matvec(&a, &vec![1.0; spaces.w.n_free()])
            .iter()
            .all(|v| v.abs() < 1e-11));
        let x = noise(k as u64, spaces.w.n_free());
        assert!(dot(&x, &matvec(&a, &x)) >= 0.0);
    }
}

#[test]
fn right_hand_side_examples() {
    let m = unit_square();
    let mut spec = all_neumann(&on_mesh(&base(), &m));
    spec.source = constant(0.0);
    let spaces = Spaces::build(&m, cfg(1), &spec);
    assert!(assemble_rhs(&m, &spaces, &spec).unwrap().iter().all(|v| *v == 0.0));
    spec.source = constant(1.0);
    for k in 1..=3 {
        let spaces = Spaces::build(&m, cfg(k), &spec);
        let rhs = assemble_rhs(&m, &spaces, &spec).unwrap();
        let o = spaces.offsets();
        assert!((rhs[o[1]..o[2]].iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}

fn sech2(z: f64) -> f64 {
    1.0 / z.cosh().powi(2)
}

#[test]
fn manufactured_source_integrates_to_symbolic_value() {
    let w = 0.1;
    let exact = -(1.0 - sech2(1.0 / w)) / (2.0 * w) + (1.0 - sech2(1.0 / (2.0 * w))) / (4.0 * w);
    let spec = all_neumann(&base());
    let m = build_initial_mesh(spec.domain.clone(), 1.0 / 32.0).unwrap();
    let spaces = Spaces::build(&m, cfg(3), &spec);
    let rhs = assemble_rhs(&m, &spaces, &spec).unwrap();
    let o = spaces.offsets();
    let sum: f64 = rhs[o[1]..o[2]].iter().sum();
    assert!((sum - exact).abs() < 1e-10, "{sum} vs {exact}");
}

#[test]
fn block_structure() {
    for m in test_meshes() {
        let spec = on_mesh(&base(), &m);
        for k in 1..=2 {
            let (sys, spaces) = assemble_system(&m, &spec, cfg(k)).unwrap();
            assert_eq!(sys.dim(), spaces.v.n_free() + spaces.s.n_free() + spaces.w.n_free());
            let scale = 1e5;
            let mm = sys.block(Block::V, Block::V);
            assert!(max_diff(&mm, &transpose(&mm)) < 1e-12);
            assert!(
                max_diff(
                    &sys.block(Block::V, Block::S),
                    &transpose(&sys.block(Block::S, Block::V)).map(|v| -v)
                ) < 1e-12
            );
            for (r, c) in [(Block::S, Block::S), (Block::W, Block::W)] {
                let b = sys.block(r, c);
                assert!(max_diff(&b, &transpose(&b)) < 1e-12 * scale);
            }
            assert!(
                max_diff(
                    &sys.block(Block::S, Block::W),
                    &transpose(&sys.block(Block::W, Block::S))
                ) < 1e-12 * scale
            );
            assert_eq!(sys.block(Block::V, Block::W).nnz(), 0);
            assert_eq!(sys.block(Block::W, Block::V).nnz(), 0);
            let again = assemble_system(&m, &spec, cfg(k)).unwrap().0;
            assert_eq!(again.matrix, sys.matrix);
            assert_eq!(again.rhs, sys.rhs);
        }
    }
}

#[test]
fn representable_solutions_leave_no_residual() {
    for k in 1..=3 {
        for (spec, exact) in [linear_patch(), constant_solution(1.5)] {
            for m in [two_squares(true), with_hanging_node(true)] {
                let spec = on_mesh(&spec, &m);
                let spaces = Spaces::build(&m, cfg(k), &spec);
                let sys = assemble_system_with(&m, &spaces, &spec).unwrap();
                let x = interpolate(&m, &spaces, &exact).unwrap().to_vector();
                let ax = matvec(&sys.matrix, &x);
                let r = ax.iter().zip(&sys.rhs).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
                assert!(r < 1e-10, "k={k} residual {r:e}");
            }
        }
    }
}

#[test]
fn local_mass_is_conserved() {
    let spec = base();
    let mut meshes = vec![build_initial_mesh(spec.domain.clone(), 0.25).unwrap()];
    let first = meshes[0].clone();
    let near: Vec<usize> = (0..first.n_elements())
        .filter(|&e| (first.elements[e].center.x - 1.0).abs() < 0.2)
        .collect();
    meshes.push(sdgfrac_core::mesh::refine(&first, &near).unwrap());
    for m in &meshes {
        for k in 1..=2 {
            let (sys, spaces) = assemble_system(m, &spec, cfg(k)).unwrap();
            let (sol, _) = solve(&sys, &spaces).unwrap();
            let field = sol.bulk(m, &spaces);
            let mut checked = 0;
            for (e, _) in m.edges_of(EdgeKind::Interior) {
                let (flux, source) = dual_volume_balance(m, &field, &spec, e, k);
                assert!((flux - source).abs() <= 1e-10, "edge {e}: {flux} vs {source}");
                checked += 1;
            }
            assert!(checked > 0);
        }
    }
}
