//! Benchmark problems with closed-form data.

use std::sync::Arc;

use crate::mesh::{DomainSpec, Fracture, Rect, SegmentPermeability};
use crate::problem::{
    constant, isotropic, line_constant, BoundaryCondition, BoundaryPiece, BulkBoundary, ExactSolution, LineFn,
    LineVecFn, ProblemSpec, TipCondition,
};
use crate::{Point, Vector};

pub const THICKNESS: f64 = 0.01;
pub const XI: f64 = 0.75;

/// A named problem, with its exact solution when one is known.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: String,
    pub spec: ProblemSpec,
    pub exact: Option<ExactSolution>,
}

pub const NAMES: [&str; 6] = ["case1-a0.1", "case1-a0.01", "case2", "lshape", "multifrac", "patch"];

pub fn by_name(name: &str) -> Option<Benchmark> {
    let (spec, exact) = match name {
        "case1-a0.1" => {
            let (s, e) = case1(0.1);
            (s, Some(e))
        }
        "case1-a0.01" => {
            let (s, e) = case1(0.01);
            (s, Some(e))
        }
        "case2" => (case2(), None),
        "lshape" => (case3_lshape(), None),
        "multifrac" => (case4_multifrac(), None),
        "patch" => {
            let (s, e) = linear_patch();
            (s, Some(e))
        }
        _ => return None,
    };
    Some(Benchmark {
        name: name.to_string(),
        spec,
        exact,
    })
}

fn segments(points: &[(f64, f64)], kappa: &[f64]) -> Fracture {
    Fracture {
        points: points.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        permeability: kappa
            .iter()
            .map(|&k| SegmentPermeability {
                normal: k,
                tangential: k,
            })
            .collect(),
        thickness: THICKNESS,
    }
}

fn rectangle_with_vertical_fracture(kappa: &[f64], breaks: &[f64]) -> DomainSpec {
    let mut pts = vec![(1.0, 0.0)];
    pts.extend(breaks.iter().map(|&y| (1.0, y)));
    pts.push((1.0, 1.0));
    DomainSpec {
        outline: vec![Rect::new(0.0, 0.0, 2.0, 1.0)],
        fractures: vec![segments(&pts, kappa)],
    }
}

fn lshape_outline() -> Vec<Rect> {
    vec![Rect::new(0.0, 0.0, 2.0, 1.0), Rect::new(1.0, -1.0, 2.0, 0.0)]
}

fn sech2(z: f64) -> f64 {
    let c = z.cosh();
    1.0 / (c * c)
}

/// Smooth transition layer of width `w` across the fracture `x = 1`, with
/// Dirichlet data everywhere.
pub fn case1(w: f64) -> (ProblemSpec, ExactSolution) {
    let kappa = 100.0;
    let domain = rectangle_with_vertical_fracture(&[kappa], &[]);
    let eta = THICKNESS / kappa;
    let alpha = eta * (XI / 2.0 - 0.25);
    let jump = 3.0 * eta / (8.0 * w);
    let pressure: Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync> = Arc::new(move |x: &Point, probe: &Point| {
        let s = x.x - 1.0;
        if probe.x < 1.0 {
            x.y + 0.5 * (s / w).tanh() + 0.5
        } else {
            x.y + 0.5 * (s / (2.0 * w)).tanh() + 0.5 + jump
        }
    });
    let flux: Arc<dyn Fn(&Point, &Point) -> Vector + Send + Sync> = Arc::new(move |x: &Point, probe: &Point| {
        let s = x.x - 1.0;
        let dx = if probe.x < 1.0 {
            0.5 / w * sech2(s / w)
        } else {
            0.25 / w * sech2(s / (2.0 * w))
        };
        Vector::new(-dx, -1.0)
    });
    let source: Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync> = Arc::new(move |x: &Point, probe: &Point| {
        let s = x.x - 1.0;
        if probe.x < 1.0 {
            (s / w).tanh() * sech2(s / w) / (w * w)
        } else {
            (s / (2.0 * w)).tanh() * sech2(s / (2.0 * w)) / (4.0 * w * w)
        }
    });
    let pg_shift = 0.5 + 3.0 * eta / (16.0 * w) + alpha / (4.0 * w);
    let fracture_pressure: LineFn = Arc::new(move |x: &Point| x.y + pg_shift);
    let fracture_gradient: LineVecFn = Arc::new(|_| Vector::new(0.0, 1.0));
    let spec = ProblemSpec {
        domain,
        permeability: isotropic(1.0),
        xi: XI,
        source,
        fracture_sources: vec![line_constant(1.0 / (4.0 * w * THICKNESS))],
        boundary: BulkBoundary::uniform(BoundaryCondition::Dirichlet(pressure.clone())),
        tips: vec![[
            TipCondition::Dirichlet(pg_shift),
            TipCondition::Dirichlet(1.0 + pg_shift),
        ]],
        initial_h: 0.25,
    };
    let exact = ExactSolution {
        pressure,
        flux,
        fracture_pressure: vec![fracture_pressure],
        fracture_gradient: vec![fracture_gradient],
    };
    (spec, exact)
}

fn piece(x0: f64, y0: f64, x1: f64, y1: f64, value: f64) -> BoundaryPiece {
    BoundaryPiece {
        region: Rect::new(x0, y0, x1, y1),
        condition: BoundaryCondition::Dirichlet(constant(value)),
    }
}

/// Conductive fracture interrupted by a barrier on `{1} x [1/4, 3/4]`.
pub fn case2() -> ProblemSpec {
    ProblemSpec {
        domain: rectangle_with_vertical_fracture(&[200.0, 0.002, 200.0], &[0.25, 0.75]),
        permeability: isotropic(1.0),
        xi: XI,
        source: constant(0.0),
        fracture_sources: vec![line_constant(0.0)],
        boundary: BulkBoundary {
            default: BoundaryCondition::Neumann(constant(0.0)),
            pieces: vec![piece(2.0, 0.0, 2.0, 1.0, 1.0), piece(0.0, 0.0, 0.0, 1.0, 0.0)],
        },
        tips: vec![[TipCondition::Neumann; 2]],
        initial_h: 0.25,
    }
}

/// L-shaped domain crossed by one polyline fracture with a barrier part.
pub fn case3_lshape() -> ProblemSpec {
    let fracture = segments(
        &[(0.5, 1.0), (0.5, 0.5), (1.0, 0.5), (1.5, 0.5), (1.5, 0.0), (1.5, -1.0)],
        &[100.0, 100.0, 0.001, 0.001, 100.0],
    );
    ProblemSpec {
        domain: DomainSpec {
            outline: lshape_outline(),
            fractures: vec![fracture],
        },
        permeability: isotropic(1.0),
        xi: XI,
        source: constant(0.0),
        fracture_sources: vec![line_constant(0.0)],
        boundary: BulkBoundary {
            default: BoundaryCondition::Neumann(constant(0.0)),
            pieces: vec![piece(0.0, 1.0, 2.0, 1.0, 1.0), piece(1.0, -1.0, 2.0, -1.0, 0.0)],
        },
        tips: vec![[TipCondition::Dirichlet(1.0), TipCondition::Dirichlet(0.0)]],
        initial_h: 0.5,
    }
}

/// L-shaped domain with four disjoint fractures.
pub fn case4_multifrac() -> ProblemSpec {
    let fractures = vec![
        segments(&[(0.5, 0.5), (1.0, 0.5)], &[100.0]),
        segments(&[(1.5, 0.5), (1.5, 1.0)], &[0.001]),
        segments(&[(1.5, 0.0), (2.0, 0.0)], &[0.01]),
        segments(&[(1.5, -1.0), (1.5, -0.5)], &[100.0]),
    ];
    ProblemSpec {
        domain: DomainSpec {
            outline: lshape_outline(),
            fractures,
        },
        permeability: isotropic(1.0),
        xi: XI,
        source: constant(0.0),
        fracture_sources: vec![line_constant(0.0); 4],
        boundary: BulkBoundary {
            default: BoundaryCondition::Neumann(constant(0.0)),
            pieces: vec![piece(0.0, 0.0, 0.0, 1.0, 1.0), piece(1.0, -1.0, 2.0, -1.0, 0.0)],
        },
        tips: vec![
            [TipCondition::Neumann; 2],
            [TipCondition::Neumann; 2],
            [TipCondition::Neumann; 2],
            [TipCondition::Dirichlet(0.0), TipCondition::Neumann],
        ],
        initial_h: 0.5,
    }
}

/// Globally linear solution `p = p_G = y`, reproduced exactly for every
/// order.
pub fn linear_patch() -> (ProblemSpec, ExactSolution) {
    let pressure: Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync> = Arc::new(|x: &Point, _: &Point| x.y);
    let spec = ProblemSpec {
        domain: rectangle_with_vertical_fracture(&[100.0], &[]),
        permeability: isotropic(1.0),
        xi: XI,
        source: constant(0.0),
        fracture_sources: vec![line_constant(0.0)],
        boundary: BulkBoundary::uniform(BoundaryCondition::Dirichlet(pressure.clone())),
        tips: vec![[TipCondition::Dirichlet(0.0), TipCondition::Dirichlet(1.0)]],
        initial_h: 1.0,
    };
    let exact = ExactSolution {
        pressure,
        flux: Arc::new(|_, _| Vector::new(0.0, -1.0)),
        fracture_pressure: vec![Arc::new(|x: &Point| x.y)],
        fracture_gradient: vec![Arc::new(|_| Vector::new(0.0, 1.0))],
    };
    (spec, exact)
}

/// Constant pressure `c` everywhere with no flow.
pub fn constant_solution(c: f64) -> (ProblemSpec, ExactSolution) {
    let spec = ProblemSpec {
        domain: rectangle_with_vertical_fracture(&[100.0], &[]),
        permeability: isotropic(1.0),
        xi: XI,
        source: constant(0.0),
        fracture_sources: vec![line_constant(0.0)],
        boundary: BulkBoundary::uniform(BoundaryCondition::Dirichlet(constant(c))),
        tips: vec![[TipCondition::Neumann; 2]],
        initial_h: 1.0,
    };
    let exact = ExactSolution {
        pressure: constant(c),
        flux: Arc::new(|_, _| Vector::zeros()),
        fracture_pressure: vec![line_constant(c)],
        fracture_gradient: vec![Arc::new(|_| Vector::zeros())],
    };
    (spec, exact)
}

/// Largest violation of the two interface conditions
/// `eta {u.n} = [p]` and `alpha [u.n] = {p} - p_G`, sampled at 100 points
/// per fracture segment.
pub fn verify_interface(exact: &ExactSolution, spec: &ProblemSpec) -> f64 {
    let mut worst: f64 = 0.0;
    let eps = 1e-9 * spec.domain.diameter();
    for (f, fr) in spec.domain.fractures.iter().enumerate() {
        for s in 0..fr.num_segments() {
            let (a, b) = fr.segment(s);
            let n = fr.normal(s);
            let c = spec.interface(f, s);
            for i in 0..100 {
                let x = a + (b - a) * ((i as f64 + 0.5) / 100.0);
                let (q1, q2) = (x - n * eps, x + n * eps);
                let (p1, p2) = ((exact.pressure)(&x, &q1), (exact.pressure)(&x, &q2));
                let (u1, u2) = ((exact.flux)(&x, &q1).dot(&n), (exact.flux)(&x, &q2).dot(&n));
                let pg = (exact.fracture_pressure[f])(&x);
                worst = worst
                    .max((c.eta * 0.5 * (u1 + u2) - (p1 - p2)).abs())
                    .max((c.alpha * (u1 - u2) - (0.5 * (p1 + p2) - pg)).abs());
            }
        }
    }
    worst
}
